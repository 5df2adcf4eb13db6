from __future__ import annotations

from typing import Callable, Dict

import click

from anyonlt import __version__
from anyonlt.config import RunConfig
from anyonlt.pipelines import (
    run_all,
    run_constants,
    run_covering,
    run_two_anyon,
    summarize_runs,
    verify_bessel,
    verify_diamagnetic,
)
from anyonlt.pipelines.common import Report, RunOptions, SuiteRun, resolve_config, run_and_exit, suite_options

RUNNERS: Dict[str, Callable[[RunConfig, SuiteRun], None]] = {
    "verify-bessel": verify_bessel.run_bessel,
    "verify-diamagnetic": verify_diamagnetic.run_diamagnetic,
    "two-anyon": run_two_anyon.run_two_anyon,
    "covering": run_covering.run_covering,
    "constants": run_constants.run_constants,
    "all": run_all.run_everything,
}


def run(config: RunConfig, *, record_runtime: bool = False) -> Report:
    """Dispatch to the suite named in the config and write its artefacts."""
    suite_run = SuiteRun(config.suite, config, config.out_dir, record_runtime=record_runtime)
    RUNNERS[config.suite](config, suite_run)
    return suite_run.finish()


@click.group()
@click.version_option(__version__, prog_name="anyonlt")
def main():
    """Numerical checks for the extended-anyon Lieb-Thirring inequality.

    Every suite writes report.json (plus CSV/SVG artefacts) under <out>/<suite>/ and exits
    0 when all checks pass, 1 when a check fails and 2 on configuration errors.
    """


@main.command(name="run")
@suite_options
def run_command(opts: RunOptions):
    """Run the suite named in --config (default: all)."""
    config = resolve_config(opts)
    run_and_exit(RUNNERS[config.suite], config, opts)


main.add_command(verify_bessel.main, name="verify-bessel")
main.add_command(verify_diamagnetic.main, name="verify-diamagnetic")
main.add_command(run_two_anyon.main, name="two-anyon")
main.add_command(run_covering.main, name="covering")
main.add_command(run_constants.main, name="constants")
main.add_command(run_all.main, name="all")
main.add_command(summarize_runs.main, name="summarize")


if __name__ == "__main__":
    main()
