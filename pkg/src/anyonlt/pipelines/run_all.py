from __future__ import annotations

import logging
from dataclasses import replace

import click

from anyonlt.config import RunConfig
from anyonlt.pipelines.common import RunOptions, SuiteRun, resolve_config, run_and_exit, suite_options
from anyonlt.pipelines.run_constants import run_constants
from anyonlt.pipelines.run_covering import run_covering
from anyonlt.pipelines.run_two_anyon import run_two_anyon
from anyonlt.pipelines.verify_bessel import run_bessel
from anyonlt.pipelines.verify_diamagnetic import run_diamagnetic

log = logging.getLogger(__name__)

STAGES = (
    ("verify-bessel", run_bessel),
    ("verify-diamagnetic", run_diamagnetic),
    ("two-anyon", run_two_anyon),
    ("covering", run_covering),
    ("constants", run_constants),
)


def run_everything(config: RunConfig, run: SuiteRun) -> None:
    """
    Full pipeline:
      1) Bessel plateau, limit and j'_nu bound
      2) Free spectrum, gauge invariance, diamagnetic and counting checks
      3) Two-anyon energies, scaling, trial state and alpha profile
      4) Covering of built-in densities
      5) Constant chain and ledger
    Every stage writes its own report; this one collects their checks.
    """
    for name, runner in STAGES:
        click.echo(f"$ {name}")
        stage = SuiteRun(name, replace(config, suite=name), run.out.parent, record_runtime=run.record_runtime)
        runner(stage.config, stage)
        report = stage.finish()
        for c in report.checks:
            run.report.checks.append(replace(c, name=f"{name}/{c.name}"))
            if c.runtime is not None:
                run.timings[f"{name}/{c.name}"] = c.runtime
        click.echo(f"  {name}: {report.status}")


@click.command()
@suite_options
def main(opts: RunOptions):
    """Every suite at its default desk-scale parameters."""
    config = resolve_config(opts, "all")
    run_and_exit(run_everything, config, opts)


if __name__ == "__main__":
    main()
