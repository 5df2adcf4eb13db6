from __future__ import annotations

import functools
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar

import click
import dotenv
import numpy as np
import pandas as pd
from tabulate import tabulate

from anyonlt import __version__
from anyonlt.config import (
    RunConfig,
    env_log_level,
    env_out_dir,
    env_parallel,
    load_run_config,
    parse_tolerance_flags,
)
from anyonlt.errors import AnyonLTError, ConfigError

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"


# ---------- Report ----------

@dataclass
class CheckRecord:
    name: str
    status: str
    measured: Any = None
    bound: Any = None
    tolerance: Any = None
    runtime: Optional[float] = None
    detail: Optional[str] = None

    def to_dict(self, record_runtime: bool) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "measured": self.measured,
            "bound": self.bound,
            "tolerance": self.tolerance,
            "runtime": self.runtime if record_runtime else None,
            "detail": self.detail,
        }


@dataclass
class Report:
    suite: str
    config: dict
    checks: List[CheckRecord] = field(default_factory=list)
    version: str = __version__
    extras: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return FAIL if any(c.status == FAIL for c in self.checks) else PASS

    @property
    def ok(self) -> bool:
        return self.status == PASS

    def to_dict(self, record_runtime: bool = False) -> dict:
        return {
            "suite": self.suite,
            "status": self.status,
            "version": self.version,
            "config": self.config,
            "checks": [c.to_dict(record_runtime) for c in self.checks],
            "extras": self.extras,
        }

    def table(self) -> str:
        rows = [[c.name, c.status, _short(c.measured), _short(c.bound), _short(c.tolerance)] for c in self.checks]
        return tabulate(rows, headers=["check", "status", "measured", "bound", "tol"], tablefmt="github")


def _short(x: Any) -> str:
    if x is None:
        return "-"
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_short(v) for v in x[:4]) + (", …]" if len(x) > 4 else "]")
    return str(x)


class SuiteRun:
    """Collects checks and timings for one suite and owns its output directory."""

    def __init__(self, suite: str, config: RunConfig, out_root: str | Path, *, record_runtime: bool = False):
        self.config = config
        self.record_runtime = record_runtime
        self.out = Path(out_root) / suite
        self.out.mkdir(parents=True, exist_ok=True)
        self.report = Report(suite=suite, config=config.echo())
        self.timings: dict = {}
        self._t0 = time.perf_counter()
        log.info("suite %s started", suite)

    def check(
        self,
        name: str,
        ok: Optional[bool],
        measured: Any = None,
        bound: Any = None,
        tolerance: Any = None,
        *,
        started: Optional[float] = None,
        detail: Optional[str] = None,
    ) -> CheckRecord:
        """ok = None records the check as skipped (informational)."""
        runtime = None if started is None else time.perf_counter() - started
        status = SKIPPED if ok is None else (PASS if ok else FAIL)
        rec = CheckRecord(name, status, jsonable(measured), jsonable(bound), jsonable(tolerance), runtime, detail)
        self.report.checks.append(rec)
        if runtime is not None:
            self.timings[name] = runtime
        if status == FAIL:
            log.warning("check %s failed: measured %s, bound %s", name, _short(rec.measured), _short(rec.bound))
        return rec

    def csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.out / name
        frame.to_csv(path, index=False, float_format="%.12g")
        return path

    def svg(self, name: str, document: str) -> Path:
        path = self.out / name
        path.write_text(document)
        return path

    def finish(self) -> Report:
        self.timings["total"] = time.perf_counter() - self._t0
        write_json(self.out / "report.json", self.report.to_dict(self.record_runtime))
        write_json(self.out / "timings.json", self.timings)
        log.info("suite %s finished: %s in %.2fs", self.report.suite, self.report.status, self.timings["total"])
        return self.report


# ---------- Serialization ----------

def jsonable(x: Any) -> Any:
    """Plain JSON types; non-finite floats become None."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")


# ---------- Parameter helpers ----------

def iter_range(text: str) -> List[float]:
    """
    text can be:
      - a comma list: "0.2,0.5,0.8"
      - a range: "start:stop:step" e.g. "0.0:2.0:0.25"
    """
    text = text.strip()
    if ":" in text:
        s, e, st = [float(x) for x in text.split(":")]
        if st <= 0:
            raise ValueError(f"range step must be positive in {text!r}")
        count = int(math.floor((e - s) / st + 1e-9)) + 1
        # integer stepping keeps the grid free of accumulated rounding
        return [round(s + i * st, 12) for i in range(count)]
    return [float(x) for x in text.split(",") if x.strip()]


def spawn_seeds(seed: int, n: int) -> List[int]:
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


def fan_out(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """fn over items, results in submission order."""
    items = list(items)
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def evenly(lo: float, hi: float, count: int, *, open_left: bool = False) -> List[float]:
    """`count` evenly spaced values in [lo, hi] (or (lo, hi] with open_left)."""
    if open_left:
        return [lo + (hi - lo) * (i + 1) / count for i in range(count)]
    if count == 1:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def now() -> float:
    return time.perf_counter()


def relative_error(measured: float, reference: float) -> float:
    return abs(measured - reference) / abs(reference)


def within(values: Sequence[float], refs: Sequence[float], rel: float) -> bool:
    """Relative agreement; a zero reference is compared in absolute terms."""
    return all(abs(v - r) <= rel * (abs(r) if r else 1.0) for v, r in zip(values, refs))


# ---------- Command plumbing ----------

@dataclass(frozen=True)
class RunOptions:
    config_path: Optional[str] = None
    out: Optional[str] = None
    seed: Optional[int] = None
    parallel: Optional[int] = None
    tol: Tuple[str, ...] = ()
    record_runtime: bool = False
    verbose: bool = False


def suite_options(fn):
    """Shared flags of every suite command; the wrapped function receives a RunOptions first."""

    @click.option("--verbose", "-v", is_flag=True, help="debug logging")
    @click.option("--record-runtime", is_flag=True, help="keep per-check runtimes in report.json")
    @click.option("--tol", multiple=True, metavar="NAME=VALUE", help="tolerance override (repeatable)")
    @click.option("--parallel", type=int, default=None, help="worker threads for independent cases")
    @click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="run seed")
    @click.option("--out", type=str, default=None, help="output root (ANYONLT_OUT overrides)")
    @click.option("--config", "config_path", type=str, default=None, help="RunConfig JSON")
    @functools.wraps(fn)
    def wrapper(config_path, out, seed, parallel, tol, record_runtime, verbose, **kwargs):
        opts = RunOptions(config_path, out, seed, parallel, tuple(tol), record_runtime, verbose)
        return fn(opts, **kwargs)

    return wrapper


def setup_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, env_log_level(), logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def resolve_config(opts: RunOptions, suite: Optional[str] = None) -> RunConfig:
    """RunConfig from file, then flags, then environment. Config errors exit with code 2."""
    dotenv.load_dotenv()
    setup_logging(opts.verbose)
    try:
        config = load_run_config(opts.config_path) if opts.config_path else RunConfig()
        changes: dict = {"suite": suite or config.suite, "parallel": env_parallel(config.parallel)}
        if opts.seed is not None:
            changes["seed"] = opts.seed
        if opts.parallel is not None:
            changes["parallel"] = opts.parallel
        if opts.out is not None:
            changes["out_dir"] = opts.out
        if env_out_dir():
            changes["out_dir"] = env_out_dir()
        config = replace(config, **changes)
        if opts.tol:
            config = config.with_tolerances(parse_tolerance_flags(opts.tol))
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    return config


def run_and_exit(runner: Callable[[RunConfig, SuiteRun], None], config: RunConfig, opts: RunOptions) -> Report:
    """Run one suite, print its table and exit with 0 (pass) or 1 (fail)."""
    run = SuiteRun(config.suite, config, config.out_dir, record_runtime=opts.record_runtime)
    try:
        runner(config, run)
    except AnyonLTError as exc:
        raise click.ClickException(str(exc)) from exc
    report = run.finish()
    click.echo(report.table())
    click.echo(f"{config.suite}: {report.status} → {run.out}")
    if not report.ok:
        sys.exit(1)
    return report
