from __future__ import annotations

import logging
from typing import Optional

import click
import numpy as np
import pandas as pd

from anyonlt.config import RunConfig
from anyonlt.data.densities import GENERATORS, generate_density, load_density_csv
from anyonlt.methods.covering import CoverResult, DensityGrid, cover_density, square_mass
from anyonlt.pipelines.common import (
    RunOptions,
    SuiteRun,
    fan_out,
    now,
    resolve_config,
    run_and_exit,
    spawn_seeds,
    suite_options,
    write_json,
)
from anyonlt.pipelines.plots import emit_plot

log = logging.getLogger(__name__)


def _density_frame(density: DensityGrid) -> pd.DataFrame:
    yy, xx = np.meshgrid(density.ys, density.xs, indexing="ij")
    return pd.DataFrame({"x": xx.ravel(), "y": yy.ravel(), "value": density.values.ravel()})


def _squares_doc(result: CoverResult) -> dict:
    c = result.collection
    return {
        "target": result.target,
        "covered": result.covered,
        "max_overlap": result.max_overlap,
        "mass_tolerance": result.mass_tolerance,
        "squares": [
            {"center": list(sq.center), "side": sq.side, "mass": float(m)}
            for sq, m in zip(c.squares, c.masses)
        ],
        "overlap_histogram": c.overlap_histogram,
    }


def _monotone_mass(density: DensityGrid, seed: int, centers: int = 100) -> bool:
    rng = np.random.default_rng(seed)
    x0, x1, y0, y1 = density.extent
    sides = np.linspace(0.0, 2.0 * max(x1 - x0, y1 - y0), 60)
    for cx, cy in zip(rng.uniform(x0, x1, centers), rng.uniform(y0, y1, centers)):
        masses = [square_mass(density, (cx, cy), L) for L in sides]
        if np.any(np.diff(masses) < -1e-12 * max(masses[-1], 1.0)):
            return False
    return True


def run_covering(config: RunConfig, run: SuiteRun) -> None:
    s = config.covering
    seeds = spawn_seeds(config.seed, s.seeds)
    overlap_cap = int(config.tol("max_overlap"))
    factor = config.tol("mass_quadrature")

    if s.density_csv:
        cases = [("csv", 0, load_density_csv(s.density_csv))]
    else:
        cases = [
            (kind, seed, generate_density(kind, n_nodes=s.n_nodes, extent=s.extent, total_mass=s.total_mass,
                                          seed=seed, jitter=s.jitter))
            for kind in s.densities
            for seed in seeds
        ]

    t = now()
    results = fan_out(lambda case: cover_density(case[2], s.n_lower, s.n_upper), cases, config.parallel)

    rows = []
    for (kind, seed, _), res in zip(cases, results):
        worst = float(np.max(res.mass_errors)) if len(res.mass_errors) else 0.0
        rows.append({"density": kind, "seed": seed, "squares": len(res.collection.squares),
                     "covered": res.covered, "max_overlap": res.max_overlap,
                     "mass_error": worst, "mass_tolerance": res.mass_tolerance})
    table = pd.DataFrame(rows)
    run.csv("covering.csv", table)

    mass_ok = all(r["mass_error"] <= factor / 2.0 * r["mass_tolerance"] for r in rows)
    run.check("mass_calibration", mass_ok, float(table["mass_error"].max()), float(table["mass_tolerance"].max()),
              factor, started=t, detail="per-square |mass - target| against 2 quadrature errors")
    run.check("coverage", bool(table["covered"].all()), int(table["covered"].sum()), len(table), None)
    run.check("max_overlap", int(table["max_overlap"].max()) <= overlap_cap, int(table["max_overlap"].max()),
              overlap_cap, None)
    for kind, group in table.groupby("density", sort=True):
        spread = int(group["max_overlap"].max() - group["max_overlap"].min())
        run.check(f"overlap_stability({kind})", None, spread, 2, None, detail="max overlap spread across seeds")

    t = now()
    run.check("monotone_mass", _monotone_mass(cases[0][2], seeds[0]), True, None, None, started=t)

    kind, seed, density = cases[0]
    write_json(run.out / "squares.json", _squares_doc(results[0]))
    run.svg("covering_overlay.svg", emit_plot(
        _density_frame(density), "overlay", title=f"{kind} density, {len(results[0].collection.squares)} squares",
        squares=[(sq.center, sq.side) for sq in results[0].collection.squares],
    ))


@click.command()
@suite_options
@click.option("--density", type=click.Choice(GENERATORS), default=None, help="built-in density generator")
@click.option("--csv", "density_csv", type=str, default=None, help="density as x,y,value rows")
@click.option("--n-lower", type=float, default=None, help="N_<")
@click.option("--n-upper", type=float, default=None, help="N_>")
@click.option("--seeds", type=int, default=None, help="number of jitter seeds per density")
def main(opts: RunOptions, density: Optional[str], density_csv: Optional[str], n_lower: Optional[float],
         n_upper: Optional[float], seeds: Optional[int]):
    """Mass-calibrated squares, Besicovitch selection and coverage audit."""
    config = resolve_config(opts, "covering")
    changes = {
        "densities": (density,) if density else None,
        "density_csv": density_csv,
        "n_lower": n_lower,
        "n_upper": n_upper,
        "seeds": seeds,
    }
    changes = {k: v for k, v in changes.items() if v is not None}
    if changes:
        config = config.with_block("covering", **changes)
    run_and_exit(run_covering, config, opts)


if __name__ == "__main__":
    main()
