from __future__ import annotations

import logging
import math
from typing import Optional

import click
import numpy as np
import pandas as pd

from anyonlt.config import RunConfig
from anyonlt.methods.magnetic_grid import (
    FieldSpec,
    LinkGrid2D,
    assemble_magnetic_laplacian,
    birman_schwinger_bound,
    convergence_order,
    diamagnetic_check,
    field_phases,
    gauge_transform,
    node_coordinates,
)
from anyonlt.methods.operators import lowest_eigenvalues
from anyonlt.pipelines.common import (
    RunOptions,
    SuiteRun,
    fan_out,
    now,
    resolve_config,
    run_and_exit,
    spawn_seeds,
    suite_options,
    within,
    write_json,
)
from anyonlt.pipelines.plots import emit_plot

log = logging.getLogger(__name__)

FREE_LEVELS = (0.0, math.pi**2, math.pi**2, 2.0 * math.pi**2)


def run_diamagnetic(config: RunConfig, run: SuiteRun) -> None:
    s = config.magnetic_grid
    eig_tol = config.tol("eigen_tol")

    # free Neumann spectrum
    t = now()
    free = lowest_eigenvalues(assemble_magnetic_laplacian(LinkGrid2D(n_side=s.free_n_side)), 4, eig_tol,
                              seed=config.seed)
    vals = [float(v) for v in free.eigenvalues]
    run.check("free_spectrum", within(vals, FREE_LEVELS, config.tol("free_spectrum_rel")), vals, list(FREE_LEVELS),
              config.tol("free_spectrum_rel"), started=t)

    t = now()
    sides = (17, 33, 65)
    lam = [lowest_eigenvalues(assemble_magnetic_laplacian(LinkGrid2D(n_side=n)), 2, eig_tol,
                              seed=config.seed).eigenvalues[1] for n in sides]
    order = convergence_order(*lam)
    run.check("free_convergence_order", order >= 1.8, order, 1.8, None, started=t)

    # gauge invariance
    t = now()
    gauge_seed, *field_seeds = spawn_seeds(config.seed, s.fields + 1)
    rng = np.random.default_rng(gauge_seed)
    n = s.gauge_n_side
    base = field_phases(FieldSpec("random", s.amplitude, gauge_seed).samples(n), 1.0)
    moved = gauge_transform(base, rng.uniform(-np.pi, np.pi, size=(n, n)))
    k = 6
    a = lowest_eigenvalues(assemble_magnetic_laplacian(base), k, method="dense").eigenvalues
    b = lowest_eigenvalues(assemble_magnetic_laplacian(moved), k, method="dense").eigenvalues
    drift = float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))))
    run.check("gauge_invariance", drift <= config.tol("gauge"), drift, 0.0, config.tol("gauge"), started=t)

    # diamagnetic inequality, Kato floor and counting over random fields
    t = now()
    nodes = s.n_side**2
    bs = birman_schwinger_bound(s.Lambda, m=s.bs_m, shift_e=s.bs_e)

    def one_field(seed: int):
        sources = np.random.default_rng(seed).choice(nodes, size=s.sources, replace=False)
        return diamagnetic_check(FieldSpec("random", s.amplitude, seed), s.shift_e, sources.tolist(),
                                 n_side=s.n_side, Lambda=s.Lambda, tol=eig_tol, seed=seed)

    reports = fan_out(one_field, field_seeds, config.parallel)
    violation = max(r.max_violation for r in reports)
    floor = min(r.lambda1_field for r in reports)
    counts = [r.count_field for r in reports]
    run.check("green_diamagnetic", violation <= config.tol("green_violation"), violation, 0.0,
              config.tol("green_violation"), started=t)
    run.check("kato_floor", floor >= -config.tol("kato_floor"), floor, 0.0, config.tol("kato_floor"))
    run.check("count_below_birman_schwinger", max(counts) <= bs, max(counts), bs, None,
              detail=f"m = {s.bs_m:g}, e = {s.bs_e:g}, Lambda = {s.Lambda:g}")

    write_json(run.out / "diamagnetic.json", {
        "max_violation": violation,
        "lambda1_gaps": [r.lambda1_gap for r in reports],
        "counts": counts,
        "birman_schwinger": bs,
        "shift_e": s.shift_e,
    })
    frame = pd.DataFrame({
        "field": range(len(reports)),
        "max_violation": [r.max_violation for r in reports],
        "lambda1_gap": [r.lambda1_gap for r in reports],
    })
    run.csv("diamagnetic_fields.csv", frame)
    run.svg("lambda1_gaps.svg", emit_plot(frame[["field", "lambda1_gap"]], "line", title="λ₁(A) − λ₁(0)"))

    samples = FieldSpec("random", s.amplitude, field_seeds[0]).samples(s.gauge_n_side)
    pts = node_coordinates(s.gauge_n_side)
    run.svg("field.svg", emit_plot(pd.DataFrame({"x": pts[:, 0], "y": pts[:, 1], "value": samples.ravel()}),
                                   "heatmap", title="B"))


@click.command()
@suite_options
@click.option("--n-side", type=int, default=None, help="grid nodes per side for the field checks")
@click.option("--fields", type=int, default=None, help="number of random fields")
@click.option("--amplitude", type=float, default=None, help="field amplitude bound")
@click.option("--shift-e", type=click.FloatRange(min=0.0, min_open=True), default=None,
              help="shift e > 0 of the Green functions (H + e)^-1")
def main(opts: RunOptions, n_side: Optional[int], fields: Optional[int], amplitude: Optional[float],
         shift_e: Optional[float]):
    """Free spectrum, gauge invariance, diamagnetic Green inequality and level counting."""
    config = resolve_config(opts, "verify-diamagnetic")
    given = {"n_side": n_side, "fields": fields, "amplitude": amplitude, "shift_e": shift_e}
    changes = {k: v for k, v in given.items() if v is not None}
    if changes:
        config = config.with_block("magnetic_grid", **changes)
    run_and_exit(run_diamagnetic, config, opts)


if __name__ == "__main__":
    main()
