from __future__ import annotations

import logging
import math
from dataclasses import replace
from typing import Optional

import click
import pandas as pd

from anyonlt.config import RunConfig
from anyonlt.data.configuration_io import load_configuration, load_outside_points
from anyonlt.errors import NumericError
from anyonlt.methods.core_model import MODES, AnyonParams, SquareDomain
from anyonlt.methods.two_anyon import (
    TwoBodyGrid,
    e2_alpha_profile,
    evaluate_state,
    ground_energy,
    hard_core_boson_energy,
    measured_slope,
    trial_state_bound,
    trial_state_on_grid,
)
from anyonlt.pipelines.common import (
    RunOptions,
    SuiteRun,
    fan_out,
    iter_range,
    now,
    relative_error,
    resolve_config,
    run_and_exit,
    suite_options,
)
from anyonlt.pipelines.plots import emit_plot

log = logging.getLogger(__name__)


def _grid(config: RunConfig, n_side: int, alpha: float, gamma: float, side: float = 1.0,
          mode: Optional[str] = None) -> TwoBodyGrid:
    cm = config.core_model
    return TwoBodyGrid(
        n_side=n_side,
        params=AnyonParams(alpha=alpha, radius=gamma * side),
        domain=SquareDomain(side=side),
        mode=mode or cm.mode,
        flux_weight=cm.flux_weight,
        budget=config.two_anyon.budget,
    )


def point_check(config: RunConfig, run: SuiteRun, alpha: float, gamma: float, mode: str, n_side: int) -> None:
    """
    One ground energy. A core_model.configuration file supplies the square and the outside
    particles; two_anyon.outside, when set, replaces the outside particles.
    """
    t = now()
    grid = _grid(config, n_side, alpha, gamma, mode=mode)
    if config.core_model.configuration:
        placed, _ = load_configuration(config.core_model.configuration)
        grid = replace(grid, domain=placed.domain, outside=placed.outside,
                       params=AnyonParams(alpha=alpha, radius=gamma * placed.domain.side))
    if config.two_anyon.outside:
        grid = replace(grid, outside=load_outside_points(config.two_anyon.outside))
    res = ground_energy(grid, tol=config.tol("eigen_tol"), seed=config.seed)
    name = f"E2(alpha={alpha:g},gamma={gamma:g},{mode},n={n_side})"
    if alpha == 0 and mode == "kinetic-only":
        err = relative_error(res.energy, math.pi**2)
        run.check(name, err <= config.tol("two_anyon_free_rel"), res.energy, math.pi**2,
                  config.tol("two_anyon_free_rel"), started=t)
    else:
        run.check(name, None, res.energy, None, None, started=t,
                  detail=None if res.modulus_gradient is None else f"functional total {res.functional_total:.6g}")
    run.report.extras.update(
        energy=res.energy,
        residual=res.residual,
        antisymmetry_defect=res.antisymmetry_defect,
        outside=grid.outside.tolist(),
    )


def run_two_anyon(config: RunConfig, run: SuiteRun) -> None:
    s = config.two_anyon
    eig_tol = config.tol("eigen_tol")

    # free-fermion limit
    t = now()
    free = ground_energy(_grid(config, s.n_side, 0.0, s.gamma, mode="kinetic-only"), tol=eig_tol, seed=config.seed)
    err = relative_error(free.energy, math.pi**2)
    run.check("free_limit", err <= config.tol("two_anyon_free_rel"), free.energy, math.pi**2,
              config.tol("two_anyon_free_rel"), started=t)

    # scaling: E(side 2)·4 = E(side 1) at equal γ
    t = now()
    e_unit, e_double = fan_out(
        lambda side: ground_energy(
            _grid(config, s.scaling_n_side, s.scaling_alpha, s.scaling_gamma, side, "kinetic-only"),
            tol=eig_tol, seed=config.seed,
        ).energy,
        (1.0, 2.0),
        config.parallel,
    )
    err = relative_error(4.0 * e_double, e_unit)
    run.check("scaling", err <= config.tol("scaling_rel"), 4.0 * e_double, e_unit, config.tol("scaling_rel"), started=t)

    # discretized trial state is a variational upper bound
    t = now()
    grid = _grid(config, s.scaling_n_side, s.scaling_alpha, s.scaling_gamma, mode="kinetic-only")
    rq = evaluate_state(grid, trial_state_on_grid(grid))["rayleigh_quotient"]
    run.check("trial_state_variational", rq >= e_unit - 1e-9, rq, e_unit, None, started=t)

    # trial-state bound by quadrature
    t = now()
    rows = []
    ok = True
    for alpha in s.trial_alphas:
        for R in s.trial_radii:
            try:
                b = trial_state_bound(
                    AnyonParams(alpha=alpha, radius=R), s.trial_nodes, config.tol("trial_convergence")
                )
            except NumericError as exc:
                log.warning("trial-state quadrature: %s", exc)
                ok = False
                continue
            rows.append({"alpha": alpha, "R": R, "raw_quotient": b.raw_quotient,
                         "kinetic_value": b.kinetic_value, "chain_value": b.chain_value,
                         "norm_squared": b.norm_squared})
    trial = pd.DataFrame(rows, columns=["alpha", "R", "raw_quotient", "kinetic_value", "chain_value", "norm_squared"])
    run.csv("trial_state.csv", trial)
    worst = float(trial["chain_value"].max()) if len(trial) else math.nan
    ok = ok and len(trial) > 0 and worst <= config.tol("trial_bound")
    run.check("trial_state_bound", ok, worst, config.tol("trial_bound"), config.tol("trial_convergence"), started=t)

    # statistics profile at small γ
    t = now()
    profile = e2_alpha_profile(s.gamma, s.n_side, s.profile_alphas, tol=eig_tol, workers=config.parallel)
    frame = pd.DataFrame(profile, columns=["alpha", "E2"])
    run.csv("e2_profile.csv", frame)
    slope = measured_slope(profile)
    run.check("e2_profile_slope", slope > 0, slope, 0.0, None, started=t,
              detail="inf over alpha != 1 of E2/|alpha-1|")
    run.report.extras["measured_slope"] = slope
    at_one = [e for a, e in profile if a == 1.0]
    if at_one:
        alpha_one_checks(config, run, at_one[0])
    run.svg("e2_profile.svg", emit_plot(frame, "line", x="alpha", title=f"E₂ at γ = {s.gamma:g}"))


def alpha_one_checks(config: RunConfig, run: SuiteRun, e2_one: float) -> None:
    """
    E₂(1) against the hard-core boson energy it reduces to once R is below the spacing, plus
    that energy on coarser grids so the slow decay is visible.
    """
    s = config.two_anyon
    eig_tol = config.tol("eigen_tol")
    t = now()
    sizes = sorted({max(8, s.n_side // 2), max(8, (3 * s.n_side) // 4), s.n_side})
    floors = fan_out(lambda n: hard_core_boson_energy(n, tol=eig_tol, seed=config.seed), sizes, config.parallel)
    run.csv("alpha_one_trend.csv", pd.DataFrame({"n_side": sizes, "hard_core_boson": floors}))
    run.report.extras["alpha_one_trend"] = dict(zip(sizes, floors))
    if s.gamma < 1.0 / (s.n_side - 1):
        tol = config.tol("alpha_one_gauge")
        err = relative_error(e2_one, floors[-1])
        run.check("e2_alpha_one_gauge", err <= tol, e2_one, floors[-1], tol, started=t)
    ceiling = config.tol("alpha_one_ceiling")
    side = "below" if e2_one <= ceiling else "above"
    run.check("e2_at_alpha_one", None, e2_one, ceiling, None,
              detail=f"reported only, {side} the ceiling: antisymmetry keeps the state at zero where the "
                     "pair meets, a hole of one grid cell whose cost falls like 1/log(n_side) "
                     "(alpha_one_trend.csv)")


def _alphas(ctx, param, value):
    if value is None:
        return None
    try:
        alphas = tuple(iter_range(value))
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None
    if not alphas:
        raise click.BadParameter("no alpha values given")
    return alphas


@click.command()
@suite_options
@click.option("--alpha", type=float, default=None, help="single α instead of the full suite")
@click.option("--gamma", type=float, default=None, help="R/L for the single run")
@click.option("--mode", type=click.Choice(MODES), default=None, help="functional mode")
@click.option("--n-side", type=int, default=None, help="grid nodes per side")
@click.option("--outside", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON list of outside particle positions Y_m for the single run")
@click.option("--alphas", callback=_alphas, default=None, metavar="LIST|START:STOP:STEP",
              help='profile α values, e.g. "0.2,0.5,1" or "0:2:0.1"')
def main(opts: RunOptions, alpha: Optional[float], gamma: Optional[float], mode: Optional[str],
         n_side: Optional[int], outside: Optional[str], alphas: Optional[tuple]):
    """Two-anyon ground energies: free limit, scaling, trial-state bound and α profile."""
    config = resolve_config(opts, "two-anyon")
    if n_side is not None:
        config = config.with_block("two_anyon", n_side=n_side)
    if mode is not None:
        config = config.with_block("core_model", mode=mode)
    if gamma is not None:
        config = config.with_block("two_anyon", gamma=gamma)
    if outside is not None:
        config = config.with_block("two_anyon", outside=outside)
    if alphas is not None:
        config = config.with_block("two_anyon", profile_alphas=alphas)
    if alpha is not None:
        s = config.two_anyon
        run_and_exit(lambda c, r: point_check(c, r, alpha, s.gamma, c.core_model.mode, s.n_side), config, opts)
    else:
        run_and_exit(run_two_anyon, config, opts)


if __name__ == "__main__":
    main()
