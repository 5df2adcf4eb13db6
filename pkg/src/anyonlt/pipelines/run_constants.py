from __future__ import annotations

import json
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Optional

import click
import numpy as np
import pandas as pd

from anyonlt.config import RunConfig
from anyonlt.data.densities import generate_density
from anyonlt.errors import InvalidInputError
from anyonlt.methods.constants import (
    ConstantLedger,
    assemble_global,
    c_n,
    c_n_exact,
    corridor_area,
    default_ledger,
    finite_n_reduction,
    k_alpha,
    local_exclusion_constant,
    reduction_constants,
    reduction_to_two,
    two_in_quadrant_weight,
    with_measurements,
)
from anyonlt.methods.covering import cover_density
from anyonlt.methods.magnetic_grid import (
    FieldSpec,
    assemble_magnetic_laplacian,
    field_phases,
    local_uncertainty_surrogate,
)
from anyonlt.methods.operators import count_below
from anyonlt.pipelines.common import RunOptions, SuiteRun, now, resolve_config, run_and_exit, spawn_seeds, suite_options

log = logging.getLogger(__name__)


def example_ledger(c_le: float = 0.1, alpha: float = 2.0, n_lower: float = 5, n_upper: float = 10,
                   c2: float = 0.5, b2: Optional[float] = 16) -> ConstantLedger:
    led = ConstantLedger()
    led.set_abstract("C_LE", "local exclusion constant", c_le)
    led.set_abstract("alpha", "statistics parameter", alpha)
    led.set_abstract("N_lower", "N_<", n_lower)
    led.set_abstract("N_upper", "N_>", n_upper)
    led.set_abstract("C_2", "local uncertainty constant", c2)
    led.set_abstract("b_2", "Besicovitch overlap constant", b2)
    return led


def measure_inputs(config: RunConfig) -> dict:
    """Measured surrogates for C₂, b₂ and N̲ from the other modules at desk scale."""
    seeds = spawn_seeds(config.seed, 4)
    c2 = local_uncertainty_surrogate(n_side=33, samples=64, seed=seeds[0])
    density = generate_density("uniform", n_nodes=25, extent=10.0, total_mass=400.0, seed=seeds[1], jitter=0.05)
    b2 = cover_density(density, 40.0, 60.0).max_overlap
    counts = [
        count_below(assemble_magnetic_laplacian(field_phases(FieldSpec(kind, 50.0, s).samples(33))), 2.0, seed=s)
        for kind, s in (("zero", seeds[2]), ("random", seeds[2]), ("random", seeds[3]))
    ]
    return {
        "C_2": (c2, "smooth trial-state surrogate"),
        "b_2": (float(b2), "greedy covering overlap on a uniform density"),
        "underline_N": (float(max(counts)), "max N(2) over sampled fields, unit square"),
    }


def _chain_checks(config: RunConfig, run: SuiteRun) -> None:
    tol = config.tol("chain_abs")

    t = now()
    led = assemble_global(example_ledger())
    c_le, a, lo, hi, c2, b2 = 0.1, 1.0, 5.0, 10.0, 0.5, 16.0
    fn = c2 / hi * c_le * lo / (hi + c_le * a * hi)
    ea = min(fn / b2, 1.0 / (c2 * lo))
    err = max(abs(led.value("C_FN") - fn), abs(led.value("C_EA") - ea))
    run.check("chain_example", err <= tol, [led.value("C_FN"), led.value("C_EA")], [fn, ea], tol, started=t)

    t = now()
    symbolic = assemble_global(example_ledger(b2=None)).get("C_EA")
    run.check("chain_symbolic_b2", symbolic.value is None and symbolic.symbolic is not None,
              symbolic.symbolic, None, None, started=t)

    t = now()
    rng = np.random.default_rng(spawn_seeds(config.seed, 1)[0])
    worst = 0.0
    for _ in range(config.constants.random_ledgers):
        lo = float(rng.integers(1, 50))
        ledger = example_ledger(
            c_le=float(rng.uniform(0, 10)), alpha=float(rng.uniform(0, 2)), n_lower=lo,
            n_upper=lo + float(rng.integers(0, 50)), c2=float(rng.uniform(0.01, 2)), b2=float(rng.integers(1, 32)),
        )
        worst = max(worst, assemble_global(ledger).value("epsilon"))
    run.check("epsilon_below_one", worst < 1.0, worst, 1.0, None, started=t)

    t = now()
    base = {2: 1.3, 3: 0.7, 4: 2.1}
    pairs = [(finite_n_reduction(base, N), finite_n_reduction(base, 4 * N)) for N in (4, 7, 16, 33, 1000)]
    exact = all(v4 == 4.0 * v for v, v4 in pairs)
    scaled = finite_n_reduction({k: 3.0 * v for k, v in base.items()}, 16) == 3.0 * finite_n_reduction(base, 16)
    run.check("finite_n_linear", exact and scaled, [p[0] for p in pairs], None, 0.0, started=t)

    t = now()
    ok = True
    for _ in range(config.constants.corridor_samples):
        L = Fraction(int(rng.integers(1, 10**6)), int(rng.integers(1, 1000)))
        R = L / 4 * Fraction(int(rng.integers(0, 1001)), 1000)
        area = corridor_area(L, R)
        ok = ok and area == 8 * L * R - 16 * R * R and area <= 8 * L * R
    run.check("corridor_identity", ok, ok, True, 0.0, started=t)

    t = now()
    C1, C2 = reduction_constants()
    simplified = all(
        reduction_to_two(n, E, 0.5) >= c_n(n) * E / (C1 + C2 * c_n(n)) * (1 - 1e-12)
        for n in range(2, 40)
        for E in np.linspace(0.0, 8.0, 33)
    )
    counting = all(two_in_quadrant_weight(n) == c_n_exact(n) for n in range(2, 9))
    run.check("reduction_simplified", simplified and counting, [C1, C2], None, None, started=t)

    t = now()
    kmin = min(k_alpha(a) for a in np.linspace(0.0, 2.0, 81))
    run.check("k_alpha_lower", kmin >= 2.0 - 1e-14, kmin, 2.0, 1e-14, started=t)


def run_constants(config: RunConfig, run: SuiteRun) -> None:
    s = config.constants
    _chain_checks(config, run)

    t = now()
    ledger = default_ledger(s.alpha, s.gamma, s.n_lower, s.n_upper, c1=s.c1, c2=s.c2, c_inner=s.c_inner,
                            corridor_c=s.corridor_c)
    if s.measure:
        ledger = with_measurements(ledger, measure_inputs(config))
    if s.ledger:
        try:
            overrides = json.loads(Path(s.ledger).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{s.ledger}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        ledger.apply_overrides(overrides)
    local_exclusion_constant(ledger)
    ledger = assemble_global(ledger)
    (run.out / "ledger.json").write_text(ledger.to_json() + "\n")
    (run.out / "ledger.dot").write_text(ledger.to_dot())
    run.csv("ledger.csv", pd.DataFrame([
        {"name": e.name, "value": e.value, "provenance": e.provenance.value, "formula": e.formula_ref}
        for e in (ledger.get(n) for n in sorted(ledger.names))
    ]))
    ea = ledger.get("C_EA")
    run.check("ledger_C_EA", None, ea.value if ea.numeric else ea.symbolic, None, None, started=t,
              detail=f"provenance {ea.provenance.value}")
    run.report.extras["ledger"] = {n: ledger.value(n) for n in ("C_LE", "epsilon", "C_FN", "C_EA")}


@click.command()
@suite_options
@click.option("--alpha", type=float, default=None, help="statistics parameter α")
@click.option("--gamma", type=float, default=None, help="box ratio γ = R/L")
@click.option("--n-lower", type=float, default=None, help="N_<")
@click.option("--n-upper", type=float, default=None, help="N_>")
@click.option("--ledger", type=str, default=None, help="JSON overrides for ledger entries")
@click.option("--no-measure", is_flag=True, help="leave C_2, b_2 and underline_N abstract")
def main(opts: RunOptions, alpha: Optional[float], gamma: Optional[float], n_lower: Optional[float],
         n_upper: Optional[float], ledger: Optional[str], no_measure: bool):
    """Constant chain audits and the assembled ledger (JSON + DOT)."""
    config = resolve_config(opts, "constants")
    changes = {"alpha": alpha, "gamma": gamma, "n_lower": n_lower, "n_upper": n_upper, "ledger": ledger}
    changes = {k: v for k, v in changes.items() if v is not None}
    if no_measure:
        changes["measure"] = False
    if changes:
        config = config.with_block("constants", **changes)
    run_and_exit(run_constants, config, opts)


if __name__ == "__main__":
    main()
