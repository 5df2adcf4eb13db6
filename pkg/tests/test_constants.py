import json
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import special

from anyonlt.errors import InvalidInputError, LedgerIncompleteError, PreconditionError
from anyonlt.methods.constants import (
    ConstantLedger,
    Provenance,
    assemble_global,
    box_regime,
    c_n,
    c_n_exact,
    corridor_area,
    default_ledger,
    finite_n_reduction,
    finite_n_trace,
    fn_constant_floor,
    gauge_corridor_constants,
    k_alpha,
    large_box_bound,
    local_exclusion_constant,
    medium_box_bound,
    reduction_constants,
    reduction_to_two,
    small_box_bound,
    two_in_quadrant_weight,
    with_measurements,
)
from anyonlt.methods.radial import e2_lower_constant


def _ledger(c_le=0.1, alpha=2.0, n_lower=5, n_upper=10, c2=0.5, b2=16.0):
    led = ConstantLedger()
    for name, value in (("C_LE", c_le), ("alpha", alpha), ("N_lower", n_lower),
                        ("N_upper", n_upper), ("C_2", c2), ("b_2", b2)):
        led.set_abstract(name, name, value)
    return led


@pytest.mark.parametrize("n, expected", [(2, 1.0), (3, 2.25), (10, 45 * 0.75**8)])
def test_c_n(n, expected):
    assert c_n(n) == pytest.approx(expected, rel=1e-15)


def test_c_n_counts_pairs_in_a_quadrant():
    for n in range(2, 8):
        assert two_in_quadrant_weight(n) == c_n_exact(n)
    with pytest.raises(InvalidInputError):
        c_n(1)


def test_reduction_to_two_examples():
    assert reduction_to_two(5, 0.0) == 0.0
    pi2 = math.pi**2
    assert reduction_to_two(2, 8.0, 0.5) == pytest.approx(pi2 * 0.5 * 8 / (pi2 + 8 * (0.5 + 16)), rel=1e-15)
    assert reduction_to_two(4, 8.0) >= reduction_to_two(4, 4.0)
    with pytest.raises(InvalidInputError):
        reduction_to_two(4, 1.0, 1.0)
    with pytest.raises(InvalidInputError):
        reduction_to_two(4, -1.0)


@pytest.mark.parametrize("n", [2, 3, 7, 20])
def test_reduction_simplified_form(n):
    C1, C2 = reduction_constants()
    cn = c_n(n)
    for e2 in np.linspace(0.0, 8.0, 33):
        assert reduction_to_two(n, e2) >= cn * e2 / (C1 + C2 * cn) - 1e-14
    assert reduction_to_two(n, 8.0) == pytest.approx(cn * 8.0 / (C1 + C2 * cn), rel=1e-13)


def test_k_alpha():
    assert k_alpha(2.0) == pytest.approx(2.0 * special.i0(2.0) / special.i1(2.0), rel=1e-13)
    assert k_alpha(0.0) == 2.0
    assert k_alpha(1e-10) == pytest.approx(2.0, abs=1e-9)
    assert all(k_alpha(a) >= 2.0 for a in np.linspace(1e-6, 2.0, 200))


def test_medium_box_bound_examples():
    assert medium_box_bound(1.0, 0.5, 1) == 0.0
    assert medium_box_bound(0.0, 0.5, 6) == 0.0
    assert medium_box_bound(1.0, 2.0, 3) == pytest.approx(3.0)
    # γ = √2 takes the second branch
    assert medium_box_bound(1.0, math.sqrt(2.0), 2) == pytest.approx(2.0 / 2.0 * 2 * 1)


def test_medium_box_bound_is_continuous_in_alpha():
    for gamma in (0.1, 1.0, 1.9):
        for a in (0.2, 1.0, 1.7):
            assert medium_box_bound(a + 1e-9, gamma, 5) == pytest.approx(medium_box_bound(a, gamma, 5), rel=1e-6)


def test_small_box_and_corridor_constants():
    assert small_box_bound(7, 3.0) == 4.0
    assert small_box_bound(2, 3.0) == 0.0
    c1, floor = gauge_corridor_constants(0.5, 0.01)
    assert c1 == pytest.approx(0.25)
    assert floor == pytest.approx(1.15)
    with pytest.raises(InvalidInputError):
        gauge_corridor_constants(1.0, 0.01)


def test_large_box_bound_goes_through_the_corridor():
    c1, _ = gauge_corridor_constants(0.5, 0.01)
    for n in (2, 3, 7):
        expected = reduction_to_two(n, c1 * e2_lower_constant(0.5, 0.02, 1.0))
        assert large_box_bound(0.5, 0.01, n) == pytest.approx(expected)


def test_corridor_area_is_exact():
    assert corridor_area(10, 1) == Fraction(64)
    rng = np.random.default_rng(0)
    for _ in range(200):
        L = Fraction(int(rng.integers(1, 1000)), int(rng.integers(1, 50)))
        R = L / 4 * Fraction(int(rng.integers(0, 1000)), 1000)
        area = corridor_area(L, R)
        assert area == 8 * L * R - 16 * R * R
        assert area <= 8 * L * R
    with pytest.raises(InvalidInputError):
        corridor_area(1, Fraction(1, 3))


@pytest.mark.parametrize("gamma, regime", [(0.01, "large"), (1 / 24, "medium"), (2.0, "medium"), (2.5, "small")])
def test_box_regime(gamma, regime):
    assert box_regime(gamma, 1 / 24, 2.0).regime == regime


def test_box_regime_needs_ordered_thresholds():
    with pytest.raises(InvalidInputError):
        box_regime(0.5, 2.0, 1.0)


def test_finite_n_reduction_examples():
    base = {2: 1.0, 3: 1.0, 4: 1.0}
    assert finite_n_reduction(base, 4) == pytest.approx(1.0)
    assert finite_n_reduction(base, 16) == pytest.approx(4.0 * finite_n_reduction(base, 4))
    with pytest.raises(PreconditionError):
        finite_n_reduction({2: 0.0, 3: 1.0, 4: 1.0}, 4)
    with pytest.raises(InvalidInputError):
        finite_n_reduction({2: 1.0, 4: 1.0}, 4)
    with pytest.raises(InvalidInputError):
        finite_n_reduction(base, 3)


def test_finite_n_reduction_is_linear():
    rng = np.random.default_rng(2)
    base = {n: float(v) for n, v in zip(range(5, 17), rng.uniform(0.5, 3.0, 12))}
    for N in (16, 37, 100):
        assert finite_n_reduction(base, 4 * N) == 4 * finite_n_reduction(base, N)
    scaled = {n: 3.0 * v for n, v in base.items()}
    assert finite_n_reduction(scaled, 64) == pytest.approx(3.0 * finite_n_reduction(base, 64))


def test_finite_n_trace():
    assert finite_n_trace({2: 1.0, 3: 2.0, 4: 1.5}, 64) == [(1, 4, 1.0), (2, 16, 4.0), (3, 64, 16.0)]


def test_assemble_global_numeric_example():
    led = assemble_global(_ledger())
    fn = 0.5 / 10 * 0.1 * 5 / (10 + 0.1 * 10)
    assert led.value("epsilon") == pytest.approx(0.5 / 11, abs=1e-12)
    assert led.value("C_FN") == pytest.approx(fn, abs=1e-12)
    assert led.value("C_EA") == pytest.approx(min(fn / 16, 1 / 2.5), abs=1e-12)
    assert led.value("C_FN") >= led.value("C_FN_floor")
    assert led.get("C_EA").depends_on == ("C_FN", "b_2", "C_2", "N_lower")


def test_assemble_global_degenerate_and_symbolic():
    zero = assemble_global(_ledger(c_le=0.0))
    assert zero.value("C_FN") == 0.0 and zero.value("C_EA") == 0.0

    sym = assemble_global(_ledger(b2=None))
    assert sym.get("C_FN").numeric
    entry = sym.get("C_EA")
    assert entry.value is None
    assert entry.symbolic == "min{C^FN/b₂, 1/(C₂N_<)}"
    assert entry.provenance is Provenance.ABSTRACT


def test_assemble_global_missing_entry():
    full = _ledger()
    led = ConstantLedger(full.get(name) for name in full.names if name != "b_2")
    with pytest.raises(LedgerIncompleteError) as err:
        assemble_global(led)
    assert err.value.entry == "b_2"


def test_epsilon_below_one_on_random_ledgers():
    rng = np.random.default_rng(12)
    for _ in range(1000):
        lo = float(rng.uniform(1, 50))
        led = _ledger(
            c_le=float(rng.exponential(5.0)),
            alpha=float(rng.uniform(0, 2)),
            n_lower=lo,
            n_upper=lo + float(rng.uniform(0, 50)),
            c2=float(rng.uniform(0.01, 5)),
            b2=float(rng.integers(1, 40)),
        )
        assert assemble_global(led).value("epsilon") < 1


def test_measured_inputs_mark_results_measured():
    led = with_measurements(_ledger(b2=None), {"b_2": (4.0, "greedy overlap")})
    out = assemble_global(led)
    assert out.get("b_2").provenance is Provenance.MEASURED
    assert out.get("C_EA").provenance is Provenance.MEASURED
    assert out.get("C_FN").provenance is Provenance.EXACT


def test_fn_floor_formula():
    assert fn_constant_floor(1.0, 2.0, 3.0, 4.0) == pytest.approx(2.0 * 3.0 / (16.0 * 3.0))


def test_local_exclusion_constant_medium_regime():
    led = default_ledger(1.5, 1.0, 4, 16)
    entry = local_exclusion_constant(led)
    assert entry.value == pytest.approx(medium_box_bound(1.5, 1.0, 4) / 0.5)
    assert "underline_N" not in entry.depends_on


def test_local_exclusion_constant_small_regime():
    led = default_ledger(1.5, 3.0, 4, 16)
    assert local_exclusion_constant(led).value is None
    measured = with_measurements(led, {"underline_N": (2.0, "level count")})
    entry = local_exclusion_constant(measured)
    assert entry.value == pytest.approx(4.0)
    assert entry.provenance is Provenance.MEASURED


def test_local_exclusion_constant_vanishes_at_alpha_one():
    assert local_exclusion_constant(default_ledger(1.0, 1.0)).value == 0.0


def test_default_ledger_contents():
    led = default_ledger(0.5, 0.01)
    for name in ("C_2", "b_2", "underline_N", "medium_floor"):
        assert led.get(name).provenance is Provenance.ABSTRACT
        assert not led.get(name).numeric
    assert led.value("reduction_C1") == pytest.approx(2 + 256 / math.pi**2)
    assert led.value("K_alpha") == pytest.approx(k_alpha(0.5))
    assert led.value("corridor_floor") == pytest.approx(0.5 / 0.4 - 0.1)


def test_overrides():
    led = default_ledger(0.5, 0.01)
    led.apply_overrides({"C_2": 0.3, "b_2": {"value": 5, "provenance": "measured"}, "gamma": None})
    assert led.value("C_2") == 0.3
    assert led.get("b_2").provenance is Provenance.MEASURED
    assert led.value("gamma") is None
    with pytest.raises(InvalidInputError):
        led.apply_overrides({"C_2": "lots"})


def test_json_and_dot_exports():
    led = assemble_global(_ledger(b2=None))
    doc = json.loads(led.to_json())
    assert doc["C_EA"]["provenance"] == "abstract-parameter"
    assert doc["C_FN"]["depends_on"] == ["C_2", "C_LE", "abs_alpha_minus_1", "N_lower", "N_upper"]
    dot = led.to_dot()
    assert dot.startswith("digraph ledger {")
    assert '"C_FN" -> "C_EA";' in dot
    assert dot == assemble_global(_ledger(b2=None)).to_dot()
