import math

import numpy as np
import pytest
from scipy import special

from anyonlt.errors import InvalidInputError
from anyonlt.methods.radial import (
    RadialProblem,
    alpha_fraction,
    bessel_jprime_zero,
    e2_lower_constant,
    g_squared,
    radial_operator,
)


@pytest.mark.parametrize("nu", np.linspace(0.0, 4.0, 32))
@pytest.mark.parametrize("gamma", [1.0, 1.5])
def test_plateau_is_exact(nu, gamma):
    assert g_squared(nu, gamma).g == pytest.approx(nu, abs=1e-12)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_jprime_zero_against_scipy(n):
    assert bessel_jprime_zero(n) == pytest.approx(special.jnp_zeros(n, 1)[0], rel=1e-12)


def test_jprime_zero_lower_bound():
    for nu in np.linspace(2.0 / 64, 2.0, 64):
        assert bessel_jprime_zero(nu) >= math.sqrt(2.0 * nu)


@pytest.mark.parametrize("nu", [0.5, 1.0, 2.0])
def test_small_gamma_limit(nu):
    res = g_squared(nu, 1e-4)
    assert res.g == pytest.approx(bessel_jprime_zero(nu), abs=5e-3)
    assert res.grid_points == 2000
    assert res.refinement_estimate < 1e-2


def test_slow_limit_at_quarter_order():
    # convergence in γ^(2ν) is slow here; only a loose band is asserted
    assert g_squared(0.25, 1e-4).g == pytest.approx(bessel_jprime_zero(0.25), abs=1.5e-2)


def test_g_decreases_towards_the_plateau():
    gs = [g_squared(1.0, gm).g for gm in (1e-3, 1e-2, 0.1, 0.4, 0.8)]
    assert all(a >= b - 1e-9 for a, b in zip(gs, gs[1:]))
    assert gs[-1] >= 1.0 - 1e-6


def test_zero_mode_excluded_at_nu_zero():
    res = g_squared(0.0, 0.2, 400)
    assert res.lambda_min_positive > 1.0


def test_radial_operator_is_symmetric():
    op = radial_operator(RadialProblem(nu=1.3, gamma=0.05, grid_points=200))
    K = op.stiffness.toarray()
    assert np.array_equal(K, K.T)
    assert np.all(op.weights > 0)
    rng = np.random.default_rng(0)
    u, v = rng.normal(size=200), rng.normal(size=200)
    assert op.inner(u, op.apply(v)) == pytest.approx(op.inner(op.apply(u), v), rel=1e-10)


def test_problem_validation():
    with pytest.raises(InvalidInputError):
        RadialProblem(nu=1.0, gamma=0.0)
    with pytest.raises(InvalidInputError):
        RadialProblem(nu=1.0, gamma=0.5, grid_points=8)
    with pytest.raises(InvalidInputError):
        g_squared(-1.0, 0.5)


@pytest.mark.parametrize("alpha, expected", [(0.0, 1.0), (0.5, 0.5), (1.0, 0.0), (1.5, 0.5), (2.0, 1.0)])
def test_alpha_fraction_two_particles(alpha, expected):
    assert alpha_fraction(2, alpha) == pytest.approx(expected)


def test_alpha_fraction_three_particles_without_statistics():
    assert alpha_fraction(3, 0.0) == 1.0


def test_alpha_fraction_against_enumeration():
    rng = np.random.default_rng(11)
    for alpha in rng.uniform(0.0, 2.0, size=1000):
        for N in range(2, 9):
            brute = min(
                abs((2 * p + 1) * (1.0 - alpha) - 2.0 * q) for p in range(N - 1) for q in range(-N, N + 1)
            )
            assert alpha_fraction(N, alpha) == brute
    with pytest.raises(InvalidInputError):
        alpha_fraction(1, 0.5)
    with pytest.raises(InvalidInputError):
        alpha_fraction(3, 2.5)


def test_e2_lower_constant():
    assert e2_lower_constant(0.5, 1.0 / 12.0) == 0.0
    assert e2_lower_constant(1.0, 1e-3) == 0.0
    value = e2_lower_constant(0.5, 1e-3)
    g2 = g_squared(0.5, 12e-3).lambda_min_positive
    assert value == pytest.approx(math.pi / 48.0 * g2 * (1 - 12e-3) ** 3)
    assert value > 0
