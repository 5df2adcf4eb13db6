from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from anyonlt.errors import InvalidInputError, NumericError, WindowExhaustedError
from anyonlt.methods.special import bessel_jprime

log = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 2000
POSITIVITY_THRESHOLD = 1e-9
_WINDOW = 4


@dataclass(frozen=True)
class RadialProblem:
    nu: float
    gamma: float
    grid_points: int = DEFAULT_GRID_POINTS

    def __post_init__(self):
        if not self.nu >= 0:
            raise InvalidInputError(f"nu must be >= 0, got {self.nu}")
        if not 0 < self.gamma <= 1:
            raise InvalidInputError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.grid_points < 16:
            raise InvalidInputError(f"grid_points must be >= 16, got {self.grid_points}")


@dataclass(frozen=True)
class RadialEigenResult:
    lambda_min_positive: float
    eigenfunction: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)
    refinement_estimate: float = 0.0
    grid_points: int = 0

    @property
    def g(self) -> float:
        return math.sqrt(self.lambda_min_positive)


@dataclass(frozen=True)
class RadialOperator:
    """Weighted form of −(r u')'/r + ν²u/r²: K u = λ W u with W = diag(r-weights)."""
    nodes: np.ndarray
    weights: np.ndarray
    stiffness: sp.csr_matrix

    def apply(self, u: np.ndarray) -> np.ndarray:
        return (self.stiffness @ u) / self.weights

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.sum(self.weights * u * v))

    def symmetric_bands(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and off-diagonal of W^{-1/2} K W^{-1/2}."""
        s = 1.0 / np.sqrt(self.weights)
        diag = self.stiffness.diagonal() * s * s
        off = self.stiffness.diagonal(1) * s[:-1] * s[1:]
        return diag, off


def radial_operator(problem: RadialProblem) -> RadialOperator:
    # Half-cell weights at both ends are the symmetric form of the ghost-point Neumann closure.
    M = problem.grid_points
    r = np.linspace(problem.gamma, 1.0, M)
    h = r[1] - r[0]
    w = r * h
    w[0] *= 0.5
    w[-1] *= 0.5
    flux = 0.5 * (r[:-1] + r[1:]) / h
    diag = np.zeros(M)
    diag[:-1] += flux
    diag[1:] += flux
    diag += problem.nu**2 * w / r**2
    K = sp.diags([-flux, diag, -flux], [-1, 0, 1], format="csr")
    return RadialOperator(nodes=r, weights=w, stiffness=K)


def _lowest_positive(problem: RadialProblem, threshold: float):
    op = radial_operator(problem)
    d, e = op.symmetric_bands()
    k = min(_WINDOW, len(d))
    vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1))
    if problem.nu == 0:
        cut = threshold * max(1.0, float(np.max(np.abs(d))))
        keep = np.flatnonzero(vals > cut)
        log.debug("nu = 0: dropped %d zero mode(s) below %.3e", k - len(keep), cut)
    else:
        keep = np.arange(len(vals))
    if keep.size == 0:
        raise WindowExhaustedError("no positive eigenvalue found", (float(vals[0]), float(vals[-1])))
    i = int(keep[0])
    u = vecs[:, i] / np.sqrt(op.weights)
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
    return float(vals[i]), u, op.nodes


def g_squared(
    nu: float,
    gamma: float,
    grid_points: int = DEFAULT_GRID_POINTS,
    *,
    positivity_threshold: float = POSITIVITY_THRESHOLD,
) -> RadialEigenResult:
    """Smallest positive Neumann eigenvalue g²(ν, γ) of the radial Bessel operator on [γ, 1]."""
    if not gamma > 0:
        raise InvalidInputError(f"gamma must be positive, got {gamma}")
    if not nu >= 0:
        raise InvalidInputError(f"nu must be >= 0, got {nu}")
    if gamma >= 1:
        return RadialEigenResult(
            lambda_min_positive=float(nu) ** 2,
            eigenfunction=np.ones(1),
            radii=np.array([1.0]),
            refinement_estimate=0.0,
            grid_points=0,
        )
    problem = RadialProblem(nu=float(nu), gamma=float(gamma), grid_points=int(grid_points))
    lam, u, r = _lowest_positive(problem, positivity_threshold)

    coarse_points = (problem.grid_points - 1) // 2 + 1
    estimate = float("nan")
    if coarse_points >= 8:
        coarse = RadialProblem(nu=problem.nu, gamma=problem.gamma, grid_points=max(coarse_points, 16))
        lam_coarse, _, _ = _lowest_positive(coarse, positivity_threshold)
        estimate = abs(lam - lam_coarse) / 3.0
    return RadialEigenResult(
        lambda_min_positive=lam,
        eigenfunction=u,
        radii=r,
        refinement_estimate=estimate,
        grid_points=problem.grid_points,
    )


def bessel_jprime_zero(nu: float, *, step: float = 0.02, span: float = 60.0) -> float:
    """First positive zero j'_ν of J_ν' (the zero at the origin is excluded for ν = 0)."""
    if not nu >= 0:
        raise InvalidInputError(f"nu must be >= 0, got {nu}")
    # no zero of J_ν' lies below √(2ν)
    lo = 0.5 * math.sqrt(2.0 * nu) if nu > 0 else 1e-3
    f_lo = bessel_jprime(nu, lo)
    x = lo
    while x < lo + span:
        hi = x + step
        f_hi = bessel_jprime(nu, hi)
        if f_lo == 0.0:
            return x
        if f_lo * f_hi < 0:
            return float(brentq(lambda t: bessel_jprime(nu, t), x, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
        x, f_lo = hi, f_hi
    raise NumericError(f"no sign change of J'_{nu} found", (lo, lo + span))


def alpha_fraction(N: int, alpha: float) -> float:
    """min over p ≤ N−2 and integer q of |(2p+1)(1−α) − 2q|."""
    if N < 2:
        raise InvalidInputError(f"N must be >= 2, got {N}")
    if not 0 <= alpha <= 2:
        raise InvalidInputError(f"alpha must lie in [0, 2], got {alpha}")
    best = math.inf
    for p in range(N - 1):
        t = (2 * p + 1) * (1.0 - alpha)
        best = min(best, abs(t - 2.0 * round(t / 2.0)))
    return best


def e2_lower_constant(
    alpha: float,
    gamma: float,
    c_inner: float = 1.0,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> float:
    """(π/48)·g²(c·α₂, 12γ)·(1 − 12γ)₊³, the two-anyon energy floor on a unit square."""
    if gamma < 0:
        raise InvalidInputError(f"gamma must be >= 0, got {gamma}")
    if c_inner <= 0:
        raise InvalidInputError(f"c_inner must be positive, got {c_inner}")
    if gamma >= 1.0 / 12.0:
        return 0.0
    a2 = alpha_fraction(2, alpha)
    if a2 == 0.0:
        return 0.0
    nu = c_inner * a2
    inner = 12.0 * gamma
    g2 = bessel_jprime_zero(nu) ** 2 if inner == 0 else g_squared(nu, inner, grid_points).lambda_min_positive
    return math.pi / 48.0 * g2 * (1.0 - inner) ** 3
