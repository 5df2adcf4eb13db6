from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from anyonlt.errors import InvalidInputError

log = logging.getLogger(__name__)

MODES = ("full", "kinetic-only")


# ---------- Domain types ----------

@dataclass(frozen=True)
class AnyonParams:
    alpha: float
    radius: float

    def __post_init__(self):
        if not np.isfinite(self.alpha) or not 0.0 <= self.alpha <= 2.0:
            raise InvalidInputError(f"alpha must lie in [0, 2], got {self.alpha}")
        if not np.isfinite(self.radius) or self.radius <= 0.0:
            raise InvalidInputError(f"radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class SquareDomain:
    corner: tuple[float, float] = (0.0, 0.0)
    side: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.side) or self.side <= 0.0:
            raise InvalidInputError(f"side must be positive, got {self.side}")
        object.__setattr__(self, "corner", (float(self.corner[0]), float(self.corner[1])))

    def gamma(self, radius: float) -> float:
        return radius / self.side

    @property
    def area(self) -> float:
        return self.side * self.side

    def contains(self, points) -> np.ndarray:
        """Closed-square membership for an array of points of shape (..., 2)."""
        p = np.asarray(points, dtype=float)
        x0, y0 = self.corner
        return (
            (p[..., 0] >= x0) & (p[..., 0] <= x0 + self.side)
            & (p[..., 1] >= y0) & (p[..., 1] <= y0 + self.side)
        )


def _as_points(points, what: str) -> np.ndarray:
    arr = np.asarray(points, dtype=float).reshape(-1, 2) if len(points) else np.zeros((0, 2))
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{what} contains non-finite coordinates")
    return arr


@dataclass(frozen=True)
class Configuration:
    domain: SquareDomain
    inside: np.ndarray
    outside: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        inside = _as_points(self.inside, "inside")
        outside = _as_points(self.outside, "outside")
        if not np.all(self.domain.contains(inside)):
            raise InvalidInputError("every inside particle must lie in the square")
        if outside.size and np.any(self.domain.contains(outside)):
            raise InvalidInputError("every outside particle must lie outside the square")
        inside.setflags(write=False)
        outside.setflags(write=False)
        object.__setattr__(self, "inside", inside)
        object.__setattr__(self, "outside", outside)

    @property
    def n(self) -> int:
        return len(self.inside)

    @property
    def m(self) -> int:
        return len(self.outside)

    def others(self, j: int) -> np.ndarray:
        """Positions of every particle except inside particle j (0-based)."""
        if not 0 <= j < self.n:
            raise IndexError(f"particle index {j} out of range for n = {self.n}")
        return np.vstack([np.delete(self.inside, j, axis=0), self.outside])


@dataclass(frozen=True)
class EnergyBreakdown:
    e1: np.ndarray
    e2_grad: np.ndarray
    e2_pot: np.ndarray

    def total(self) -> np.ndarray:
        return self.e1 + self.e2_grad + self.e2_pot


# ---------- Kernels ----------

def _check_radius(R: float):
    if not np.isfinite(R) or R <= 0.0:
        raise InvalidInputError(f"R must be positive, got {R}")


def _finite(x, what: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (2,):
        raise InvalidInputError(f"{what} must have a trailing dimension of 2")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{what} has non-finite components")
    return arr


def perp(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def regularized_distance(x, R: float):
    """|x|_R = max(|x|, R); vectorized over leading axes."""
    _check_radius(R)
    arr = _finite(x)
    out = np.maximum(np.hypot(arr[..., 0], arr[..., 1]), R)
    return float(out) if out.ndim == 0 else out


def smeared_coulomb(x, R: float):
    """Potential of a unit charge spread uniformly over the disk of radius R."""
    _check_radius(R)
    arr = _finite(x)
    r = np.hypot(arr[..., 0], arr[..., 1])
    with np.errstate(divide="ignore"):
        outer = np.log(np.where(r >= R, r, R))
    inner = np.log(R) + 0.5 * (r * r / (R * R) - 1.0)
    out = np.where(r >= R, outer, inner)
    return float(out) if out.ndim == 0 else out


def pair_kernel(d, R: float) -> np.ndarray:
    """d⊥ / |d|_R², the gauge field of one flux tube seen at offset d."""
    r = np.maximum(np.hypot(d[..., 0], d[..., 1]), R)
    return perp(d) / (r * r)[..., None]


def vector_potential_at(points, sources, R: float) -> np.ndarray:
    """Σ_k (x − s_k)⊥/|x − s_k|_R² for every sample x (shape (P, 2))."""
    _check_radius(R)
    pts = _finite(points, "points").reshape(-1, 2)
    src = np.asarray(sources, dtype=float).reshape(-1, 2)
    if src.size == 0:
        return np.zeros_like(pts)
    d = pts[:, None, :] - src[None, :, :]
    return pair_kernel(d, R).sum(axis=1)


def _turn(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Signed angle from u to v in (−π, π]."""
    cross = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    return np.arctan2(cross, np.sum(u * v, axis=-1))


def segment_line_integral(tail, head, sources, R: float) -> np.ndarray:
    """
    Exact ∫ (x − s)⊥/|x − s|_R² · dx along the straight segment tail → head, for every
    segment (rows) and source (columns).

    Outside the disk the integrand is dφ, so those pieces are signed angles; inside it is
    (x − s)⊥/R², whose product with the direction is constant along the chord.
    """
    _check_radius(R)
    a = _finite(tail, "tail").reshape(-1, 2)
    b = _finite(head, "head").reshape(-1, 2)
    src = np.asarray(sources, dtype=float).reshape(-1, 2)
    if len(a) != len(b):
        raise InvalidInputError(f"tail and head differ in length: {len(a)} vs {len(b)}")
    if src.size == 0:
        return np.zeros((len(a), 0))
    d0 = a[:, None, :] - src[None, :, :]
    d1 = b[:, None, :] - src[None, :, :]
    v = d1 - d0
    vv = np.maximum(np.sum(v * v, axis=-1), np.finfo(float).tiny)
    p = np.sum(d0 * v, axis=-1)
    disc = p * p - vv * (np.sum(d0 * d0, axis=-1) - R * R)
    root = np.sqrt(np.maximum(disc, 0.0))
    hit = disc > 0
    t1 = np.where(hit, np.clip((-p - root) / vv, 0.0, 1.0), 0.0)
    t2 = np.where(hit, np.clip((-p + root) / vv, 0.0, 1.0), 0.0)
    p1 = d0 + t1[..., None] * v
    p2 = d0 + t2[..., None] * v
    chord = (d0[..., 0] * v[..., 1] - d0[..., 1] * v[..., 0]) * (t2 - t1) / (R * R)
    return _turn(d0, p1) + chord + _turn(p2, d1)


def flux_count_at(points, sources, R: float) -> np.ndarray:
    pts = _finite(points, "points").reshape(-1, 2)
    src = np.asarray(sources, dtype=float).reshape(-1, 2)
    if src.size == 0:
        return np.zeros(len(pts))
    d = np.hypot(pts[:, None, 0] - src[None, :, 0], pts[:, None, 1] - src[None, :, 1])
    return (d < R).sum(axis=1).astype(float)


def vector_potential(j: int, config: Configuration, R: float) -> np.ndarray:
    others = config.others(j)
    return vector_potential_at(config.inside[j], others, R)[0]


def flux_potential(j: int, config: Configuration, R: float) -> float:
    """2π Σ 1_{B(x_k,R)}(x_j)/(πR²) over every other particle."""
    _check_radius(R)
    others = config.others(j)
    return float(2.0 / (R * R) * flux_count_at(config.inside[j], others, R)[0])


def total_flux_potential(config: Configuration, R: float) -> float:
    return sum(flux_potential(j, config, R) for j in range(config.n))


# ---------- Energy densities ----------

def energy_density(
    psi_values: Sequence[complex],
    gradient_values,
    points,
    config: Configuration,
    params: AnyonParams,
    mode: str = "full",
    *,
    particle: int = 0,
    flux_weight: float = 1.0,
) -> EnergyBreakdown:
    """
    Pointwise densities of the split energy for particle `particle` moved over `points`
    while the remaining particles of `config` stay fixed.

    full: (1/2)|DΨ|², (1/4)|∇|Ψ||², (1/4)·flux_weight·V|Ψ|².
    kinetic-only: |DΨ|² in e1, zeros elsewhere.
    """
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")
    psi = np.asarray(psi_values, dtype=complex).reshape(-1)
    grad = np.asarray(gradient_values, dtype=complex).reshape(-1, 2)
    pts = _finite(points, "points").reshape(-1, 2)
    if not (len(psi) == len(grad) == len(pts)):
        raise InvalidInputError(
            f"sample lengths differ: psi={len(psi)}, gradient={len(grad)}, points={len(pts)}"
        )
    others = config.others(particle)
    A = vector_potential_at(pts, others, params.radius)
    D = -1j * grad + params.alpha * A * psi[:, None]
    kinetic = np.sum(np.abs(D) ** 2, axis=1)
    zeros = np.zeros(len(psi))
    if mode == "kinetic-only":
        return EnergyBreakdown(e1=kinetic, e2_grad=zeros, e2_pot=zeros.copy())

    mod = np.abs(psi)
    grad_mod = np.zeros((len(psi), 2))
    nz = mod > 0
    grad_mod[nz] = np.real(np.conj(psi[nz])[:, None] * grad[nz]) / mod[nz][:, None]
    V = 2.0 / params.radius**2 * flux_count_at(pts, others, params.radius)
    return EnergyBreakdown(
        e1=0.5 * kinetic,
        e2_grad=0.25 * np.sum(grad_mod**2, axis=1),
        e2_pot=0.25 * abs(flux_weight) * V * mod**2,
    )
