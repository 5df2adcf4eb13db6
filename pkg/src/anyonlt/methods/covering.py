from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from anyonlt.errors import InvalidInputError, UnreachableMassError

log = logging.getLogger(__name__)

DEFAULT_MAX_OVERLAP = 16


@dataclass(frozen=True)
class DensityGrid:
    """Node samples values[iy, ix] of ρ at (x0 + ix·h, y0 + iy·h)."""
    values: np.ndarray = field(repr=False)
    spacing: float
    origin: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        v = np.asarray(self.values, float)
        if v.ndim != 2 or min(v.shape) < 2:
            raise InvalidInputError(f"density values must be a 2-D grid, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvalidInputError("density samples must be finite and nonnegative")
        if not self.spacing > 0:
            raise InvalidInputError(f"spacing must be positive, got {self.spacing}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def xs(self) -> np.ndarray:
        return self.origin[0] + self.spacing * np.arange(self.values.shape[1])

    @property
    def ys(self) -> np.ndarray:
        return self.origin[1] + self.spacing * np.arange(self.values.shape[0])

    @property
    def extent(self) -> Tuple[float, float, float, float]:
        xs, ys = self.xs, self.ys
        return float(xs[0]), float(xs[-1]), float(ys[0]), float(ys[-1])

    @property
    def total_mass(self) -> float:
        wx = _trapezoid_weights(len(self.xs), self.spacing)
        wy = _trapezoid_weights(len(self.ys), self.spacing)
        return float(wy @ self.values @ wx)

    def support_points(self, threshold: float = 0.0) -> np.ndarray:
        iy, ix = np.nonzero(self.values > threshold)
        return np.column_stack([self.xs[ix], self.ys[iy]])

    def coarsened(self) -> Optional["DensityGrid"]:
        ny, nx = self.values.shape
        if (ny - 1) % 2 or (nx - 1) % 2 or min(ny, nx) < 5:
            return None
        return DensityGrid(values=self.values[::2, ::2], spacing=2 * self.spacing, origin=self.origin)


@dataclass(frozen=True)
class Square:
    center: Tuple[float, float]
    side: float

    def contains(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, float).reshape(-1, 2)
        half = 0.5 * self.side
        return (np.abs(p[:, 0] - self.center[0]) <= half) & (np.abs(p[:, 1] - self.center[1]) <= half)


@dataclass(frozen=True)
class CoveringCollection:
    squares: List[Square]
    masses: Optional[np.ndarray] = field(default=None, repr=False)
    overlap_histogram: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def max_overlap(self) -> int:
        if self.overlap_histogram is None or not len(self.overlap_histogram):
            return 0
        return int(len(self.overlap_histogram) - 1)

    def counts(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, float).reshape(-1, 2)
        total = np.zeros(len(pts), dtype=int)
        for sq in self.squares:
            total += sq.contains(pts)
        return total

    def without(self, index: int) -> "CoveringCollection":
        squares = [s for i, s in enumerate(self.squares) if i != index]
        masses = None if self.masses is None else np.delete(self.masses, index)
        return CoveringCollection(squares=squares, masses=masses)


# ---------- Mass of a square ----------

def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _hat_cumulative(t: np.ndarray) -> np.ndarray:
    """∫_{-∞}^{t} of the unit hat supported on [−1, 1]."""
    t = np.clip(t, -1.0, 1.0)
    return np.where(t <= 0, 0.5 * (t + 1) ** 2, 1.0 - 0.5 * (1 - t) ** 2)


def _hat_weights(nodes: np.ndarray, lo: float, hi: float, h: float) -> np.ndarray:
    lo, hi = max(lo, nodes[0]), min(hi, nodes[-1])
    if hi <= lo:
        return np.zeros(len(nodes))
    return h * (_hat_cumulative((hi - nodes) / h) - _hat_cumulative((lo - nodes) / h))


def square_mass(density: DensityGrid, center: Sequence[float], side: float) -> float:
    """Exact integral of the bilinear interpolant of ρ over the square (clipped to the grid)."""
    half = 0.5 * max(side, 0.0)
    h = density.spacing
    wx = _hat_weights(density.xs, center[0] - half, center[0] + half, h)
    wy = _hat_weights(density.ys, center[1] - half, center[1] + half, h)
    return float(wy @ density.values @ wx)


def calibrated_square(
    density: DensityGrid,
    center: Sequence[float],
    target_mass: float,
    *,
    rel_tol: float = 1e-13,
    max_iter: int = 200,
) -> float:
    """Smallest side whose centered square carries at least `target_mass`, by bisection."""
    total = density.total_mass
    if target_mass > total * (1 + 1e-12):
        raise UnreachableMassError(target_mass, total)
    if target_mass <= 0:
        return 0.0
    x0, x1, y0, y1 = density.extent
    hi = 2.0 * max(abs(center[0] - x0), abs(center[0] - x1), abs(center[1] - y0), abs(center[1] - y1))
    if square_mass(density, center, hi) < target_mass:
        # the whole grid is covered already; rounding in the total is the only gap
        return hi
    lo = 0.0
    for _ in range(max_iter):
        if hi - lo <= rel_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if square_mass(density, center, mid) >= target_mass:
            hi = mid
        else:
            lo = mid
    return hi


# ---------- Besicovitch selection ----------

def besicovitch_select(
    candidates: Sequence[Square],
    density: Optional[DensityGrid] = None,
    support_points: Optional[np.ndarray] = None,
) -> CoveringCollection:
    """Greedy by decreasing side: keep a candidate when no kept square covers its center yet."""
    if not candidates:
        raise InvalidInputError("candidate set is empty")
    order = sorted(candidates, key=lambda s: (-s.side, s.center[0], s.center[1]))
    kept: List[Square] = []
    cx, cy, half = [], [], []
    for sq in order:
        if kept:
            covered = np.any(
                (np.abs(np.asarray(cx) - sq.center[0]) <= np.asarray(half))
                & (np.abs(np.asarray(cy) - sq.center[1]) <= np.asarray(half))
            )
            if covered:
                continue
        kept.append(sq)
        cx.append(sq.center[0])
        cy.append(sq.center[1])
        half.append(0.5 * sq.side)

    masses = None
    if density is not None:
        masses = np.array([square_mass(density, s.center, s.side) for s in kept])
        if support_points is None:
            support_points = density.support_points()
    if support_points is None:
        support_points = np.array([s.center for s in candidates], float)
    collection = CoveringCollection(squares=kept, masses=masses)
    hist = np.bincount(collection.counts(support_points))
    log.debug("selected %d of %d candidates, max overlap %d", len(kept), len(candidates), len(hist) - 1)
    return CoveringCollection(squares=kept, masses=masses, overlap_histogram=hist)


def audit_cover(collection: CoveringCollection, support_points: np.ndarray) -> Tuple[bool, int]:
    """Per-node check of 1_E ≤ Σ 1_Q; returns (covered, max of Σ 1_Q on the support)."""
    counts = collection.counts(support_points)
    if not len(counts):
        return True, 0
    return bool(np.all(counts >= 1)), int(np.max(counts))


# ---------- Full pipeline ----------

@dataclass(frozen=True)
class CoverResult:
    collection: CoveringCollection
    target: float
    covered: bool
    max_overlap: int
    mass_tolerance: float
    mass_errors: np.ndarray = field(repr=False)

    @property
    def mass_ok(self) -> bool:
        return bool(np.all(self.mass_errors <= self.mass_tolerance))


def cover_density(
    density: DensityGrid,
    n_lower: float,
    n_upper: float,
    *,
    support_threshold: float = 0.0,
) -> CoverResult:
    """Mass-calibrated squares at every support node, then Besicovitch selection and audit."""
    if n_lower > n_upper:
        raise InvalidInputError(f"need n_lower <= n_upper, got {n_lower}, {n_upper}")
    target = 0.5 * (n_lower + n_upper)
    support = density.support_points(support_threshold)
    if not len(support):
        raise InvalidInputError("density has an empty support")
    candidates = [Square((float(x), float(y)), calibrated_square(density, (x, y), target)) for x, y in support]
    collection = besicovitch_select(candidates, density, support)
    covered, overlap = audit_cover(collection, support)

    coarse = density.coarsened()
    qerr = 0.0
    if coarse is not None:
        qerr = max(
            abs(m - square_mass(coarse, s.center, s.side)) for s, m in zip(collection.squares, collection.masses)
        )
    tolerance = 2.0 * max(qerr, 1e-9 * density.total_mass)
    return CoverResult(
        collection=collection,
        target=target,
        covered=covered,
        max_overlap=overlap,
        mass_tolerance=tolerance,
        mass_errors=np.abs(collection.masses - target),
    )
