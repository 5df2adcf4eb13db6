from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve
from scipy.special import beta, betainc

from anyonlt.errors import InvalidInputError, SolverError
from anyonlt.methods.operators import OperatorHandle, count_below, lowest_eigenvalues

log = logging.getLogger(__name__)


# ---------- Grid geometry ----------

@dataclass(frozen=True)
class GridEdges:
    """Nearest-neighbour edges of an n×n node grid, horizontal edges first (row-major)."""
    tail: np.ndarray
    head: np.ndarray
    direction: np.ndarray   # 0 = +x, 1 = +y
    weight: np.ndarray      # 1/2 on edges running along the boundary
    node_weight: np.ndarray  # lumped mass fraction: 1, 1/2 on sides, 1/4 at corners


def _end_halves(n: int) -> np.ndarray:
    mu = np.ones(n)
    mu[0] = mu[-1] = 0.5
    return mu


def grid_edges(n_side: int) -> GridEdges:
    """
    Edges of the square grid under the half-cell (ghost-point) Neumann closure: boundary edges
    weigh 1/2 and nodes carry their lumped cell area, instead of simply dropping missing neighbours.
    """
    n = n_side
    iy, ix = np.meshgrid(np.arange(n), np.arange(n - 1), indexing="ij")
    h_tail = (iy * n + ix).ravel()
    h_head = h_tail + 1
    h_weight = _end_halves(n)[iy].ravel()
    iy, ix = np.meshgrid(np.arange(n - 1), np.arange(n), indexing="ij")
    v_tail = (iy * n + ix).ravel()
    v_head = v_tail + n
    v_weight = _end_halves(n)[ix].ravel()
    mu = _end_halves(n)
    return GridEdges(
        tail=np.concatenate([h_tail, v_tail]),
        head=np.concatenate([h_head, v_head]),
        direction=np.concatenate([np.zeros(len(h_tail), int), np.ones(len(v_tail), int)]),
        weight=np.concatenate([h_weight, v_weight]),
        node_weight=np.outer(mu, mu).ravel(),
    )


def node_coordinates(n_side: int, side: float = 1.0, corner=(0.0, 0.0)) -> np.ndarray:
    t = np.linspace(0.0, side, n_side)
    yy, xx = np.meshgrid(corner[1] + t, corner[0] + t, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def edge_midpoints(n_side: int, side: float = 1.0, corner=(0.0, 0.0)) -> np.ndarray:
    nodes = node_coordinates(n_side, side, corner)
    e = grid_edges(n_side)
    return 0.5 * (nodes[e.tail] + nodes[e.head])


@dataclass(frozen=True)
class LinkGrid2D:
    n_side: int
    side: float = 1.0
    phases_x: Optional[np.ndarray] = field(default=None, repr=False)
    phases_y: Optional[np.ndarray] = field(default=None, repr=False)
    corner: tuple = (0.0, 0.0)

    def __post_init__(self):
        n = self.n_side
        if n < 2:
            raise InvalidInputError(f"n_side must be >= 2, got {n}")
        if self.side <= 0:
            raise InvalidInputError(f"side must be positive, got {self.side}")
        px = np.zeros((n, n - 1)) if self.phases_x is None else np.asarray(self.phases_x, float)
        py = np.zeros((n - 1, n)) if self.phases_y is None else np.asarray(self.phases_y, float)
        if px.shape != (n, n - 1) or py.shape != (n - 1, n):
            raise InvalidInputError(
                f"phase arrays must have shapes {(n, n - 1)} and {(n - 1, n)}, got {px.shape}, {py.shape}"
            )
        if not (np.all(np.isfinite(px)) and np.all(np.isfinite(py))):
            raise InvalidInputError("edge phases must be finite")
        object.__setattr__(self, "phases_x", px)
        object.__setattr__(self, "phases_y", py)

    @property
    def spacing(self) -> float:
        return self.side / (self.n_side - 1)

    @property
    def edge_phases(self) -> np.ndarray:
        return np.concatenate([self.phases_x.ravel(), self.phases_y.ravel()])

    @classmethod
    def from_edge_phases(cls, n_side: int, theta: np.ndarray, side: float = 1.0, corner=(0.0, 0.0)):
        nh = n_side * (n_side - 1)
        return cls(
            n_side=n_side,
            side=side,
            phases_x=theta[:nh].reshape(n_side, n_side - 1),
            phases_y=theta[nh:].reshape(n_side - 1, n_side),
            corner=corner,
        )


# ---------- Assembly ----------

def magnetic_form(n_side: int, spacing: float, theta: np.ndarray, edges: Optional[GridEdges] = None):
    """
    Hermitian quadratic form K (Σ_e c_e |ψ_a − e^{iθ}ψ_b|²) as COO triplets and the node masses.
    Shared by the one-body and two-body assemblies.
    """
    e = edges or grid_edges(n_side)
    off = -e.weight * np.exp(1j * theta)
    N = n_side * n_side
    deg = np.bincount(e.tail, e.weight, N) + np.bincount(e.head, e.weight, N)
    mass = spacing**2 * e.node_weight
    return e, off, deg, mass


def assemble_magnetic_laplacian(grid: LinkGrid2D) -> OperatorHandle:
    """(Hψ)_v = h⁻² Σ_w (ψ_v − e^{iθ_vw} ψ_w) with ghost-point Neumann closure, symmetrized."""
    N = grid.n_side**2
    e, off, deg, mass = magnetic_form(grid.n_side, grid.spacing, grid.edge_phases)
    s = 1.0 / np.sqrt(mass)
    rows = np.concatenate([e.tail, e.head, np.arange(N)])
    cols = np.concatenate([e.head, e.tail, np.arange(N)])
    vals = np.concatenate([off * s[e.tail] * s[e.head], np.conj(off) * s[e.tail] * s[e.head], deg * s * s])
    S = sp.csr_matrix((vals.astype(complex), (rows, cols)), shape=(N, N))
    return OperatorHandle(matrix=S, mass=mass, label=f"magnetic[{grid.n_side}]")


def gauge_transform(grid: LinkGrid2D, potential: np.ndarray) -> LinkGrid2D:
    """θ_vw ↦ θ_vw + φ_w − φ_v for a node potential φ of shape (n, n)."""
    phi = np.asarray(potential, float).ravel()
    e = grid_edges(grid.n_side)
    theta = grid.edge_phases + phi[e.head] - phi[e.tail]
    return LinkGrid2D.from_edge_phases(grid.n_side, theta, grid.side, grid.corner)


def phases_from_vector_potential(n_side: int, vector_field, side: float = 1.0, corner=(0.0, 0.0)):
    """Midpoint rule for ∫A·dl along every edge; `vector_field` maps (P, 2) points to (P, 2)."""
    mids = edge_midpoints(n_side, side, corner)
    A = np.asarray(vector_field(mids), float)
    e = grid_edges(n_side)
    h = side / (n_side - 1)
    theta = h * A[np.arange(len(mids)), e.direction]
    return LinkGrid2D.from_edge_phases(n_side, theta, side, corner)


# ---------- Fields ----------

@dataclass(frozen=True)
class FieldSpec:
    kind: str = "zero"          # zero | constant | random
    amplitude: float = 0.0
    seed: int = 0
    modes: int = 4

    def samples(self, n_side: int, side: float = 1.0) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros((n_side, n_side))
        if self.kind == "constant":
            return np.full((n_side, n_side), float(self.amplitude))
        if self.kind == "random":
            rng = np.random.default_rng(self.seed)
            t = np.linspace(0.0, 1.0, n_side)
            yy, xx = np.meshgrid(t, t, indexing="ij")
            B = np.zeros((n_side, n_side))
            for p in range(self.modes):
                for q in range(self.modes):
                    c, sx, sy = rng.standard_normal(), rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi)
                    B += c * np.cos(np.pi * p * xx + sx) * np.cos(np.pi * q * yy + sy)
            peak = np.max(np.abs(B))
            return B * (self.amplitude / peak) if peak > 0 else B
        raise InvalidInputError(f"unknown field kind {self.kind!r}")


def _dirichlet_laplacian(n_in: int, h: float) -> sp.csr_matrix:
    T = sp.diags([np.ones(n_in - 1), -2 * np.ones(n_in), np.ones(n_in - 1)], [-1, 0, 1])
    I = sp.identity(n_in)
    return ((sp.kron(I, T) + sp.kron(T, I)) / h**2).tocsr()


def field_phases(field_values: np.ndarray, side: float = 1.0, corner=(0.0, 0.0)) -> LinkGrid2D:
    """
    Phases of A = ∇⊥φ where Δφ = B with φ = 0 on the boundary, so ν·A vanishes there.
    `field_values` are node samples of B with shape (n, n).
    """
    B = np.asarray(field_values, float)
    n = B.shape[0]
    if B.shape != (n, n) or n < 3:
        raise InvalidInputError(f"field samples must be square with n >= 3, got {B.shape}")
    h = side / (n - 1)
    phi = np.zeros((n, n))
    if np.any(B):
        L = _dirichlet_laplacian(n - 2, h)
        phi[1:-1, 1:-1] = spsolve(L.tocsc(), B[1:-1, 1:-1].ravel()).reshape(n - 2, n - 2)
    dphi_dy, dphi_dx = np.gradient(phi, h, h)
    Ax, Ay = -dphi_dy, dphi_dx
    px = 0.5 * h * (Ax[:, :-1] + Ax[:, 1:])
    py = 0.5 * h * (Ay[:-1, :] + Ay[1:, :])
    return LinkGrid2D(n_side=n, side=side, phases_x=px, phases_y=py, corner=corner)


# ---------- Green functions ----------

@dataclass(frozen=True)
class GreenSample:
    source_index: int
    shift_e: float
    values: np.ndarray = field(repr=False)


def green_functions(op: OperatorHandle, e: float, sources: Sequence[int]) -> List[GreenSample]:
    """Solutions of (H + e)G = δ_source, δ normalized to unit mass, from one factorization."""
    if not e > 0:
        raise InvalidInputError(f"shift e must be positive, got {e}")
    lu = op.shifted_factor(e)
    s = 1.0 / np.sqrt(op.mass)
    out = []
    for src in sources:
        if not 0 <= src < op.dim:
            raise IndexError(f"source node {src} out of range")
        rhs = np.zeros(op.dim, dtype=op.matrix.dtype)
        rhs[src] = s[src]
        y = lu.solve(rhs)
        if not np.all(np.isfinite(y)):
            raise SolverError(f"green function solve produced non-finite values at source {src}")
        out.append(GreenSample(source_index=int(src), shift_e=float(e), values=y * s))
    return out


def green_function(op: OperatorHandle, e: float, source: int) -> GreenSample:
    return green_functions(op, e, [source])[0]


# ---------- Birman-Schwinger ----------

def _tail_integral(p: float, a, K: float):
    """∫_K^∞ (π²x² + a)^{-p} dx for p > 1/2 via the regularized incomplete beta function."""
    a = np.asarray(a, float)
    tau2 = (np.pi * K) ** 2 / a
    return a ** (0.5 - p) / np.pi * 0.5 * beta(p - 0.5, 0.5) * betainc(p - 0.5, 0.5, 1.0 / (1.0 + tau2))


def _lattice_sum(e: float, m: float, J: int) -> float:
    j = np.arange(J + 2, dtype=float)
    k = np.arange(J, dtype=float)
    a = np.pi**2 * j**2 + e
    box = (a[:, None] + np.pi**2 * k[None, :] ** 2) ** (-m)
    fK = (a + np.pi**2 * J**2) ** (-m)
    dfK = -2.0 * m * np.pi**2 * J * (a + np.pi**2 * J**2) ** (-m - 1)
    # Euler-Maclaurin tail of every row beyond k = J
    rows = box.sum(axis=1) + _tail_integral(m, a, J) + 0.5 * fK - dfK / 12.0
    c_m = 0.5 * beta(0.5, m - 0.5)
    outer = (
        c_m / np.pi * _tail_integral(m - 0.5, e, J)
        + 0.5 * _tail_integral(m, e, J)
        + 0.5 * rows[J]
        - (rows[J + 1] - rows[J - 1]) / 24.0
    )
    return float(math.fsum(rows[:J]) + outer)


def birman_schwinger_bound(
    Lambda: float,
    lambda_target: Optional[float] = None,
    m: float = 2,
    *,
    shift_e: Optional[float] = None,
    rel_tol: float = 1e-10,
) -> float:
    """
    f(Λ) = Λ^m Σ_{j,k≥0} (π²(j²+k²) + e)^{-m} with e = Λ − λ_target (or `shift_e` directly).
    """
    if m < 2:
        raise InvalidInputError(f"m must be >= 2 for a convergent sum, got {m}")
    if shift_e is None:
        if lambda_target is None:
            raise InvalidInputError("give either lambda_target or shift_e")
        if not 0 <= lambda_target <= Lambda:
            raise InvalidInputError(f"need 0 <= lambda_target <= Lambda, got {lambda_target}, {Lambda}")
        shift_e = Lambda - lambda_target
    if not shift_e > 0:
        raise InvalidInputError(f"e = Lambda - lambda_target must be positive, got {shift_e}")
    J = 128
    prev = _lattice_sum(shift_e, m, J)
    while True:
        J *= 2
        cur = _lattice_sum(shift_e, m, J)
        if abs(cur - prev) <= rel_tol * abs(cur) or J >= 2048:
            if abs(cur - prev) > rel_tol * abs(cur):
                log.warning("lattice sum tail above %.1e at J = %d", rel_tol, J)
            return float(Lambda**m * cur)
        prev = cur


# ---------- Diamagnetic checks ----------

@dataclass(frozen=True)
class DiamagneticReport:
    max_violation: float
    lambda1_field: float
    lambda1_free: float
    count_field: int
    count_free: int

    @property
    def lambda1_gap(self) -> float:
        return self.lambda1_field - self.lambda1_free


def diamagnetic_check(
    field_spec: FieldSpec,
    e: float,
    sources: Iterable[int],
    *,
    n_side: int = 65,
    side: float = 1.0,
    Lambda: float = 2.0,
    tol: float = 1e-10,
    seed: int = 0,
) -> DiamagneticReport:
    """Entrywise |G^{A,e}| ≤ G^{0,e}, λ₁(A) ≥ λ₁(0) and N(Λ, A) for one field."""
    sources = list(sources)
    grid = field_phases(field_spec.samples(n_side, side), side)
    op_field = assemble_magnetic_laplacian(grid)
    op_free = assemble_magnetic_laplacian(LinkGrid2D(n_side=n_side, side=side))
    g_field = green_functions(op_field, e, sources)
    g_free = green_functions(op_free, e, sources)
    violation = max(
        float(np.max(np.abs(ga.values) - np.real(g0.values))) for ga, g0 in zip(g_field, g_free)
    )
    lam_field = lowest_eigenvalues(op_field, 1, tol, seed=seed).eigenvalues[0]
    lam_free = lowest_eigenvalues(op_free, 1, tol, seed=seed).eigenvalues[0]
    return DiamagneticReport(
        max_violation=violation,
        lambda1_field=float(lam_field),
        lambda1_free=float(lam_free),
        count_field=count_below(op_field, Lambda, tol=tol, seed=seed),
        count_free=count_below(op_free, Lambda, tol=tol, seed=seed),
    )


# ---------- Local uncertainty ----------

def local_uncertainty_surrogate(n_side: int = 33, samples: int = 64, seed: int = 0, side: float = 1.0) -> float:
    """
    Largest C₂ with (1/4)∫|∇ψ|² ≥ C₂∫ρ²/∫ρ − ∫ρ/|Q| over seeded smooth positive trial states.
    An empirical upper estimate of the universal constant, never a proof of it.
    """
    e, off, deg, mass = magnetic_form(n_side, side / (n_side - 1), np.zeros(2 * n_side * (n_side - 1)))
    nodes = node_coordinates(n_side, side) / side
    rng = np.random.default_rng(seed)
    best = math.inf
    for _ in range(samples):
        logpsi = np.zeros(len(nodes))
        for p in range(4):
            for q in range(4):
                logpsi += rng.normal(scale=1.0 / (1 + p + q)) * np.cos(np.pi * p * nodes[:, 0]) * np.cos(
                    np.pi * q * nodes[:, 1]
                )
        psi = np.exp(logpsi)
        grad_sq = float(np.sum(e.weight * (psi[e.tail] - psi[e.head]) ** 2))
        M = float(np.sum(mass * psi**2))
        P = float(np.sum(mass * psi**4))
        best = min(best, (0.25 * grad_sq + M / side**2) * M / P)
    return best


def convergence_order(value_coarse: float, value_fine: float, value_finest: float, ratio: float = 2.0) -> float:
    """Observed order from three successive refinements with a fixed spacing ratio."""
    d1, d2 = abs(value_coarse - value_fine), abs(value_fine - value_finest)
    if d1 == 0 or d2 == 0:
        raise InvalidInputError("successive differences vanish; order is undefined")
    return math.log(d1 / d2) / math.log(ratio)
