from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss

from anyonlt.errors import InvalidInputError, NumericError, ResourceError
from anyonlt.methods.core_model import (
    MODES,
    AnyonParams,
    SquareDomain,
    flux_count_at,
    segment_line_integral,
)
from anyonlt.methods.magnetic_grid import grid_edges, magnetic_form, node_coordinates
from anyonlt.methods.operators import OperatorHandle, lowest_eigenvalues

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 4_000_000


@dataclass(frozen=True)
class TwoBodyGrid:
    n_side: int
    params: AnyonParams
    domain: SquareDomain = SquareDomain()
    outside: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    mode: str = "kinetic-only"
    flux_weight: float = 1.0
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.n_side < 8:
            raise InvalidInputError(f"n_side must be >= 8, got {self.n_side}")
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}, got {self.mode!r}")
        out = np.asarray(self.outside, float).reshape(-1, 2)
        if out.size and np.any(self.domain.contains(out)):
            raise InvalidInputError("outside particles must lie outside the square")
        object.__setattr__(self, "outside", out)

    @property
    def dimension(self) -> int:
        return self.n_side**4

    @property
    def spacing(self) -> float:
        return self.domain.side / (self.n_side - 1)

    @property
    def gamma(self) -> float:
        return self.domain.gamma(self.params.radius)


@dataclass(frozen=True)
class TwoAnyonResult:
    energy: float
    residual: float
    antisymmetry_defect: float
    modulus_gradient: Optional[float] = None
    state: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def functional_total(self) -> float:
        return self.energy + (self.modulus_gradient or 0.0)


# ---------- Assembly ----------

def edge_phases(grid: TwoBodyGrid, alpha: Optional[float] = None) -> np.ndarray:
    """
    θ[e, u]: phase of a hop along edge e while the partner sits on node u, the exact line
    integral of α·A along the edge. Away from the partner's disk these are angle increments,
    so at integer α every loop that avoids the disk is phase free.
    """
    alpha = grid.params.alpha if alpha is None else alpha
    nodes = node_coordinates(grid.n_side, grid.domain.side, grid.domain.corner)
    edges = grid_edges(grid.n_side)
    R = grid.params.radius
    tail, head = nodes[edges.tail], nodes[edges.head]
    pair = segment_line_integral(tail, head, nodes, R)
    out = segment_line_integral(tail, head, grid.outside, R).sum(axis=1)
    return alpha * (pair + out[:, None])


def _flux_diagonal(grid: TwoBodyGrid, nodes: np.ndarray) -> np.ndarray:
    R = grid.params.radius
    dist = np.hypot(nodes[:, None, 0] - nodes[None, :, 0], nodes[:, None, 1] - nodes[None, :, 1])
    out = flux_count_at(nodes, grid.outside, R)
    V = 4.0 / R**2 * (dist < R) + 2.0 / R**2 * (out[:, None] + out[None, :])
    return V.ravel()


def _product_operator(grid: TwoBodyGrid, alpha: float, kinetic_weight: float, with_flux: bool) -> sp.csr_matrix:
    n = grid.n_side
    N = n * n
    h = grid.spacing
    nodes = node_coordinates(n, grid.domain.side, grid.domain.corner)
    edges = grid_edges(n)
    theta = edge_phases(grid, alpha)
    _, _, deg, _ = magnetic_form(n, h, np.zeros(len(edges.tail)), edges)
    mu = edges.node_weight
    scale = kinetic_weight / h**2
    hop = -scale * (edges.weight / np.sqrt(mu[edges.tail] * mu[edges.head]))[:, None] * np.exp(1j * theta)

    partner = np.arange(N)[None, :]
    tail = edges.tail[:, None]
    head = edges.head[:, None]
    # particle one hops with the partner frozen, then the mirror image for particle two
    r1, c1 = (tail * N + partner).ravel(), (head * N + partner).ravel()
    r2, c2 = (partner * N + tail).ravel(), (partner * N + head).ravel()
    v = hop.ravel()
    diag = scale * ((deg / mu)[:, None] + (deg / mu)[None, :]).ravel()
    if with_flux:
        diag = diag + 0.25 * abs(grid.flux_weight) * _flux_diagonal(grid, nodes)
    idx = np.arange(N * N)
    rows = np.concatenate([r1, c1, r2, c2, idx])
    cols = np.concatenate([c1, r1, c2, r2, idx])
    vals = np.concatenate([v, np.conj(v), v, np.conj(v), diag.astype(complex)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(N * N, N * N))


def antisymmetric_basis(n_side: int) -> sp.csr_matrix:
    """Orthonormal basis (e_{a,u} − e_{u,a})/√2, a < u, of the antisymmetric sector."""
    N = n_side * n_side
    a, u = np.triu_indices(N, k=1)
    cols = np.arange(len(a))
    s = 1.0 / math.sqrt(2.0)
    return sp.csr_matrix(
        (np.concatenate([np.full(len(a), s), np.full(len(a), -s)]),
         (np.concatenate([a * N + u, u * N + a]), np.concatenate([cols, cols]))),
        shape=(N * N, len(a)),
    )


def symmetric_basis(n_side: int) -> sp.csr_matrix:
    """Orthonormal (e_{a,u} + e_{u,a})/√2, a < u: symmetric pair states that vanish at coincidence."""
    N = n_side * n_side
    a, u = np.triu_indices(N, k=1)
    cols = np.arange(len(a))
    s = 1.0 / math.sqrt(2.0)
    return sp.csr_matrix(
        (np.full(2 * len(a), s), (np.concatenate([a * N + u, u * N + a]), np.concatenate([cols, cols]))),
        shape=(N * N, len(a)),
    )


def swap_permutation(n_side: int) -> np.ndarray:
    N = n_side * n_side
    s = np.arange(N * N)
    return (s % N) * N + s // N


def assemble_two_body(grid: TwoBodyGrid) -> OperatorHandle:
    """
    Symmetric operator on the product grid: per-particle magnetic hops whose phases follow the
    partner's node, plus the diagonal flux term in full mode (weights 1/2 and 1/4).
    """
    if grid.dimension > grid.budget:
        raise ResourceError(grid.dimension, grid.budget)
    full = grid.mode == "full"
    S = _product_operator(grid, grid.params.alpha, 0.5 if full else 1.0, full)
    mu = grid_edges(grid.n_side).node_weight
    mass = grid.spacing**4 * np.outer(mu, mu).ravel()
    return OperatorHandle(matrix=S, mass=mass, label=f"two-body[{grid.n_side},{grid.mode}]")


def _modulus_gradient(grid: TwoBodyGrid, y: np.ndarray) -> float:
    """(1/4)Σ_j∫|∇_j|Ψ||² for the symmetric-form coefficients y of a normalized state."""
    S0 = _product_operator(grid, 0.0, 1.0, False)
    z = np.abs(y)
    return 0.25 * float(np.real(np.vdot(z, S0 @ z)) / np.real(np.vdot(y, y)))


# ---------- Ground energy ----------

def ground_energy(
    grid: TwoBodyGrid,
    *,
    tol: float = 1e-10,
    seed: int = 0,
    keep_state: bool = False,
) -> TwoAnyonResult:
    """Lowest eigenvalue of the two-body operator on the antisymmetric sector."""
    op = assemble_two_body(grid)
    B = antisymmetric_basis(grid.n_side)
    S_anti = (B.T @ op.matrix @ B).tocsr()
    sector = OperatorHandle(matrix=S_anti, mass=np.ones(S_anti.shape[0]), label=op.label + ":anti")
    method = "dense" if sector.dim <= 1024 else "arpack"
    spec = lowest_eigenvalues(sector, 2, tol, method=method, sigma=None, seed=seed, return_vectors=True)
    y = B @ spec.eigenvectors[:, 0]
    swapped = y[swap_permutation(grid.n_side)]
    defect = float(np.linalg.norm(y + swapped) / (2.0 * np.linalg.norm(y)))
    modulus = _modulus_gradient(grid, y) if grid.mode == "full" else None
    log.debug("E2(%s) = %.6g, residual %.2e", grid.params, spec.eigenvalues[0], spec.residual_norms[0])
    return TwoAnyonResult(
        energy=float(spec.eigenvalues[0]),
        residual=float(spec.residual_norms[0]),
        antisymmetry_defect=defect,
        modulus_gradient=modulus,
        state=y if keep_state else None,
    )


def hard_core_boson_energy(
    n_side: int,
    *,
    side: float = 1.0,
    tol: float = 1e-10,
    seed: int = 0,
) -> float:
    """
    Lowest free energy of two bosons on the product grid that never share a node.

    When R is below the spacing the α = 1 phases are a pure gauge, and E₂(1) equals this value.
    The excluded coincident nodes act as a hole of size h around the diagonal, so it decays
    only like 1/log(n_side).
    """
    grid = TwoBodyGrid(n_side=n_side, params=AnyonParams(alpha=0.0, radius=side), domain=SquareDomain(side=side))
    if grid.dimension > grid.budget:
        raise ResourceError(grid.dimension, grid.budget)
    B = symmetric_basis(n_side)
    S = (B.T @ _product_operator(grid, 0.0, 1.0, False) @ B).tocsr()
    sector = OperatorHandle(matrix=S, mass=np.ones(S.shape[0]), label=f"hard-core[{n_side}]")
    method = "dense" if sector.dim <= 1024 else "arpack"
    return float(lowest_eigenvalues(sector, 2, tol, method=method, sigma=None, seed=seed).eigenvalues[0])


def trial_state_on_grid(grid: TwoBodyGrid) -> np.ndarray:
    """ψ₂(x₁, x₂) = (x₁¹ − x₂¹) + (x₁² − x₂²) sampled on the product grid (flattened)."""
    nodes = node_coordinates(grid.n_side, grid.domain.side, grid.domain.corner)
    s = nodes[:, 0] + nodes[:, 1]
    return (s[:, None] - s[None, :]).ravel()


def evaluate_state(grid: TwoBodyGrid, psi: np.ndarray) -> dict:
    """Rayleigh quotient of the assembled operator and the modulus-gradient term for ψ."""
    op = assemble_two_body(grid)
    y = np.sqrt(op.mass) * np.asarray(psi, dtype=complex).ravel()
    norm = float(np.real(np.vdot(y, y)))
    if norm == 0:
        raise InvalidInputError("state vanishes identically")
    rq = float(np.real(np.vdot(y, op.apply(y))) / norm)
    return {"rayleigh_quotient": rq, "modulus_gradient": _modulus_gradient(grid, y)}


# ---------- Trial state ----------

@dataclass(frozen=True)
class TrialStateBound:
    raw_quotient: float
    kinetic_value: float
    chain_value: float
    norm_squared: float
    nodes: int


def _octant_pieces(R: float):
    """θ-intervals of the eight octants, split where the disk of radius R leaves the square."""
    pieces = []
    for k in range(8):
        t0, t1 = k * np.pi / 4, (k + 1) * np.pi / 4
        axis, diag = (t0, t1) if k % 2 == 0 else (t1, t0)
        if 1.0 < R < math.sqrt(2.0):
            tc = axis + math.copysign(math.acos(1.0 / R), diag - axis)
            pieces += [(min(axis, tc), max(axis, tc)), (min(tc, diag), max(tc, diag))]
        else:
            pieces.append((t0, t1))
    return pieces


def _trial_integrals(R: float, n: int) -> np.ndarray:
    """[∫ψ², ∫ψ²|d|²/|d|_R⁴, ∫_{|d|<R}ψ²] over the pair difference d with its triangular weight."""
    x, w = leggauss(n)
    total = np.zeros(3)
    for ta, tb in _octant_pieces(R):
        th = 0.5 * (tb - ta) * x + 0.5 * (tb + ta)
        wth = 0.5 * (tb - ta) * w
        c, s = np.abs(np.cos(th)), np.abs(np.sin(th))
        rmax = 1.0 / np.maximum(c, s)
        rsplit = np.minimum(R, rmax)
        for lo, hi, inner in ((np.zeros_like(rmax), rsplit, True), (rsplit, rmax, False)):
            span = hi - lo
            r = 0.5 * span[:, None] * x[None, :] + 0.5 * (hi + lo)[:, None]
            wr = 0.5 * span[:, None] * w[None, :]
            weight = (1 - r * c[:, None]) * (1 - r * s[:, None])
            base = (1 + np.sin(2 * th))[:, None] * r**3 * weight * wr * wth[:, None]
            total[0] += base.sum()
            total[1] += (base * r**2 / np.maximum(r, R) ** 4).sum()
            if inner:
                total[2] += base.sum()
    return total


def trial_state_bound(params: AnyonParams, nodes: int = 64, tol: float = 1e-6) -> TrialStateBound:
    """
    Energies of ψ₂ on the unit square (unnormalized): kinetic 2(2 + α²J_R), the weighted
    functional 3 + α²J_R + P_R/R², and the raw kinetic Rayleigh quotient.
    """
    coarse = _trial_integrals(params.radius, nodes)
    fine = _trial_integrals(params.radius, 2 * nodes)
    if np.any(np.abs(fine - coarse) > tol * np.maximum(1.0, np.abs(fine))):
        raise NumericError(f"trial-state quadrature not converged at {nodes} nodes")
    norm_sq, J, P = coarse
    a2 = params.alpha**2
    kinetic = 2.0 * (2.0 + a2 * J)
    chain = 0.5 * kinetic + 1.0 + P / params.radius**2
    return TrialStateBound(
        raw_quotient=kinetic / norm_sq,
        kinetic_value=kinetic,
        chain_value=chain,
        norm_squared=norm_sq,
        nodes=nodes,
    )


# ---------- Profiles ----------

def e2_alpha_profile(
    gamma: float,
    n_side: int,
    alphas: Sequence[float],
    *,
    side: float = 1.0,
    tol: float = 1e-10,
    workers: int = 1,
) -> List[Tuple[float, float]]:
    """Kinetic-only E₂ on a side-L square for every α at fixed γ = R/L."""
    if gamma > 1.0 / 12.0:
        log.info("gamma = %.3g > 1/12: the radial lower bound is zero there", gamma)

    def solve(alpha: float) -> Tuple[float, float]:
        grid = TwoBodyGrid(
            n_side=n_side,
            params=AnyonParams(alpha=float(alpha), radius=gamma * side),
            domain=SquareDomain(side=side),
            mode="kinetic-only",
        )
        return float(alpha), ground_energy(grid, tol=tol).energy

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(solve, alphas))
    return [solve(a) for a in alphas]


def measured_slope(profile: Sequence[Tuple[float, float]]) -> float:
    """inf over α ≠ 1 of E₂/|α − 1|."""
    ratios = [e / abs(a - 1.0) for a, e in profile if a != 1.0]
    if not ratios:
        raise InvalidInputError("profile has no alpha different from 1")
    return min(ratios)
