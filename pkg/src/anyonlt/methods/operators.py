from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh, splu

from anyonlt.errors import InvalidInputError, SolverError

log = logging.getLogger(__name__)

DENSE_LIMIT = 1024  # n_side ≤ 32 for one-body grids
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class OperatorHandle:
    """
    Symmetric (Hermitian) form M^{-1/2} K M^{-1/2} of a lumped-mass discretization.
    `mass` holds the lumped mass of every unknown so callers can map back to M^{-1} K.
    """
    matrix: sp.csr_matrix = field(repr=False)
    mass: np.ndarray = field(repr=False)
    label: str = ""

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def norm_bound(self) -> float:
        # Gershgorin: every row sum of |S| is at most twice its diagonal for these Laplacians
        return float(np.max(np.abs(self.matrix).sum(axis=1)))

    def shifted_factor(self, shift: float):
        """LU factors of S + shift·I."""
        A = (self.matrix + shift * sp.identity(self.dim, dtype=self.matrix.dtype, format="csr")).tocsc()
        try:
            return splu(A)
        except RuntimeError as exc:
            raise SolverError(f"factorization of S + {shift:g} failed: {exc}") from exc


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    residual_norms: np.ndarray
    k_requested: int
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)


def _residuals(op: OperatorHandle, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    scale = max(op.norm_bound(), 1.0)
    R = op.matrix @ vecs - vecs * vals[None, :]
    return np.linalg.norm(R, axis=0) / (np.linalg.norm(vecs, axis=0) * scale)


def _start_vector(dim: int, dtype, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim)
    if np.iscomplexobj(np.zeros(1, dtype=dtype)):
        v0 = v0 + 1j * rng.standard_normal(dim)
    return v0.astype(dtype)


def lowest_eigenvalues(
    op: OperatorHandle,
    k: int,
    tol: float = 1e-10,
    *,
    method: str = "auto",
    sigma: Optional[float] = -1.0,
    seed: int = 0,
    maxiter: Optional[int] = None,
    return_vectors: bool = False,
    residual_tol: float = RESIDUAL_TOL,
) -> Spectrum:
    """
    k smallest eigenvalues. method: "dense" (full diagonalization), "arpack" (implicitly
    restarted Lanczos; shift-invert around `sigma`, or smallest-algebraic when sigma is None)
    or "auto" (dense up to DENSE_LIMIT unknowns).
    """
    if k < 1 or k >= op.dim:
        raise InvalidInputError(f"k must satisfy 1 <= k < {op.dim}, got {k}")
    if method == "auto":
        method = "dense" if op.dim <= DENSE_LIMIT else "arpack"
    if method == "dense":
        vals, vecs = np.linalg.eigh(op.dense())
        vals, vecs = vals[:k], vecs[:, :k]
    elif method == "arpack":
        v0 = _start_vector(op.dim, op.matrix.dtype, seed)
        try:
            if sigma is None:
                vals, vecs = eigsh(op.matrix, k=k, which="SA", tol=tol, v0=v0,
                                   ncv=min(op.dim, max(2 * k + 1, 40)), maxiter=maxiter)
            else:
                vals, vecs = eigsh(op.matrix, k=k, sigma=sigma, which="LM", tol=tol, v0=v0,
                                   maxiter=maxiter)
        except ArpackNoConvergence as exc:
            best = float("nan")
            if exc.eigenvalues is not None and len(exc.eigenvalues):
                best = float(np.min(_residuals(op, np.real(exc.eigenvalues), exc.eigenvectors)))
            raise SolverError(f"eigensolver did not converge for k = {k}", best) from exc
        order = np.argsort(vals)
        vals, vecs = np.real(vals[order]), vecs[:, order]
    else:
        raise InvalidInputError(f"unknown eigen method {method!r}")

    res = _residuals(op, vals, vecs)
    if np.any(res > residual_tol):
        raise SolverError(f"eigenpair residual above {residual_tol:g}", float(np.max(res)))
    log.debug("%s: %d eigenvalues via %s, max residual %.2e", op.label, k, method, float(np.max(res)))
    return Spectrum(
        eigenvalues=vals,
        residual_norms=res,
        k_requested=k,
        eigenvectors=vecs if return_vectors else None,
    )


def count_below(op: OperatorHandle, Lambda: float, *, tol: float = 1e-10, seed: int = 0) -> int:
    """Number of eigenvalues ≤ Λ."""
    if not np.isfinite(Lambda):
        raise InvalidInputError(f"Lambda must be finite, got {Lambda}")
    if op.dim <= DENSE_LIMIT:
        return int(np.sum(np.linalg.eigvalsh(op.dense()) <= Lambda))
    k = min(8, op.dim - 2)
    while True:
        spec = lowest_eigenvalues(op, k, tol, method="arpack", seed=seed)
        if spec.eigenvalues[-1] > Lambda:
            return int(np.sum(spec.eigenvalues <= Lambda))
        if k >= op.dim - 2:
            log.debug("count_below fell back to dense diagonalization at k = %d", k)
            return int(np.sum(np.linalg.eigvalsh(op.dense()) <= Lambda))
        k = min(2 * k, op.dim - 2)
