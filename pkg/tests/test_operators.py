import numpy as np
import pytest
import scipy.sparse as sp

from anyonlt.errors import InvalidInputError
from anyonlt.methods.operators import OperatorHandle, count_below, lowest_eigenvalues


def _chain(n: int) -> OperatorHandle:
    """Neumann second-difference matrix of a path, eigenvalues 4 sin²(πk/(2n))."""
    main = np.full(n, 2.0)
    main[0] = main[-1] = 1.0
    A = sp.diags([-np.ones(n - 1), main, -np.ones(n - 1)], [-1, 0, 1], format="csr")
    return OperatorHandle(matrix=A, mass=np.ones(n), label=f"chain[{n}]")


def _exact(n: int, k: int) -> np.ndarray:
    return 4.0 * np.sin(np.pi * np.arange(k) / (2 * n)) ** 2


def test_dense_matches_closed_form():
    spec = lowest_eigenvalues(_chain(200), 5)
    assert np.allclose(spec.eigenvalues, _exact(200, 5), atol=1e-12)
    assert np.all(spec.residual_norms < 1e-10)


@pytest.mark.parametrize("sigma", [-1.0, None])
def test_arpack_matches_closed_form(sigma):
    spec = lowest_eigenvalues(_chain(1500), 4, method="arpack", sigma=sigma, seed=3)
    assert np.allclose(spec.eigenvalues, _exact(1500, 4), atol=1e-9)


def test_seeded_arpack_is_deterministic():
    a = lowest_eigenvalues(_chain(1500), 3, method="arpack", seed=11).eigenvalues
    b = lowest_eigenvalues(_chain(1500), 3, method="arpack", seed=11).eigenvalues
    assert np.array_equal(a, b)


def test_vectors_are_returned_on_request():
    spec = lowest_eigenvalues(_chain(50), 2, return_vectors=True)
    assert spec.eigenvectors.shape == (50, 2)
    assert lowest_eigenvalues(_chain(50), 2).eigenvectors is None


def test_bad_arguments():
    with pytest.raises(InvalidInputError):
        lowest_eigenvalues(_chain(10), 0)
    with pytest.raises(InvalidInputError):
        lowest_eigenvalues(_chain(10), 10)
    with pytest.raises(InvalidInputError):
        lowest_eigenvalues(_chain(10), 2, method="magic")
    with pytest.raises(InvalidInputError):
        count_below(_chain(10), float("inf"))


@pytest.mark.parametrize("n", [100, 1500])
def test_count_below(n):
    Lambda = 0.01
    expected = int(np.sum(_exact(n, n) <= Lambda))
    assert count_below(_chain(n), Lambda) == expected


def test_shifted_factor_solves():
    op = _chain(30)
    lu = op.shifted_factor(0.5)
    rhs = np.arange(30, dtype=float)
    x = lu.solve(rhs)
    assert np.allclose(op.apply(x) + 0.5 * x, rhs)
    assert op.norm_bound() == pytest.approx(4.0)
