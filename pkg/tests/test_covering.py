import math

import numpy as np
import pytest
from scipy import special

from anyonlt.errors import InvalidInputError, UnreachableMassError
from anyonlt.methods.covering import (
    CoveringCollection,
    DensityGrid,
    Square,
    audit_cover,
    besicovitch_select,
    calibrated_square,
    cover_density,
    square_mass,
)


def _uniform(value=4.0, n=41, h=0.25):
    return DensityGrid(values=np.full((n, n), value), spacing=h)


def _gaussian(sigma=1.0, h=0.05, half_width=6.0):
    t = np.arange(-half_width, half_width + h / 2, h)
    yy, xx = np.meshgrid(t, t, indexing="ij")
    return DensityGrid(values=np.exp(-(xx**2 + yy**2) / (2 * sigma**2)), spacing=h, origin=(t[0], t[0]))


def test_total_mass_uniform():
    assert _uniform().total_mass == pytest.approx(400.0)


def test_square_mass_uniform_and_clipped():
    d = _uniform()
    assert square_mass(d, (5.0, 5.0), 3.0) == pytest.approx(36.0)
    assert square_mass(d, (0.0, 0.0), 2.0) == pytest.approx(4.0)
    assert square_mass(d, (5.0, 5.0), 0.0) == 0.0


def test_square_mass_is_monotone_in_side():
    d = _gaussian()
    masses = [square_mass(d, (0.3, -0.2), s) for s in np.linspace(0.0, 12.0, 60)]
    assert all(b >= a for a, b in zip(masses, masses[1:]))


@pytest.mark.parametrize("target", [1.0, 50.0, 250.0])
def test_uniform_side_is_square_root(target):
    side = calibrated_square(_uniform(), (5.0, 5.0), target)
    assert side == pytest.approx(math.sqrt(target / 4.0), rel=1e-12)


def test_whole_mass_and_zero_target():
    d = _uniform()
    assert calibrated_square(d, (5.0, 5.0), d.total_mass) == pytest.approx(10.0, rel=1e-9)
    assert calibrated_square(d, (5.0, 5.0), 0.0) == 0.0


def test_unreachable_mass():
    with pytest.raises(UnreachableMassError) as err:
        calibrated_square(_uniform(), (5.0, 5.0), 401.0)
    assert err.value.available == pytest.approx(400.0)


def test_gaussian_side_against_closed_form():
    d = _gaussian()
    total = 2.0 * math.pi
    target = 0.5 * total
    # a centered square of side s carries 2π·erf(s/(2√2))²
    exact = 2.0 * math.sqrt(2.0) * special.erfinv(math.sqrt(target / total))
    assert calibrated_square(d, (0.0, 0.0), target) == pytest.approx(exact, abs=2 * d.spacing)


def test_single_and_duplicate_candidates():
    one = besicovitch_select([Square((1.0, 1.0), 2.0)])
    assert len(one.squares) == 1
    twin = besicovitch_select([Square((1.0, 1.0), 2.0), Square((1.0, 1.0), 2.0)])
    assert len(twin.squares) == 1
    with pytest.raises(InvalidInputError):
        besicovitch_select([])


def test_random_candidates_are_covered_with_bounded_overlap():
    rng = np.random.default_rng(7)
    centers = rng.uniform(0.0, 10.0, size=(400, 2))
    sides = rng.uniform(0.5, 2.0, size=400)
    candidates = [Square(tuple(c), s) for c, s in zip(centers, sides)]
    result = besicovitch_select(candidates)
    covered, overlap = audit_cover(result, centers)
    assert covered
    # at most one kept square per closed quadrant around any point
    assert overlap <= 4
    assert result.max_overlap == overlap
    assert len(result.squares) < 400


def test_audit_reports_holes():
    coll = CoveringCollection(squares=[Square((0.0, 0.0), 1.0)])
    assert audit_cover(coll, np.array([[0.1, 0.1], [3.0, 3.0]])) == (False, 1)
    assert audit_cover(coll, np.zeros((0, 2))) == (True, 0)


def test_without_drops_one_square():
    coll = CoveringCollection(squares=[Square((0.0, 0.0), 1.0), Square((2.0, 0.0), 1.0)], masses=np.array([1.0, 2.0]))
    rest = coll.without(0)
    assert rest.squares == [Square((2.0, 0.0), 1.0)]
    assert rest.masses.tolist() == [2.0]


def test_cover_uniform_density():
    res = cover_density(_uniform(), 40.0, 60.0)
    assert res.target == 50.0
    assert res.covered
    assert res.mass_ok
    assert res.max_overlap <= 4
    assert np.allclose(res.collection.masses, 50.0, atol=1e-8)


def test_cover_gaussian_density():
    d = _gaussian(h=0.2, half_width=4.0)
    res = cover_density(d, 0.5, 1.5, support_threshold=1e-2)
    assert res.covered
    assert res.mass_ok
    assert res.max_overlap <= 16


def test_cover_validation():
    with pytest.raises(InvalidInputError):
        cover_density(_uniform(), 60.0, 40.0)
    with pytest.raises(InvalidInputError):
        cover_density(DensityGrid(values=np.zeros((5, 5)), spacing=1.0), 1.0, 2.0)
    with pytest.raises(InvalidInputError):
        DensityGrid(values=-np.ones((3, 3)), spacing=1.0)
    with pytest.raises(InvalidInputError):
        DensityGrid(values=np.ones(4), spacing=1.0)


def test_coarsened_keeps_extent():
    d = _uniform()
    c = d.coarsened()
    assert c.values.shape == (21, 21)
    assert c.extent == d.extent
    assert DensityGrid(values=np.ones((4, 4)), spacing=1.0).coarsened() is None
