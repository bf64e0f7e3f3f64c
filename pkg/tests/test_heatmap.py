import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hotspots.errors import ParameterError
from hotspots.geo import BBox, GeoPoint
from hotspots.heatmap import HeatmapParams, render, kernel_value

from oracles import dense_heatmap

BOX = BBox(35.0, 35.2, -81.0, -80.8)
ALPHA = 4e-4


def params(**kw):
    base = dict(alpha=ALPHA, width=40, height=30, bbox=BOX, normalize=False)
    base.update(kw)
    return HeatmapParams(**base)


def random_points(rng, n, box=BOX):
    lat = rng.uniform(box.min_lat - 0.02, box.max_lat + 0.02, n)
    lon = rng.uniform(box.min_lon - 0.02, box.max_lon + 0.02, n)
    return np.column_stack([lat, lon])


def test_kernel_values():
    c = GeoPoint(10, 20)
    assert kernel_value(c, c, 1e-4) == 1.0
    d = math.sqrt(1e-4)
    assert kernel_value(c, GeoPoint(10 + d, 20), 1e-4) == pytest.approx(math.exp(-1), abs=1e-12)
    assert kernel_value(c, GeoPoint(10 + d, 20 + d), 1e-4) == pytest.approx(math.exp(-2), abs=1e-12)
    assert math.exp(-1) == pytest.approx(0.367879, abs=1e-6)
    with pytest.raises(ParameterError):
        kernel_value(c, c, 0)


def test_params_validation():
    for bad in (dict(alpha=0), dict(width=0), dict(height=2.5), dict(cutoff_sigmas=0), dict(kernel_space="m")):
        with pytest.raises(ParameterError):
            params(**bad)
    with pytest.raises(ParameterError):
        render([], HeatmapParams())


def test_zero_points(backend):
    r = render([], params(normalize=True))
    assert r.values.shape == (30, 40) and not r.values.any()


def test_single_point_at_centre(backend):
    blank = render([], params())
    c = blank.cell_center(7, 11)
    r = render([c], params())
    assert r.values[7, 11] == 1.0
    others = np.delete(r.values.ravel(), 7 * 40 + 11)
    assert (others < 1.0).all()
    assert r.cell_of(c.lat, c.lon) == (7, 11)
    r2 = render([c, c], params())
    assert r2.values[7, 11] == 2.0


def test_matches_dense_oracle(backend):
    rng = np.random.default_rng(1)
    pts = random_points(rng, 25)
    p = params(width=16, height=12, cutoff_sigmas=None)
    want = dense_heatmap(pts[:, 0], pts[:, 1], BOX, 16, 12, ALPHA)
    assert np.allclose(render(pts, p).values, want, rtol=1e-12, atol=1e-12)


def test_cutoff_soundness(backend):
    rng = np.random.default_rng(2)
    for _ in range(3):
        pts = random_points(rng, 100)
        full = render(pts, params(cutoff_sigmas=None)).values
        cut = render(pts, params()).values
        assert np.abs(full - cut).max() < 1e-6


def test_additivity_and_monotonicity(backend):
    rng = np.random.default_rng(3)
    for _ in range(5):
        a, b = random_points(rng, 30), random_points(rng, 20)
        ra, rb = render(a, params()).values, render(b, params()).values
        both = render(np.vstack([a, b]), params()).values
        assert np.allclose(both, ra + rb, rtol=0, atol=1e-9)
        assert (both >= ra).all()


def test_mirror_symmetry(backend):
    rng = np.random.default_rng(4)
    clat, clon = BOX.center
    for _ in range(4):
        pts = random_points(rng, 40)
        ns = render(pts, params()).values
        flipped_lat = np.column_stack([2 * clat - pts[:, 0], pts[:, 1]])
        assert np.allclose(render(flipped_lat, params()).values, ns[::-1, :], atol=1e-9)
        flipped_lon = np.column_stack([pts[:, 0], 2 * clon - pts[:, 1]])
        assert np.allclose(render(flipped_lon, params()).values, ns[:, ::-1], atol=1e-9)


def test_normalization(backend):
    rng = np.random.default_rng(5)
    r = render(random_points(rng, 50), params(normalize=True))
    assert r.values.max() == 1.0 and r.values.min() >= 0 and r.normalized


def test_backends_agree():
    from hotspots import _accel

    rng = np.random.default_rng(6)
    pts = random_points(rng, 200)
    prev = _accel.backend()
    try:
        _accel.set_backend("numba")
        a = render(pts, params()).values
        _accel.set_backend("numpy")
        b = render(pts, params()).values
    finally:
        _accel.set_backend(prev)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-15)


def test_km_kernel_space(backend):
    c = render([], params()).cell_center(15, 20)
    # one km north of the centre with alpha = 1 km^2 gives e^-1 at the centre cell
    north = GeoPoint(c.lat + 1 / 111.19508, c.lon)
    r = render([north], params(kernel_space="km", alpha=1.0, cutoff_sigmas=None))
    assert r.values[15, 20] == pytest.approx(math.exp(-1), rel=1e-5)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.tuples(st.floats(34.9, 35.3), st.floats(-81.1, -80.7)), max_size=15),
    st.tuples(st.floats(34.9, 35.3), st.floats(-81.1, -80.7)),
)
def test_adding_a_point_never_decreases(pts, extra):
    base = render(np.reshape(pts, (-1, 2)), params(width=12, height=9)).values
    more = render(np.array(pts + [extra]), params(width=12, height=9)).values
    assert (more >= base).all()
    assert (base >= 0).all()
