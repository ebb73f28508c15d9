import math

import numpy as np
import pytest

from grwflow.fiber import FiberGrid, fiber_volume


@pytest.mark.parametrize("kind,vol", [("torus1", 2 * math.pi), ("torus2", 4 * math.pi**2),
                                      ("sphere2_axisym", 4 * math.pi)])
def test_fiber_volume(kind, vol):
    assert fiber_volume(FiberGrid(kind, 37)) == pytest.approx(vol, rel=1e-15)


def test_side_lengths_and_resolution_tuple():
    g = FiberGrid("torus2", (16, 8), (1.0, 3.0))
    assert g.shape == (16, 8)
    assert g.spacing == (1.0 / 16, 3.0 / 8)
    assert fiber_volume(g) == pytest.approx(3.0)


@pytest.mark.parametrize("bad", [("torus1", (8, 8)), ("cube", 8), ("torus2", 3)])
def test_bad_grids_rejected(bad):
    with pytest.raises(ValueError):
        FiberGrid(*bad)


def test_partial_second_order_on_torus():
    errs = []
    for N in (16, 32, 64):
        g = FiberGrid("torus2", N)
        f = np.sin(g.coords[0]) * np.cos(2 * g.coords[1])
        exact = np.cos(g.coords[0]) * np.cos(2 * g.coords[1])
        errs.append(np.max(np.abs(g.partial(f, 0) - exact)))
        d01 = g.partial2(f, 0, 1)
        assert np.max(np.abs(d01 + 2 * np.cos(g.coords[0]) * np.sin(2 * g.coords[1]))) < 80 / N**2
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


def test_sphere_reflection_parity():
    g = FiberGrid("sphere2_axisym", 64)
    th = g.coords[0]
    f = np.cos(th) ** 2  # even across both poles
    err = np.max(np.abs(g.partial(f, 0) + np.sin(2 * th)))
    assert err < 5e-3
    # second derivative including the pole cells
    assert np.max(np.abs(g.partial2(f, 0, 0) + 2 * np.cos(2 * th))) < 5e-3
    # azimuth is passive
    assert not np.any(g.partial(f, 1))


def test_interpolation_is_accurate():
    g = FiberGrid("torus2", 48)
    f = np.sin(g.coords[0]) * np.cos(g.coords[1])
    xi = np.array([[0.1, 0.2], [3.0, 6.2], [6.28, 0.0]])
    np.testing.assert_allclose(g.interpolate(f, xi), np.sin(xi[:, 0]) * np.cos(xi[:, 1]), atol=1e-5)
    s = FiberGrid("sphere2_axisym", 64)
    pts = np.array([[0.01, 0.0], [1.0, 0.0], [3.1, 0.0]])
    np.testing.assert_allclose(s.interpolate(np.cos(s.coords[0]) ** 2, pts),
                               np.cos(pts[:, 0]) ** 2, atol=1e-4)


def test_node_ordering_is_row_major():
    g = FiberGrid("torus2", (4, 5))
    pts = g.node_points()
    assert pts.shape == (20, 2)
    np.testing.assert_array_equal(pts[1], [0.0, g.spacing[1]])
    np.testing.assert_array_equal(pts[5], [g.spacing[0], 0.0])


def test_integrate_sphere_polynomial():
    g = FiberGrid("sphere2_axisym", 128)
    # int cos^2 = 4 pi / 3; midpoint-in-cos error is second order
    assert g.integrate(np.cos(g.coords[0]) ** 2) == pytest.approx(4 * math.pi / 3, rel=1e-4)


def test_partial_examples():
    g = FiberGrid("torus2", 16)
    assert not np.any(g.partial(np.full(g.shape, 3.0), 1))
    with pytest.raises(IndexError):
        g.partial(np.zeros(g.shape), 2)
    errs = []
    for N in (64, 128):
        t = FiberGrid("torus1", N)
        x = t.coords[0]
        errs.append(np.max(np.abs(t.partial(np.sin(2 * x), 0) - 2 * np.cos(2 * x))))
    assert math.log2(errs[0] / errs[1]) >= 1.9
    assert errs[0] / errs[1] >= 3.6
    assert fiber_volume(FiberGrid("torus1", 10, 5.0)) == pytest.approx(5.0)


def test_summation_by_parts_on_torus():
    rng = np.random.default_rng(3)
    g = FiberGrid("torus2", 20)
    F = rng.standard_normal(g.shape)
    for a in (0, 1):
        assert abs(np.sum(g.weights * (F - g.back_face(F, a)))) < 1e-13
