import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from weyl_lab.geometry import (
    Chart,
    GeometryError,
    TensorField,
    check_spd,
    constant_field,
    endo_flat,
    endo_sharp,
    exterior_d,
    flat,
    interior_product,
    odot,
    orthonormal_frame,
    sharp,
    to_frame,
    wedge_endo,
    wedge_forms,
)
from weyl_lab.jets import stack

entries = st.floats(-2, 2, allow_nan=False)


def spd(rng, n, m=None):
    A = rng.standard_normal((m, n, n) if m else (n, n))
    return A @ np.swapaxes(A, -1, -2) + n * np.eye(n)


def test_chart_validation():
    with pytest.raises(GeometryError):
        Chart(1, ((0, 1),))
    with pytest.raises(GeometryError):
        Chart(2, ((0, 1),))
    with pytest.raises(GeometryError):
        Chart(2, ((0, 1), (2, 1)))
    c = Chart(3, ((0, 1),) * 3, (True, False, True))
    assert not c.fully_periodic
    pts = c.sample(50, np.random.default_rng(0))
    assert c.contains(pts).all()
    # open axes keep a margin from the boundary
    assert pts[:, 1].min() >= 0.05 and pts[:, 1].max() <= 0.95


def test_field_shape_and_metric_checks():
    chart = Chart(2, ((0, 1), (0, 1)))
    bad = TensorField(chart, lambda xs: stack(xs, axis=-1), "metric", "bad")
    with pytest.raises(GeometryError):
        bad.evaluate([[0.5, 0.5]])
    indefinite = constant_field(chart, np.diag([1.0, -1.0]), "metric")
    with pytest.raises(GeometryError):
        indefinite.evaluate([[0.5, 0.5]])
    with pytest.raises(GeometryError):
        TensorField(chart, lambda xs: xs[0], "spinor")


def test_orthonormal_frame_is_gram_schmidt(rng):
    g = spd(rng, 5, 10)
    E = orthonormal_frame(g)
    np.testing.assert_allclose(np.swapaxes(E, -1, -2) @ g @ E, np.broadcast_to(np.eye(5), g.shape), atol=1e-12)
    # Gram-Schmidt of the coordinate basis keeps the frame upper triangular
    np.testing.assert_allclose(np.tril(E, -1), 0.0, atol=0)
    with pytest.raises(GeometryError):
        check_spd(-g)


def test_musical_roundtrip(rng):
    g = spd(rng, 4)
    X = rng.standard_normal(4)
    np.testing.assert_allclose(sharp(g, flat(g, X)), X, atol=1e-12)
    A = rng.standard_normal((4, 4))
    np.testing.assert_allclose(endo_sharp(np.linalg.inv(g), endo_flat(g, A)), A, atol=1e-12)


def test_odot_and_wedge_are_symmetric_and_skew(rng):
    g = spd(rng, 4)
    X, Y, Z, W = rng.standard_normal((4, 4))
    gi = lambda u, v: u @ g @ v  # noqa: E731
    sym, skew = odot(X, Y, g), wedge_endo(X, Y, g)
    assert gi(sym @ Z, W) == pytest.approx(gi(Z, sym @ W))
    assert gi(skew @ Z, W) == pytest.approx(-gi(Z, skew @ W))
    np.testing.assert_allclose(sym @ Z, gi(X, Z) * Y + gi(Y, Z) * X)
    np.testing.assert_allclose(skew @ Z, gi(X, Z) * Y - gi(Y, Z) * X)


@given(arrays(float, (4, 4), elements=entries))
def test_to_frame_preserves_spectrum_invariants(A):
    g = spd(np.random.default_rng(3), 4)
    E = orthonormal_frame(g)
    F = to_frame(A, E)
    assert np.trace(F) == pytest.approx(np.trace(A), abs=1e-9)
    np.testing.assert_allclose(E @ F, A @ E, atol=1e-9)


def _jet_form(chart, p):
    xs = chart.coordinates(p, 3)
    x, y, z = xs
    # a 1-form with nonzero exterior derivative
    return stack([(y * z).sin(), x * x * z, (x + y).exp()], axis=-1)


def test_exterior_derivative_squares_to_zero():
    chart = Chart(3, ((0, 1),) * 3)
    p = chart.sample(12, np.random.default_rng(1))
    w = _jet_form(chart, p)
    dw = exterior_d(w, 1)
    np.testing.assert_allclose(dw.value, -np.swapaxes(dw.value, -1, -2), atol=1e-14)
    ddw = exterior_d(dw, 2)
    np.testing.assert_allclose(ddw.value, 0.0, atol=1e-12)
    # d(df) = 0 as well
    f = (chart.coordinates(p, 3)[0] * chart.coordinates(p, 3)[1]).sin()
    np.testing.assert_allclose(exterior_d(exterior_d(f, 0), 1).value, 0.0, atol=1e-13)


def test_exterior_derivative_components():
    chart = Chart(3, ((0, 1),) * 3)
    p = np.array([[0.2, 0.4, 0.7]])
    x, y, z = p[0]
    dw = exterior_d(_jet_form(chart, p), 1).value[0]
    # (dw)_ij = d_i w_j - d_j w_i
    assert dw[0, 1] == pytest.approx(2 * x * z - z * np.cos(y * z))
    assert dw[1, 2] == pytest.approx(np.exp(x + y) - x * x)
    assert dw[0, 2] == pytest.approx(np.exp(x + y) - y * np.cos(y * z))


def test_wedge_and_interior_product(rng):
    a, b, X = rng.standard_normal((3, 4))
    ab = wedge_forms(a, 1, b, 1)
    np.testing.assert_allclose(ab, np.outer(a, b) - np.outer(b, a))
    # X -| (a ^ b) = a(X) b - b(X) a
    np.testing.assert_allclose(interior_product(X, ab, 2), (a @ X) * b - (b @ X) * a, atol=1e-14)
    c = rng.standard_normal(4)
    abc = wedge_forms(ab, 2, c, 1)
    np.testing.assert_allclose(abc, -np.swapaxes(abc, -1, -2), atol=1e-14)
    np.testing.assert_allclose(abc, -np.swapaxes(abc, -3, -2), atol=1e-14)
