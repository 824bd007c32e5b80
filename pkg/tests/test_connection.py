import numpy as np
import pytest

from weyl_lab.connection import (
    christoffel,
    codifferential,
    covd,
    lee_form_recover,
    levi_civita,
    nabla_theta,
    weyl_christoffel,
    weyl_covd,
)
from weyl_lab.geometry import Chart, GeometryError, MetricField, orthonormal_frame
from weyl_lab.jets import stack


def warped_metric():
    """A non-diagonal 3-metric with no symmetries."""
    chart = Chart(3, ((0, 1),) * 3)

    def fn(xs):
        x, y, z = xs
        zero = x * 0.0
        a = (x.sin() * 2.0).exp()
        b = (x * y).cos() + 2.0
        c = zero + 0.25 + z * 0.1
        rows = [stack([a, c, zero], -1), stack([c, b, zero], -1), stack([zero, zero, zero + 1.0 + z * z], -1)]
        return stack(rows, -2)

    return MetricField(chart, fn)


def test_sphere_christoffel_symbols(sphere):
    p = np.array([[1.1, 0.4], [0.6, 2.0]])
    G = levi_civita(sphere, p).gamma.value
    x0 = p[:, 0]
    np.testing.assert_allclose(G[:, 0, 1, 1], -np.sin(x0) * np.cos(x0), atol=1e-14)
    np.testing.assert_allclose(G[:, 1, 0, 1], np.cos(x0) / np.sin(x0), atol=1e-14)
    np.testing.assert_allclose(G[:, 1, 1, 0], np.cos(x0) / np.sin(x0), atol=1e-14)
    np.testing.assert_allclose(G[:, 0, 0, 0], 0.0, atol=1e-14)


def test_christoffel_torsion_free_and_metric():
    g = warped_metric()
    p = g.chart.sample(15, np.random.default_rng(0))
    conn = levi_civita(g, p)
    G = conn.gamma.value
    np.testing.assert_allclose(G, np.swapaxes(G, -1, -2), atol=1e-14)
    np.testing.assert_allclose(covd(conn.g, "dd", conn.gamma).value, 0.0, atol=1e-13)
    np.testing.assert_allclose(covd(conn.ginv, "uu", conn.gamma).value, 0.0, atol=1e-13)


def test_christoffel_needs_derivatives():
    g = warped_metric()
    with pytest.raises(GeometryError):
        christoffel(g.evaluate([[0.5, 0.5, 0.5]], 0))


def test_weyl_connection_scales_metric():
    g = warped_metric()
    p = g.chart.sample(10, np.random.default_rng(1))
    conn = levi_civita(g, p)
    x, y, z = g.chart.coordinates(p, 3)
    theta = stack([y * 0.3, (x * z).sin(), x * y - z], -1)
    Dg = weyl_covd(conn.g, "dd", conn.gamma, theta, conn.g, conn.ginv).value
    expect = -2 * np.einsum("mk,mij->mijk", theta.value, conn.g.value)
    np.testing.assert_allclose(Dg, expect, atol=1e-13)
    # D is torsion free and the Lee form is recovered from D g
    W = weyl_christoffel(conn.gamma, theta, conn.g, conn.ginv).value
    np.testing.assert_allclose(W, np.swapaxes(W, -1, -2), atol=1e-14)
    rec = lee_form_recover(weyl_christoffel(conn.gamma, theta, conn.g, conn.ginv), conn.g)
    np.testing.assert_allclose(rec, theta.value, atol=1e-13)


def test_nabla_theta_of_exact_form_is_symmetric():
    g = warped_metric()
    p = g.chart.sample(10, np.random.default_rng(2))
    conn = levi_civita(g, p)
    x, y, z = g.chart.coordinates(p, 3)
    df = ((x * y).sin() + z * z * x).grad()
    T = nabla_theta(df, conn).value
    gT = np.einsum("mij,mjk->mik", conn.g.value, T)
    np.testing.assert_allclose(gT, np.swapaxes(gT, -1, -2), atol=1e-13)


def _laplacian_fd(metric, f, p, h=1e-4):
    """``Delta f = |g|^{-1/2} d_i (|g|^{1/2} g^{ij} d_j f)`` by nested central differences."""

    def flux(q):
        gv = metric.evaluate(q[None], 0).value[0]
        grad = np.array([(f(q + e) - f(q - e)) / (2 * h) for e in np.eye(len(q)) * h])
        return np.sqrt(np.linalg.det(gv)) * np.linalg.solve(gv, grad)

    div = sum((flux(p + e)[i] - flux(p - e)[i]) / (2 * h) for i, e in enumerate(np.eye(len(p)) * h))
    return div / np.sqrt(np.linalg.det(metric.evaluate(p[None], 0).value[0]))


def test_codifferential_of_gradient_is_minus_laplacian():
    g = warped_metric()
    p = np.array([0.4, 0.3, 0.6])
    xs = g.chart.coordinates(p[None], 3)
    fjet = (xs[0] * xs[1]).sin() + xs[2] * xs[0] * xs[0]
    conn = levi_civita(g, p[None])
    delta = codifferential(fjet.grad(), 1, conn).value[0]

    def f(q):
        return np.sin(q[0] * q[1]) + q[2] * q[0] ** 2

    assert delta == pytest.approx(-_laplacian_fd(g, f, p), rel=1e-5)
    # the orthonormal frame sum gives the same contraction
    E = orthonormal_frame(conn.g.value)
    assert codifferential(fjet.grad(), 1, conn, frame=E).value[0] == pytest.approx(delta, rel=1e-12)


def test_codifferential_squares_to_zero_on_two_forms():
    g = warped_metric()
    p = g.chart.sample(6, np.random.default_rng(4))
    conn = levi_civita(g, p)
    x, y, z = g.chart.coordinates(p, 3)
    a = stack([y * z, x.sin(), x * y * y], -1)
    b = stack([z.cos(), x * z, y], -1)
    w = stack([a[:, i] * b[:, j] - a[:, j] * b[:, i] for i in range(3) for j in range(3)], -1).reshape(len(p), 3, 3)
    # delta(delta w) needs two derivative orders of w; the jets carry three
    dw = codifferential(w, 2, conn)
    assert dw.order == 2
    ddw = codifferential(dw, 1, conn)
    np.testing.assert_allclose(ddw.value, 0.0, atol=1e-12)
