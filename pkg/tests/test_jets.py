import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weyl_lab.jets import (
    Jet,
    align,
    basis,
    extract_partial,
    jet_constant,
    jet_inv,
    jet_variable,
    jmatmul,
    stack,
)

finite = st.floats(-1.5, 1.5, allow_nan=False)


def coords(point, order=3):
    point = np.asarray(point, dtype=float)
    d = point.shape[-1]
    return [jet_variable(i, point[..., i], d, order) for i in range(d)]


def fd_gradient(f, x, h=1e-6):
    """Central differences of a scalar function of a point."""
    out = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def test_basis_sizes():
    # number of monomials of degree <= 3 in d variables is C(d + 3, 3)
    for d in range(1, 9):
        assert basis(d, 3).size == math.comb(d + 3, 3)
    with pytest.raises(ValueError):
        basis(9, 1)
    with pytest.raises(ValueError):
        basis(2, 4)


def test_partials_of_polynomial():
    x, y = coords([0.7, -0.4])
    f = x * x * y + 3.0 * y * y * y
    assert f.value == pytest.approx(0.7**2 * -0.4 + 3 * (-0.4) ** 3)
    assert extract_partial(f, (1, 0)) == pytest.approx(2 * 0.7 * -0.4)
    assert extract_partial(f, (0, 1)) == pytest.approx(0.49 + 9 * 0.16)
    assert extract_partial(f, (2, 1)) == pytest.approx(2.0)
    assert extract_partial(f, (0, 3)) == pytest.approx(18.0)
    assert extract_partial(f, (1, 2)) == pytest.approx(0.0)


def test_elementary_functions_against_closed_forms():
    (x,) = coords([0.3])
    for jet, derivs in [
        (x.exp(), [math.exp(0.3)] * 4),
        (x.sin(), [math.sin(0.3), math.cos(0.3), -math.sin(0.3), -math.cos(0.3)]),
        (x.cos(), [math.cos(0.3), -math.sin(0.3), -math.cos(0.3), math.sin(0.3)]),
        (x.log(), [math.log(0.3), 1 / 0.3, -1 / 0.09, 2 / 0.027]),
        (x.sqrt(), [math.sqrt(0.3), 0.5 * 0.3**-0.5, -0.25 * 0.3**-1.5, 0.375 * 0.3**-2.5]),
        (x.reciprocal(), [1 / 0.3, -1 / 0.09, 2 / 0.027, -6 / 0.0081]),
    ]:
        got = [extract_partial(jet, (k,)) for k in range(4)]
        np.testing.assert_allclose(got, derivs, rtol=1e-12)


def test_gradient_matches_finite_differences():
    def f_jet(p):
        x, y, z = coords(p)
        return (x * y).sin() * (z * 0.5).exp() + y / (1.0 + x * x)

    def f_num(p):
        return f_jet(p).value

    p = np.array([0.4, -0.2, 0.9])
    np.testing.assert_allclose(f_jet(p).gradient(), fd_gradient(f_num, p), rtol=1e-8, atol=1e-9)


def test_second_derivatives_via_deriv_chain():
    x, y = coords([0.5, 1.1])
    f = (x * y * y).cos()
    hess_xy = f.deriv(0).deriv(1).value
    # d/dy d/dx cos(x y^2) = -2 y sin(x y^2) - 2 x y^3 cos(x y^2)
    t = 0.5 * 1.1**2
    assert hess_xy == pytest.approx(-2 * 1.1 * math.sin(t) - 2 * 0.5 * 1.1**3 * math.cos(t), rel=1e-12)
    assert f.deriv(0).order == 2


def test_order_mismatch_is_rejected():
    a = jet_variable(0, 0.1, 2, 3)
    b = jet_variable(1, 0.2, 2, 2)
    with pytest.raises(ValueError):
        a + b
    a2, b2 = align(a, b)
    assert a2.order == b2.order == 2
    with pytest.raises(ValueError):
        a.deriv(0).deriv(0).deriv(0).deriv(0)


def test_matrix_inverse_jet():
    x, y = coords(np.array([[0.3, 0.2], [1.0, -0.5]]))
    row0 = stack([2.0 + x * x, y], axis=-1)
    row1 = stack([y, 1.5 + (x * y).sin()], axis=-1)
    A = stack([row0, row1], axis=-2)
    Ainv = jet_inv(A)
    eye = jmatmul(A, Ainv)
    ref = jet_constant(np.broadcast_to(np.eye(2), (2, 2, 2)), 2, 3)
    np.testing.assert_allclose(eye.coeffs, ref.coeffs, atol=1e-12)


@given(finite, finite, finite, finite)
def test_product_rule(a, b, c, d):
    x, y = coords([a, b])
    f = x.sin() + c * y
    g = (x * y).cos() + d
    lhs = (f * g).gradient()
    rhs = f.gradient() * g.value + f.value * g.gradient()
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@given(finite, finite)
def test_mixed_partials_commute(a, b):
    x, y = coords([a, b])
    f = (x * x * y).sin() * (y - x).exp()
    np.testing.assert_allclose(f.deriv(0).deriv(1).coeffs, f.deriv(1).deriv(0).coeffs, atol=1e-11)


@given(finite, finite, st.floats(0.2, 3.0))
def test_exp_log_roundtrip(a, b, c):
    x, y = coords([a, b])
    f = x * y + c * c + 1.0
    np.testing.assert_allclose(f.log().exp().coeffs, f.coeffs, rtol=1e-11, atol=1e-11)


def test_jet_requires_matching_coefficient_axis():
    with pytest.raises(ValueError):
        Jet(np.zeros((3, 5)), 2, 3)
