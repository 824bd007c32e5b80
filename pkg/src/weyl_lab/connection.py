"""Levi-Civita and Weyl connections acting on jet-valued tensor fields.

Christoffel symbols are stored as ``gamma[a, b, c]`` with
``nabla_{d_b} d_c = gamma[a, b, c] d_a``.  Covariant derivatives append the
derivative index as the *last* axis: ``covd(T)[..., k] = (nabla_k T)[...]``.
Index kinds are given as strings over ``"u"`` (upper) and ``"d"`` (lower),
one letter per tensor axis, e.g. ``"ud"`` for an endomorphism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError, TensorField, check_spd
from .jets import Jet, align, contract, jeinsum, jet_inv

__all__ = [
    "Connection",
    "christoffel",
    "codifferential",
    "covd",
    "lee_form_recover",
    "levi_civita",
    "nabla_theta",
    "weyl_christoffel",
    "weyl_covd",
]


def christoffel(g: Jet, ginv: Jet | None = None) -> Jet:
    """Christoffel symbols of a metric jet; one order lower than ``g``."""
    if g.order < 1:
        raise GeometryError("christoffel needs metric jets of order >= 1")
    check_spd(g.value)
    if ginv is None:
        ginv = jet_inv(g)
    dg = g.grad()  # dg[i, j, l] = d_l g_ij
    # lowered: G_l,bc = 1/2 (d_b g_cl + d_c g_bl - d_l g_bc)
    d = dg.coeffs  # d[..., i, j, l, Z]
    first = np.einsum("...clbZ->...lbcZ", d)   # d_b g_cl
    second = np.einsum("...blcZ->...lbcZ", d)  # d_c g_bl
    third = np.einsum("...bclZ->...lbcZ", d)   # d_l g_bc
    low = Jet(0.5 * (first + second - third), g.dim, dg.order)
    ginv_, low = align(ginv, low)
    return jeinsum("...al,...lbc->...abc", ginv_, low)


@dataclass(frozen=True)
class Connection:
    """Metric data at a batch of points: ``g``, its inverse and Christoffel symbols."""

    g: Jet
    ginv: Jet
    gamma: Jet

    @property
    def dim(self) -> int:
        return self.g.shape[-1]

    @property
    def order(self) -> int:
        return self.gamma.order

    def covd(self, T: Jet, kinds: str) -> Jet:
        return covd(T, kinds, self.gamma)


def levi_civita(metric: TensorField | Jet, points=None, order: int = 3) -> Connection:
    """Levi-Civita connection data of a metric field (or metric jet)."""
    g = metric if isinstance(metric, Jet) else metric.evaluate(points, order)
    ginv = jet_inv(g)
    return Connection(g, ginv, christoffel(g, ginv))


def covd(T: Jet, kinds: str, gamma: Jet) -> Jet:
    """Covariant derivative of a jet tensor with the given connection symbols.

    ``kinds`` names the trailing ``len(kinds)`` axes of ``T``.  The result has
    one more trailing axis (the derivative direction) and order
    ``min(T.order - 1, gamma.order)``.
    """
    if T.order < 1:
        raise GeometryError("covariant derivative needs jets of order >= 1")
    dT = T.grad()
    dT, G, Tt = align(dT, gamma, T)
    out = dT
    r = len(kinds)
    letters = "pqrstuvw"[:r]
    for pos, kind in enumerate(kinds):
        src = letters
        if kind == "u":
            # + gamma^{i}_{k m} T^{..m..}
            tsub = src[:pos] + "m" + src[pos + 1 :]
            out = out + jeinsum(f"...{src[pos]}km,...{tsub}->...{src}k", G, Tt)
        elif kind == "d":
            # - gamma^{m}_{k j} T_{..m..}
            tsub = src[:pos] + "m" + src[pos + 1 :]
            out = out - jeinsum(f"...mk{src[pos]},...{tsub}->...{src}k", G, Tt)
        else:
            raise GeometryError(f"unknown index kind {kind!r}")
    return out


def weyl_christoffel(gamma: Jet, theta: Jet, g: Jet, ginv: Jet) -> Jet:
    """Connection symbols of the Weyl connection with Lee form ``theta``.

    ``D_X Y = nabla_X Y + theta(Y) X + theta(X) Y - <X, Y> theta^sharp``.
    """
    gamma, theta, g, ginv = align(gamma, theta, g, ginv)
    n = g.shape[-1]
    eye = np.eye(n)
    theta_up = jeinsum("...ij,...j->...i", ginv, theta)
    k1 = jeinsum("ab,...c->...abc", eye, theta)  # delta^a_b theta_c
    k2 = jeinsum("ac,...b->...abc", eye, theta)  # delta^a_c theta_b
    k3 = jeinsum("...bc,...a->...abc", g, theta_up)
    return gamma + k1 + k2 - k3


def weyl_covd(T: Jet, kinds: str, gamma: Jet, theta: Jet, g: Jet, ginv: Jet) -> Jet:
    """Weyl covariant derivative, extended to tensors by the Leibniz rule."""
    return covd(T, kinds, weyl_christoffel(gamma, theta, g, ginv))


def nabla_theta(theta: Jet, conn: Connection) -> Jet:
    """``T = nabla theta`` as an endomorphism: ``T(X) = (nabla_X theta)^sharp``."""
    N = covd(theta, "d", conn.gamma)  # N[k, j] = nabla_j theta_k
    ginv, N = align(conn.ginv, N)
    return jeinsum("...ik,...kj->...ij", ginv, N)


def codifferential(omega: Jet, degree: int, conn: Connection, frame: np.ndarray | None = None):
    """``delta omega = - sum_a e_a -| nabla_{e_a} omega`` for 1- and 2-forms.

    With ``frame=None`` the frame sum is carried out as a contraction with
    ``g^{-1}``; an explicit orthonormal frame (columns) may be passed.
    """
    N = covd(omega, "d" * degree, conn.gamma)
    if frame is None:
        ginv, N = align(conn.ginv, N)
        pair = ginv
    else:
        pair = np.einsum("...ia,...ka->...ik", frame, frame)
    if degree == 1:
        return -contract("...ik,...ki->...", pair, N)
    if degree == 2:
        # N[k, j, i] = nabla_i omega_kj
        return -contract("...ik,...kji->...j", pair, N)
    raise GeometryError("codifferential is implemented for degrees 1 and 2")


def lee_form_recover(dgamma: Jet, g: Jet, Y: np.ndarray | None = None) -> np.ndarray:
    """Recover the Lee form from ``D g = -2 theta (x) g``.

    ``dgamma`` are the symbols of the connection ``D``.  Returns point values
    ``theta(X) = -(D_X g)(Y, Y) / (2 g(Y, Y))`` for every coordinate ``X``.
    """
    Dg = covd(g, "dd", dgamma)  # Dg[i, j, k] = (D_k g)_ij
    gv = g.value
    if Y is None:
        Y = np.zeros(gv.shape[:-1])
        Y[..., 0] = 1.0
    num = np.einsum("...ijk,...i,...j->...k", Dg.value, Y, Y)
    den = np.einsum("...ij,...i,...j->...", gv, Y, Y)
    if np.any(den <= 0):
        raise GeometryError("degenerate metric in Lee form recovery")
    return -num / (2.0 * den[..., None])
