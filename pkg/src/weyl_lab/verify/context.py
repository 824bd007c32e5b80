"""Everything the checkers need at a batch of sample points, computed once."""

from __future__ import annotations

from functools import cached_property

import numpy as np

from ..connection import codifferential, covd, levi_civita, nabla_theta, weyl_christoffel
from ..curvature import ricci, riemann
from ..geometry import orthonormal_frame, to_frame, vector_to_frame
from ..jets import Jet, contract
from ..structures import StructurePack

__all__ = ["Evaluation", "random_directions"]


def random_directions(E: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` g-unit vectors per point, uniform on the unit sphere of the frame ``E``."""
    m, n = E.shape[0], E.shape[-1]
    u = rng.standard_normal((m, count, n))
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    return np.einsum("mij,mcj->mci", E, u)


class Evaluation:
    """Jets and point values of a :class:`StructurePack` at sample points.

    Matrices act on vectors; one-forms are converted with ``g``.  Jet-valued
    attributes end in ``_j``, plain attributes are point values.

    A Lee form defined as a derivative comes back one order short; with
    ``full_theta`` it is evaluated one order higher and truncated, so that
    a low-order evaluation (``order=1`` for divergences) stays usable.
    """

    def __init__(self, pack: StructurePack, points, order: int = 3, full_theta: bool = False):
        self.pack = pack
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.m = self.points.shape[0]
        self.n = pack.n
        self.conn = levi_civita(pack.g, self.points, order)
        self.g_j, self.ginv_j = self.conn.g, self.conn.ginv
        self.theta_form_j = pack.theta.evaluate(self.points, order)
        if full_theta and self.theta_form_j.order < order:
            self.theta_form_j = pack.theta.evaluate(self.points, order + 1).truncate(order)
        self.theta_j = contract("...ij,...j->...i", self.ginv_j, self.theta_form_j)
        self.S_j = pack.S.evaluate(self.points, order)
        self.P_j = None if pack.P is None else pack.P.evaluate(self.points, order)
        self.xi_j = None if pack.xi is None else pack.xi.evaluate(self.points, order)

        self.g = self.g_j.value
        self.ginv = self.ginv_j.value
        self.E = orthonormal_frame(self.g)
        self.theta = self.theta_j.value
        self.S = self.S_j.value
        self.P = None if self.P_j is None else self.P_j.value
        self.xi = None if self.xi_j is None else self.xi_j.value
        self.I = np.broadcast_to(np.eye(self.n), self.g.shape)

    # -- pointwise algebra ----------------------------------------------

    def ip(self, X, Y):
        """``<X, Y>`` for vectors (batched over leading axes after the points)."""
        g = self.g.reshape(self.g.shape[:1] + (1,) * (np.ndim(X) - 2) + self.g.shape[1:])
        return np.einsum("...i,...ij,...j->...", X, g, Y)

    def lower(self, X):
        g = self.g.reshape(self.g.shape[:1] + (1,) * (np.ndim(X) - 2) + self.g.shape[1:])
        return np.einsum("...ij,...j->...i", g, X)

    def raise_(self, w):
        gi = self.ginv.reshape(self.ginv.shape[:1] + (1,) * (np.ndim(w) - 2) + self.ginv.shape[1:])
        return np.einsum("...ij,...j->...i", gi, w)

    def odot(self, X, Y):
        """``Z -> <X, Z> Y + <Y, Z> X``."""
        return Y[..., :, None] * self.lower(X)[..., None, :] + X[..., :, None] * self.lower(Y)[..., None, :]

    def wedge(self, X, Y):
        """``Z -> <X, Z> Y - <Y, Z> X``."""
        return Y[..., :, None] * self.lower(X)[..., None, :] - X[..., :, None] * self.lower(Y)[..., None, :]

    def tensor(self, a, b):
        """``a (x) b``: ``Z -> <a, Z> b``."""
        return b[..., :, None] * self.lower(a)[..., None, :]

    @staticmethod
    def apply(A, X):
        return np.einsum("...ij,...j->...i", A, X)

    @staticmethod
    def tr(A):
        return np.trace(A, axis1=-2, axis2=-1)

    def norm2(self, X):
        return self.ip(X, X)

    def directions(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return random_directions(self.E, count, rng)

    # -- derived fields ------------------------------------------------------

    @cached_property
    def T(self) -> np.ndarray:
        """``T = nabla theta`` as an endomorphism."""
        return nabla_theta(self.theta_form_j, self.conn).value

    @cached_property
    def nabla_S(self) -> np.ndarray:
        """``nabla S`` with the derivative index last: ``[i, j, k] = (nabla_k S)^i_j``."""
        return covd(self.S_j, "ud", self.conn.gamma).value

    @cached_property
    def weyl_gamma(self) -> Jet:
        return weyl_christoffel(self.conn.gamma, self.theta_form_j, self.g_j, self.ginv_j)

    @cached_property
    def riemann(self) -> np.ndarray:
        return riemann(self.conn).value

    @cached_property
    def ricci_endo(self) -> np.ndarray:
        return ricci(self.riemann, self.g, endomorphism=True)

    @cached_property
    def frame(self) -> dict:
        """S, P, T and theta in the orthonormal frame."""
        E = self.E
        out = {"S": to_frame(self.S, E), "T": to_frame(self.T, E), "theta": vector_to_frame(self.theta, E)}
        if self.P is not None:
            out["P"] = to_frame(self.P, E)
        return out

    # -- jet helpers -----------------------------------------------------------

    def mat(self, *factors: Jet) -> Jet:
        """Product of endomorphism jets."""
        out = factors[0]
        for f in factors[1:]:
            out = contract("...ij,...jk->...ik", out, f)
        return out

    def act(self, A: Jet, v: Jet) -> Jet:
        return contract("...ij,...j->...i", A, v)

    def flat_j(self, v: Jet) -> Jet:
        return contract("...ij,...j->...i", self.g_j, v)

    def ip_j(self, a: Jet, b: Jet) -> Jet:
        return contract("...i,...i->...", self.flat_j(a), b)

    def trace_j(self, A: Jet) -> Jet:
        return A.trace()

    def codiff_vector(self, v: Jet) -> np.ndarray:
        """``delta`` of the one-form dual to the vector field ``v`` (point values)."""
        return codifferential(self.flat_j(v), 1, self.conn).value

    def differential(self, f: Jet) -> np.ndarray:
        """Gradient vector of a scalar jet, i.e. ``(d f)^sharp``."""
        return self.raise_(f.gradient())

    def scale(self, s: Jet, v: Jet) -> Jet:
        return contract("...,...i->...i", s, v)
