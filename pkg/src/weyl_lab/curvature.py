"""Riemann and Ricci tensors, and the algebra of operators on two-vectors.

The curvature is ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]`` and is stored
as ``Rm[i, j, l, k]``, the ``(l, k)`` entry of the endomorphism
``R(d_i, d_j)``.  The Ricci tensor is ``Ric(X, Y) = sum_a <R(e_a, X) Y, e_a>``.

Operators on two-vectors (:class:`Lambda2Map`) are always written in a
g-orthonormal frame, on the basis ``e_i ^ e_j`` (``i < j``) with the inner
product ``<X ^ Y, Z ^ W> = <X, Z><Y, W> - <X, W><Y, Z>``.  A matrix column is
an input basis element, a row an output coordinate.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .connection import Connection, levi_civita
from .geometry import TensorField
from .jets import Jet, jeinsum

__all__ = [
    "Lambda2Map",
    "RicciAtPoint",
    "RiemannAtPoint",
    "riemann_at",
    "scalar_curvature",
    "cdot",
    "cdot_matrix",
    "lambda2_compose",
    "lambda2_trace",
    "pairs",
    "ricci",
    "riemann",
    "riemann_as_lambda2",
    "riemann_on_endo",
    "wedge_coords",
]


def riemann(conn: Connection) -> Jet:
    """Riemann tensor jet ``Rm[i, j, l, k]``; one order below the Christoffel jet."""
    G = conn.gamma
    dG = G.grad()  # dG[a, b, c, i] = d_i gamma^a_bc
    G1 = G.truncate(dG.order)
    d = dG.coeffs
    lin = np.einsum("...ljkiZ->...ijlkZ", d) - np.einsum("...likjZ->...ijlkZ", d)
    quad = jeinsum("...lim,...mjk->...ijlk", G1, G1) - jeinsum("...ljm,...mik->...ijlk", G1, G1)
    return Jet(lin, G.dim, dG.order) + quad


@dataclass(frozen=True)
class RiemannAtPoint:
    """Curvature components ``R[i, j, l, k] = (R(d_i, d_j))^l_k`` at one point."""

    R: np.ndarray
    g: np.ndarray
    point: np.ndarray

    def __call__(self, X, Y, Z) -> np.ndarray:
        """``R(X, Y) Z``."""
        return np.einsum("i,j,ijlk,k->l", X, Y, self.R, Z)

    def lowered(self) -> np.ndarray:
        """``<R(d_i, d_j) d_k, d_l>`` as ``[i, j, k, l]``."""
        return np.einsum("ijmk,ml->ijkl", self.R, self.g)

    def ricci(self) -> "RicciAtPoint":
        return RicciAtPoint(ricci(self.R, self.g, endomorphism=True), self.g, self.point)


@dataclass(frozen=True)
class RicciAtPoint:
    """Ricci curvature at one point as an endomorphism (g-symmetric)."""

    Ric: np.ndarray
    g: np.ndarray
    point: np.ndarray

    def form(self) -> np.ndarray:
        return self.g @ self.Ric

    def scalar(self) -> float:
        return float(np.trace(self.Ric))


def riemann_at(metric: TensorField, point) -> RiemannAtPoint:
    """Curvature of a metric field at a single chart point."""
    p = np.asarray(point, dtype=float).reshape(1, -1)
    conn = levi_civita(metric, p, 3)
    return RiemannAtPoint(riemann(conn).value[0], conn.g.value[0], p[0])


def scalar_curvature(Rm: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.trace(ricci(Rm, g, endomorphism=True), axis1=-2, axis2=-1)


def riemann_on_endo(Rm: np.ndarray, X: np.ndarray, Y: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Derivation action ``(R_{X,Y} A) Z = R(X, Y)(A Z) - A(R(X, Y) Z)``."""
    RXY = np.einsum("...i,...j,...ijlk->...lk", X, Y, Rm)
    return RXY @ A - A @ RXY


def ricci(Rm: np.ndarray, g: np.ndarray | None = None, endomorphism: bool = False) -> np.ndarray:
    """Ricci tensor as a bilinear form, or as an endomorphism when requested."""
    ric = np.einsum("...ijik->...jk", Rm)
    if endomorphism:
        return np.linalg.solve(g, ric)
    return ric


# -- two-vectors -------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays ``(I, J)`` of the basis ``e_I ^ e_J`` with ``I < J``."""
    idx = np.array(list(combinations(range(n), 2)), dtype=int).reshape(-1, 2)
    return idx[:, 0], idx[:, 1]


def wedge_coords(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coordinates of ``a ^ b`` on the orthonormal two-vector basis."""
    I, J = pairs(a.shape[-1])
    return a[..., I] * b[..., J] - a[..., J] * b[..., I]


@dataclass(frozen=True)
class Lambda2Map:
    """A linear map on two-vectors, written in a fixed orthonormal frame."""

    matrix: np.ndarray
    n: int
    frame: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        m = self.n * (self.n - 1) // 2
        if self.matrix.shape[-2:] != (m, m):
            raise ValueError(f"expected {m}x{m} matrices for n={self.n}")

    def __matmul__(self, other: "Lambda2Map") -> "Lambda2Map":
        return lambda2_compose(self, other)

    def __add__(self, other: "Lambda2Map") -> "Lambda2Map":
        _check_frames(self, other)
        return Lambda2Map(self.matrix + other.matrix, self.n, self.frame)

    def __sub__(self, other: "Lambda2Map") -> "Lambda2Map":
        _check_frames(self, other)
        return Lambda2Map(self.matrix - other.matrix, self.n, self.frame)

    def __mul__(self, c) -> "Lambda2Map":
        c = np.asarray(c, dtype=float)
        return Lambda2Map(self.matrix * c[..., None, None], self.n, self.frame)

    __rmul__ = __mul__

    def trace(self) -> np.ndarray:
        return lambda2_trace(self)

    @classmethod
    def identity(cls, n: int, frame=None) -> "Lambda2Map":
        return cls(np.eye(n * (n - 1) // 2), n, frame)


def _check_frames(a: Lambda2Map, b: Lambda2Map) -> None:
    if a.n != b.n:
        raise ValueError("two-vector maps of different dimensions")
    if a.frame is not None and b.frame is not None and a.frame is not b.frame:
        if a.frame.shape != b.frame.shape or not np.array_equal(a.frame, b.frame):
            raise ValueError("two-vector maps expressed in different frames")


def cdot_matrix(F: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Matrix of ``(F . G)(X ^ Y) = 1/2 (FX ^ GY + GX ^ FY)``; F, G in the frame."""
    n = F.shape[-1]
    I, J = pairs(n)
    # column (i, j), row (k, l)
    Fki = F[..., I[:, None], I[None, :]]  # F[k, i] with k from rows
    Flj = F[..., J[:, None], J[None, :]]
    Fli = F[..., J[:, None], I[None, :]]
    Fkj = F[..., I[:, None], J[None, :]]
    Gki = G[..., I[:, None], I[None, :]]
    Glj = G[..., J[:, None], J[None, :]]
    Gli = G[..., J[:, None], I[None, :]]
    Gkj = G[..., I[:, None], J[None, :]]
    return 0.5 * (Fki * Glj - Fli * Gkj + Gki * Flj - Gli * Fkj)


def cdot(F: np.ndarray, G: np.ndarray, frame: np.ndarray | None = None) -> Lambda2Map:
    """``F . G`` as a :class:`Lambda2Map`.

    ``F`` and ``G`` are coordinate-frame endomorphisms when ``frame`` is
    given (they are converted to it), otherwise already in an orthonormal frame.
    """
    if frame is not None:
        F = np.linalg.solve(frame, F @ frame)
        G = np.linalg.solve(frame, G @ frame)
    return Lambda2Map(cdot_matrix(F, G), F.shape[-1], frame)


def lambda2_compose(a: Lambda2Map, b: Lambda2Map) -> Lambda2Map:
    _check_frames(a, b)
    return Lambda2Map(a.matrix @ b.matrix, a.n, a.frame if a.frame is not None else b.frame)


def lambda2_trace(a: Lambda2Map) -> np.ndarray:
    return np.trace(a.matrix, axis1=-2, axis2=-1)


def riemann_as_lambda2(Rm: np.ndarray, frame: np.ndarray) -> Lambda2Map:
    """Curvature as a symmetric map: entries ``<R(e_i, e_j) e_k, e_l>``."""
    n = frame.shape[-1]
    # frame components of R(e_a, e_b) acting in the frame
    Rf = np.einsum("...ia,...jb,...ijlk->...ablk", frame, frame, Rm)
    Rf = np.linalg.solve(frame[..., None, None, :, :], Rf @ frame[..., None, None, :, :])
    I, J = pairs(n)
    # M[(kl), (ij)] = <R(e_i, e_j) e_k, e_l> = Rf[i, j, l, k]
    M = Rf[..., I[None, :], J[None, :], J[:, None], I[:, None]]
    return Lambda2Map(M, n, frame)
