"""Charts, tensor fields and the pointwise algebra of vectors, forms and endomorphisms.

Conventions used throughout the package:

* vectors carry upper indices ``X[i]``; one-forms lower indices ``w[i]``;
* an endomorphism ``A`` is stored as ``A[i, j]`` with ``A(e_j) = A[i, j] e_i``;
* k-forms are stored with full antisymmetric components, so that
  ``(a ^ b)[i, j] = a[i] b[j] - a[j] b[i]``;
* ``(X odot Y)(Z) = <X, Z> Y + <Y, Z> X`` and ``(A ^ B)(Z) = <A, Z> B - <B, Z> A``;
* a skew endomorphism ``F`` corresponds to the 2-form ``w(X, Y) = <F X, Y>``.

All pointwise functions work on arrays with a leading batch of points and
also accept :class:`~weyl_lab.jets.Jet` inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .jets import MAX_DIM, Jet, contract, jet_variable, stack

KINDS = {
    "scalar": "",
    "vector": "u",
    "oneform": "d",
    "endomorphism": "ud",
    "metric": "dd",
    "twoform": "dd",
}


class GeometryError(ValueError):
    """Raised for degenerate metrics and malformed geometric input."""


@dataclass(frozen=True)
class Chart:
    """A coordinate box, optionally periodic along some axes."""

    dim: int
    box: tuple[tuple[float, float], ...]
    periodic: tuple[bool, ...] = ()

    def __post_init__(self):
        if not 2 <= self.dim <= MAX_DIM:
            raise GeometryError(f"chart dimension must be in 2..{MAX_DIM}, got {self.dim}")
        box = tuple((float(a), float(b)) for a, b in self.box)
        if len(box) != self.dim:
            raise GeometryError("box must have one interval per axis")
        if any(b <= a for a, b in box):
            raise GeometryError("every box interval must have positive length")
        periodic = tuple(bool(p) for p in self.periodic) or (False,) * self.dim
        if len(periodic) != self.dim:
            raise GeometryError("periodic flags must have one entry per axis")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "periodic", periodic)

    @property
    def fully_periodic(self) -> bool:
        return all(self.periodic)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([b - a for a, b in self.box])

    def coordinates(self, points, order: int) -> list[Jet]:
        """Coordinate jets ``x_i`` at a batch of points of shape ``(m, dim)``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[-1] != self.dim:
            raise GeometryError(f"points must have {self.dim} coordinates")
        return [jet_variable(i, points[:, i], self.dim, order) for i in range(self.dim)]

    def sample(self, count: int, rng: np.random.Generator, margin: float = 0.05) -> np.ndarray:
        """Uniform points in the box, shrunk by ``margin`` of each side on open axes."""
        lo = np.array([a for a, _ in self.box])
        hi = np.array([b for _, b in self.box])
        width = hi - lo
        shrink = np.where(self.periodic, 0.0, margin * width)
        return rng.uniform(lo + shrink, hi - shrink, size=(count, self.dim))

    def contains(self, points) -> np.ndarray:
        points = np.atleast_2d(points)
        lo = np.array([a for a, _ in self.box])
        hi = np.array([b for _, b in self.box])
        ok = (points >= lo) & (points <= hi)
        return np.all(ok | np.array(self.periodic), axis=-1)


@dataclass(frozen=True)
class TensorField:
    """A tensor field on a chart given by a closure over coordinate jets.

    ``fn`` receives the list of coordinate jets (one per axis, batched over
    points) and returns a jet of shape ``(points, *tensor_shape)``.  The
    returned order may be lower than requested (e.g. a field defined as a
    derivative of a scalar); consumers align orders explicitly.
    """

    chart: Chart
    fn: Callable[[list[Jet]], Jet]
    kind: str = "scalar"
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GeometryError(f"unknown field kind {self.kind!r}")

    @property
    def rank(self) -> int:
        return len(KINDS[self.kind])

    def evaluate(self, points, order: int = 3) -> Jet:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        xs = self.chart.coordinates(points, order)
        out = self.fn(xs)
        if not isinstance(out, Jet):
            raise GeometryError(f"field {self.name or self.kind} did not return a Jet")
        n = self.chart.dim
        expected = (points.shape[0],) + (n,) * self.rank
        if out.shape != expected:
            raise GeometryError(
                f"field {self.name or self.kind} returned shape {out.shape}, expected {expected}"
            )
        if self.kind == "metric":
            check_spd(out.value)
        return out

    def __call__(self, points, order: int = 3) -> Jet:
        return self.evaluate(points, order)


def ScalarField(chart, fn, name=""):
    return TensorField(chart, fn, "scalar", name)


def VectorField(chart, fn, name=""):
    return TensorField(chart, fn, "vector", name)


def OneFormField(chart, fn, name=""):
    return TensorField(chart, fn, "oneform", name)


def EndomorphismField(chart, fn, name=""):
    return TensorField(chart, fn, "endomorphism", name)


def MetricField(chart, fn, name="g"):
    return TensorField(chart, fn, "metric", name)


def constant_field(chart: Chart, array, kind: str, name: str = "") -> TensorField:
    """A field with constant coordinate components."""
    array = np.asarray(array, dtype=float)

    def fn(xs):
        zero = xs[0] * 0.0
        m = zero.shape[0]
        flat = [zero + float(a) for a in array.ravel()]
        if not flat:
            return zero
        out = stack(flat, axis=-1)
        return out.reshape((m,) + array.shape)

    return TensorField(chart, fn, kind, name)


def block_diag_jets(blocks: list[Jet]) -> Jet:
    """Assemble a block-diagonal jet matrix from square jet blocks."""
    m = blocks[0].shape[0]
    sizes = [b.shape[-1] for b in blocks]
    n = sum(sizes)
    first = blocks[0]
    coeffs = np.zeros((m, n, n, first.coeffs.shape[-1]))
    at = 0
    for b, s in zip(blocks, sizes):
        if (b.dim, b.order) != (first.dim, first.order):
            raise GeometryError("blocks must share jet dimension and order")
        coeffs[:, at : at + s, at : at + s] = b.coeffs
        at += s
    return Jet(coeffs, first.dim, first.order)


# -- metric checks and frames ----------------------------------------------


def check_spd(g: np.ndarray) -> np.ndarray:
    """Cholesky factors of a batch of metrics; raises when not positive definite."""
    g = np.asarray(g)
    if not np.allclose(g, np.swapaxes(g, -1, -2), rtol=1e-12, atol=1e-12):
        raise GeometryError("metric is not symmetric")
    try:
        return np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("metric is not positive definite") from exc


def orthonormal_frame(g) -> np.ndarray:
    """Gram-Schmidt orthonormalisation of the coordinate frame.

    Returns ``E`` with columns ``e_a``; ``E.T @ g @ E = I``.  Gram-Schmidt of
    the coordinate basis is exactly the upper-triangular inverse transpose of
    the Cholesky factor, which is how it is computed.
    """
    g = np.asarray(g, dtype=float)
    L = check_spd(g)
    return np.swapaxes(np.linalg.inv(L), -1, -2)


def to_frame(A, E: np.ndarray) -> np.ndarray:
    """Matrix of an endomorphism in the orthonormal frame ``E``."""
    return np.linalg.solve(E, np.asarray(A) @ E)


def vector_to_frame(X, E: np.ndarray) -> np.ndarray:
    return np.linalg.solve(E, np.asarray(X)[..., None])[..., 0]


# -- musical isomorphisms ---------------------------------------------------


def flat(g, X):
    """Lower an index: ``X_flat[i] = g[i, j] X[j]``."""
    return contract("...ij,...j->...i", g, X)


def sharp(g, w, ginv=None):
    """Raise an index with ``g^{-1}``."""
    if ginv is None:
        if isinstance(g, Jet):
            raise GeometryError("sharp of jets needs the inverse metric jet")
        return np.linalg.solve(g, np.asarray(w)[..., None])[..., 0]
    return contract("...ij,...j->...i", ginv, w)


def musical(g: TensorField, x: TensorField, p) -> np.ndarray:
    """Raise or lower the index of a vector/one-form field at points ``p``."""
    gv = g.evaluate(p, 0).value
    xv = x.evaluate(p, 0).value
    if x.kind == "vector":
        return flat(gv, xv)
    if x.kind == "oneform":
        return sharp(gv, xv)
    raise GeometryError("musical expects a vector or one-form field")


def inner(g, X, Y):
    return contract("...i,...i->...", flat(g, X), Y)


def endo_flat(g, A):
    """Bilinear form ``b(X, Y) = <A X, Y>`` of an endomorphism: ``b[i, j] = g[j, k] A[k, i]``."""
    return contract("...kj,...ki->...ij", g, A)


def endo_sharp(ginv, b):
    """Endomorphism ``A`` with ``<A X, Y> = b(X, Y)``."""
    return contract("...kj,...ij->...ki", ginv, b)


# -- the two basic endomorphism constructions --------------------------------


def _outer(a, b):
    return contract("...i,...j->...ij", a, b)


def odot(X, Y, g):
    """Symmetric endomorphism ``Z -> <X, Z> Y + <Y, Z> X``."""
    return _outer(Y, flat(g, X)) + _outer(X, flat(g, Y))


def wedge_endo(A, B, g):
    """Skew endomorphism ``Z -> <A, Z> B - <B, Z> A``."""
    return _outer(B, flat(g, A)) - _outer(A, flat(g, B))


def form_outer(a, b):
    """Endomorphism ``a (x) b``: ``Z -> <a, Z> b`` for vectors ``a, b``."""
    return lambda g: _outer(b, flat(g, a))


# -- exterior forms --------------------------------------------------------


@dataclass(frozen=True)
class KForm:
    """A k-form (k <= 3) stored with full antisymmetric components."""

    degree: int
    components: object  # ndarray or Jet of shape (..., n, ..., n)
    chart: Chart | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 0 <= self.degree <= 3:
            raise GeometryError("only forms of degree 0..3 are supported")

    def increasing(self) -> dict[tuple[int, ...], np.ndarray]:
        """Coefficients on strictly increasing index tuples (point values)."""
        from itertools import combinations

        comps = self.components.value if isinstance(self.components, Jet) else np.asarray(self.components)
        n = comps.shape[-1] if self.degree else 0
        out = {}
        for idx in combinations(range(n), self.degree):
            out[idx] = comps[(Ellipsis,) + idx]
        return out


def exterior_d(omega, degree: int):
    """Coordinate exterior derivative of a jet-valued form of degree <= 2.

    Returns a jet one order lower.  Torsion-free connections make this equal
    to the antisymmetrised covariant derivative.
    """
    if not isinstance(omega, Jet):
        raise GeometryError("exterior_d needs jet-valued components")
    if omega.order < 1:
        raise GeometryError("exterior_d needs jets of order >= 1")
    G = omega.grad()  # derivative index last
    if degree == 0:
        return G
    if degree == 1:
        return G.swapaxes(-1, -2) - G
    if degree == 2:
        c = G.coeffs  # (..., i, j, k, Z): d_k w_ij
        ax = c.ndim
        # (dw)_{ijk} = d_i w_jk - d_j w_ik + d_k w_ij
        t1 = np.moveaxis(c, [ax - 4, ax - 3, ax - 2], [ax - 3, ax - 2, ax - 4])  # [i,j,k] <- d_i w_jk
        t2 = np.moveaxis(c, [ax - 4, ax - 3, ax - 2], [ax - 4, ax - 2, ax - 3])  # d_j w_ik
        out = t1 - t2 + c
        return Jet(out, omega.dim, G.order)
    raise GeometryError("exterior_d is implemented up to degree 2")


def wedge_forms(a, p: int, b, q: int):
    """Exterior product of a p-form and a q-form, ``p + q <= 3``."""
    if p == 0:
        return contract("...,...i->...i", a, b) if q == 1 else a * b
    if q == 0:
        return wedge_forms(b, 0, a, p)
    if p == 1 and q == 1:
        o = _outer(a, b)
        return o - _swap(o, -1, -2)
    if p == 2 and q == 1:
        o = contract("...ij,...k->...ijk", a, b)
        # w_ij t_k + w_jk t_i + w_ki t_j
        return o + _perm3(o, (1, 2, 0)) + _perm3(o, (2, 0, 1))
    if p == 1 and q == 2:
        return wedge_forms(b, 2, a, 1)
    raise GeometryError(f"wedge of degrees {p} and {q} is not supported")


def _swap(x, a, b):
    return x.swapaxes(a, b) if isinstance(x, Jet) else np.swapaxes(x, a, b)


def _perm3(o, perm):
    """Return ``r[i0, i1, i2] = o[i_{perm[0]}, i_{perm[1]}, i_{perm[2]}]`` on the last three axes."""
    # r[..., i, j, k] with perm (1, 2, 0) means o[..., j, k, i]
    if isinstance(o, Jet):
        c = o.coeffs
        return Jet(np.transpose(c, _inverse_axes(c.ndim, perm, jet=True)), o.dim, o.order)
    return np.transpose(o, _inverse_axes(o.ndim, perm, jet=False))


def _inverse_axes(nd, perm, jet):
    lead = nd - 4 if jet else nd - 3
    # input axis a holds output index perm[a]
    inv = [perm.index(m) for m in range(3)]
    axes = list(range(lead)) + [lead + a for a in inv]
    if jet:
        axes.append(nd - 1)
    return axes


def interior_product(X, omega, degree: int):
    """Contraction of a vector into the first slot of a form."""
    if degree < 1:
        raise GeometryError("interior product needs a form of degree >= 1")
    if degree == 1:
        return contract("...i,...i->...", X, omega)
    if degree == 2:
        return contract("...i,...ij->...j", X, omega)
    return contract("...i,...ijk->...jk", X, omega)


def endo_to_twoform(g, A):
    """2-form ``w(X, Y) = <A X, Y>`` of a skew endomorphism."""
    return endo_flat(g, A)


def twoform_to_endo(ginv, w):
    return endo_sharp(ginv, w)
