"""Truncated multivariate Taylor arithmetic (jets) up to order 3.

A :class:`Jet` stores the Taylor coefficients of one or many scalars at a
point, in a dense graded monomial basis.  The coefficient array has shape
``(*batch, N)`` where ``N = C(dim + order, order)``; the batch axes are used
both for sample points and for tensor indices, so whole metric matrices at a
few hundred points are a single ``Jet``.

Coefficients are Taylor coefficients, i.e. ``d^m f / m!``.  Monomials are
ordered by total degree first, so truncating to a lower order is a slice.
"""

from __future__ import annotations

import functools
import itertools
import math
from typing import Sequence

import numpy as np

MAX_ORDER = 3
MAX_DIM = 8

__all__ = [
    "Jet",
    "MAX_DIM",
    "MAX_ORDER",
    "align",
    "contract",
    "basis",
    "extract_partial",
    "jeinsum",
    "jet_arith",
    "jet_constant",
    "jet_elementary",
    "jet_inv",
    "jet_variable",
    "jdot",
    "jmatmul",
    "jmatvec",
    "stack",
    "values",
]


class _Basis:
    """Monomial tables for a fixed (dim, order)."""

    def __init__(self, dim: int, order: int):
        self.dim = dim
        self.order = order
        monos = []
        for deg in range(order + 1):
            # lexicographically descending within a degree: x0^2 before x0 x1
            for combo in itertools.combinations_with_replacement(range(dim), deg):
                e = [0] * dim
                for axis in combo:
                    e[axis] += 1
                monos.append(tuple(e))
        self.monomials: list[tuple[int, ...]] = monos
        self.index = {m: k for k, m in enumerate(monos)}
        self.size = len(monos)
        self.degree = np.array([sum(m) for m in monos])
        self.factorial = np.array(
            [math.prod(math.factorial(e) for e in m) for m in monos], dtype=float
        )
        # graded prefix sizes: sizes[k] = number of monomials of degree <= k
        self.sizes = [int(np.sum(self.degree <= k)) for k in range(order + 1)]

        left, right, target = [], [], []
        for p, mp in enumerate(monos):
            for q, mq in enumerate(monos):
                if self.degree[p] + self.degree[q] > order:
                    continue
                left.append(p)
                right.append(q)
                target.append(self.index[tuple(a + b for a, b in zip(mp, mq))])
        self.left = np.array(left)
        self.right = np.array(right)
        scatter = np.zeros((len(left), self.size))
        scatter[np.arange(len(left)), target] = 1.0
        self.scatter = scatter

        # derivative tables: d/dx_i maps order -> order - 1
        self.deriv_src = []
        self.deriv_fac = []
        if order >= 1:
            lower = monos[: self.sizes[order - 1]]
            for axis in range(dim):
                src, fac = [], []
                for m in lower:
                    up = list(m)
                    up[axis] += 1
                    src.append(self.index[tuple(up)])
                    fac.append(float(up[axis]))
                self.deriv_src.append(np.array(src))
                self.deriv_fac.append(np.array(fac))


@functools.lru_cache(maxsize=None)
def basis(dim: int, order: int) -> _Basis:
    if not 1 <= dim <= MAX_DIM:
        raise ValueError(f"jet dimension must be in 1..{MAX_DIM}, got {dim}")
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
    return _Basis(dim, order)


class Jet:
    """Batch of truncated Taylor expansions in ``dim`` variables."""

    __slots__ = ("coeffs", "dim", "order")
    __array_priority__ = 100

    def __init__(self, coeffs, dim: int, order: int):
        b = basis(dim, order)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1:] != (b.size,):
            raise ValueError(
                f"coefficient axis has length {coeffs.shape[-1:]}, expected {b.size}"
            )
        self.coeffs = coeffs
        self.dim = dim
        self.order = order

    # -- basic views -----------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def gradient(self) -> np.ndarray:
        """First partials, stacked on a new last axis."""
        if self.order < 1:
            raise ValueError("gradient needs a jet of order >= 1")
        return self.coeffs[..., 1 : 1 + self.dim].copy()

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            idx = idx + (slice(None),)
        return Jet(self.coeffs[idx], self.dim, self.order)

    def __len__(self) -> int:
        return self.shape[0]

    def __repr__(self) -> str:
        return f"Jet(dim={self.dim}, order={self.order}, shape={self.shape})"

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.coeffs.reshape(*shape, self.coeffs.shape[-1]), self.dim, self.order)

    def moveaxis(self, src, dst) -> "Jet":
        nd = self.ndim
        src = np.atleast_1d(src) % nd
        dst = np.atleast_1d(dst) % nd
        return Jet(np.moveaxis(self.coeffs, src, dst), self.dim, self.order)

    def swapaxes(self, a: int, b: int) -> "Jet":
        nd = self.ndim
        return Jet(np.swapaxes(self.coeffs, a % nd, b % nd), self.dim, self.order)

    def sum(self, axis) -> "Jet":
        axes = np.atleast_1d(axis) % self.ndim
        return Jet(self.coeffs.sum(axis=tuple(axes)), self.dim, self.order)

    def trace(self) -> "Jet":
        """Trace over the last two batch axes."""
        return Jet(np.trace(self.coeffs, axis1=-3, axis2=-2), self.dim, self.order)

    @property
    def T(self) -> "Jet":
        return self.swapaxes(-1, -2)

    # -- order handling --------------------------------------------------

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        n = basis(self.dim, self.order).sizes[order]
        return Jet(self.coeffs[..., :n], self.dim, order)

    def deriv(self, axis: int) -> "Jet":
        """Partial derivative along ``axis``; the result has order one less."""
        if self.order < 1:
            raise ValueError("cannot differentiate a jet of order 0")
        if not 0 <= axis < self.dim:
            raise IndexError(f"axis {axis} out of range for dim {self.dim}")
        b = basis(self.dim, self.order)
        c = self.coeffs[..., b.deriv_src[axis]] * b.deriv_fac[axis]
        return Jet(c, self.dim, self.order - 1)

    def grad(self) -> "Jet":
        """All partial derivatives as a jet with a new trailing axis."""
        return stack([self.deriv(i) for i in range(self.dim)], axis=-1)

    # -- arithmetic ------------------------------------------------------

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.dim != self.dim:
                raise ValueError(f"jet dimension mismatch: {self.dim} vs {other.dim}")
            if other.order != self.order:
                raise ValueError(f"jet order mismatch: {self.order} vs {other.order}")
            return other
        return jet_constant(other, self.dim, self.order)

    def __add__(self, other) -> "Jet":
        o = self._coerce(other)
        return Jet(self.coeffs + o.coeffs, self.dim, self.order)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        o = self._coerce(other)
        return Jet(self.coeffs - o.coeffs, self.dim, self.order)

    def __rsub__(self, other) -> "Jet":
        o = self._coerce(other)
        return Jet(o.coeffs - self.coeffs, self.dim, self.order)

    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs, self.dim, self.order)

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            # constants scale every coefficient
            return Jet(self.coeffs * np.asarray(other, dtype=float)[..., None], self.dim, self.order)
        o = self._coerce(other)
        b = basis(self.dim, self.order)
        prod = self.coeffs[..., b.left] * o.coeffs[..., b.right]
        return Jet(prod @ b.scatter, self.dim, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return Jet(self.coeffs / np.asarray(other, dtype=float)[..., None], self.dim, self.order)
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other) -> "Jet":
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, r) -> "Jet":
        if isinstance(r, int) and r >= 0:
            out = jet_constant(np.ones(self.shape), self.dim, self.order)
            for _ in range(r):
                out = out * self
            return out
        return _compose(self, "pow", r)

    def reciprocal(self) -> "Jet":
        return _compose(self, "reciprocal")

    def exp(self) -> "Jet":
        return _compose(self, "exp")

    def log(self) -> "Jet":
        return _compose(self, "ln")

    def sin(self) -> "Jet":
        return _compose(self, "sin")

    def cos(self) -> "Jet":
        return _compose(self, "cos")

    def sqrt(self) -> "Jet":
        return _compose(self, "sqrt")


# -- constructors ------------------------------------------------------------


def jet_constant(value, dim: int, order: int) -> Jet:
    value = np.asarray(value, dtype=float)
    b = basis(dim, order)
    c = np.zeros(value.shape + (b.size,))
    c[..., 0] = value
    return Jet(c, dim, order)


def jet_variable(i: int, value, dim: int, order: int) -> Jet:
    """Jet of the coordinate function ``x_i`` at ``value`` (scalar or array)."""
    if not 0 <= i < dim:
        raise IndexError(f"axis {i} out of range for dim {dim}")
    out = jet_constant(value, dim, order)
    if order >= 1:
        out.coeffs[..., 1 + i] = 1.0
    return out


def stack(jets: Sequence[Jet], axis: int = 0) -> Jet:
    jets = list(jets)
    first = jets[0]
    for j in jets[1:]:
        first._coerce(j)
    nd = first.ndim + 1
    axis = axis % nd
    return Jet(np.stack([j.coeffs for j in jets], axis=axis), first.dim, first.order)


def align(*items):
    """Truncate all jets to the lowest order among them.

    Non-jet arguments are passed through unchanged.
    """
    orders = [x.order for x in items if isinstance(x, Jet)]
    if not orders:
        return items
    m = min(orders)
    return tuple(x.truncate(m) if isinstance(x, Jet) else x for x in items)


# -- arithmetic entry points -------------------------------------------------


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown jet operation {op!r}")


def _taylor_derivs(fn: str, x0: np.ndarray, order: int, r: float | None = None):
    """Univariate derivatives f^(k)(x0), k = 0..order."""
    if fn == "exp":
        e = np.exp(x0)
        return [e] * (order + 1)
    if fn == "ln":
        if np.any(x0 <= 0):
            raise ValueError("ln of a jet with non-positive constant term")
        return [np.log(x0), 1 / x0, -1 / x0**2, 2 / x0**3][: order + 1]
    if fn == "sin":
        s, c = np.sin(x0), np.cos(x0)
        return [s, c, -s, -c][: order + 1]
    if fn == "cos":
        s, c = np.sin(x0), np.cos(x0)
        return [c, -s, -c, s][: order + 1]
    if fn == "reciprocal":
        if np.any(x0 == 0):
            raise ZeroDivisionError("division by a jet with zero constant term")
        return [1 / x0, -1 / x0**2, 2 / x0**3, -6 / x0**4][: order + 1]
    if fn in ("sqrt", "pow"):
        if fn == "sqrt":
            r = 0.5
        if np.any(x0 <= 0) and not float(r).is_integer():
            raise ValueError(f"pow({r}) of a jet with non-positive constant term")
        out, coef = [], 1.0
        for k in range(order + 1):
            out.append(coef * x0 ** (r - k))
            coef *= r - k
        return out
    raise ValueError(f"unknown elementary function {fn!r}")


def _compose(a: Jet, fn: str, r: float | None = None) -> Jet:
    x0 = a.value
    derivs = _taylor_derivs(fn, x0, a.order, r)
    h = Jet(a.coeffs.copy(), a.dim, a.order)
    h.coeffs[..., 0] = 0.0
    out = jet_constant(derivs[0], a.dim, a.order)
    hk = None
    for k in range(1, a.order + 1):
        hk = h if hk is None else hk * h
        out = out + hk * (derivs[k] / math.factorial(k))
    return out


def jet_elementary(a: Jet, fn: str, r: float | None = None) -> Jet:
    """Apply exp, ln, sin, cos, sqrt or pow(r) to a jet."""
    if fn == "pow" and r is None:
        raise ValueError("pow needs an exponent")
    return _compose(a, fn, r)


def extract_partial(a: Jet, m: Sequence[int]) -> np.ndarray:
    """The partial derivative of multi-index ``m`` (not divided by m!)."""
    m = tuple(int(e) for e in m)
    if len(m) != a.dim or any(e < 0 for e in m):
        raise ValueError(f"bad multi-index {m} for dim {a.dim}")
    if sum(m) > a.order:
        raise ValueError(f"multi-index order {sum(m)} exceeds jet order {a.order}")
    b = basis(a.dim, a.order)
    k = b.index[m]
    return a.coeffs[..., k] * b.factorial[k]


# -- tensor contractions -----------------------------------------------------

_PAIR = "Z"


def jeinsum(subscripts: str, a, b) -> Jet:
    """``np.einsum`` for two operands where either may be a :class:`Jet`.

    The jet coefficient axis is handled internally; subscripts only name
    the batch axes.  Both jets must share dim and order.
    """
    if _PAIR in subscripts:
        raise ValueError(f"subscript letter {_PAIR} is reserved")
    ins, out = subscripts.split("->")
    sa, sb = ins.split(",")
    if isinstance(a, Jet) and isinstance(b, Jet):
        a._coerce(b)
        bs = basis(a.dim, a.order)
        A = a.coeffs[..., bs.left]
        B = b.coeffs[..., bs.right]
        prod = np.einsum(f"{sa}{_PAIR},{sb}{_PAIR}->{out}{_PAIR}", A, B, optimize=True)
        return Jet(prod @ bs.scatter, a.dim, a.order)
    if isinstance(a, Jet):
        c = np.einsum(f"{sa}{_PAIR},{sb}->{out}{_PAIR}", a.coeffs, np.asarray(b), optimize=True)
        return Jet(c, a.dim, a.order)
    if isinstance(b, Jet):
        c = np.einsum(f"{sa},{sb}{_PAIR}->{out}{_PAIR}", np.asarray(a), b.coeffs, optimize=True)
        return Jet(c, b.dim, b.order)
    raise TypeError("jeinsum needs at least one Jet operand")


def jmatmul(a, b) -> Jet:
    """Batched matrix product over the last two axes."""
    return jeinsum("...ij,...jk->...ik", a, b)


def jmatvec(a, v) -> Jet:
    return jeinsum("...ij,...j->...i", a, v)


def jdot(u, v) -> Jet:
    return jeinsum("...i,...i->...", u, v)


def jet_inv(a: Jet) -> Jet:
    """Inverse of a batch of square jet matrices (last two axes).

    Uses the terminating Neumann series ``sum_k (-A0^{-1} H)^k A0^{-1}``
    where ``H`` has vanishing constant term.
    """
    a0inv = np.linalg.inv(a.value)
    h = Jet(a.coeffs.copy(), a.dim, a.order)
    h.coeffs[..., 0] = 0.0
    step = jeinsum("...ij,...jk->...ik", -a0inv, h)
    out = jet_constant(a0inv, a.dim, a.order)
    term = out
    for _ in range(a.order):
        term = jmatmul(step, term)
        out = out + term
    return out


def contract(subscripts: str, a, b):
    """Two-operand einsum accepting plain arrays or jets on either side."""
    if isinstance(a, Jet) or isinstance(b, Jet):
        if isinstance(a, Jet) and isinstance(b, Jet):
            a, b = align(a, b)
        return jeinsum(subscripts, a, b)
    return np.einsum(subscripts, a, b, optimize=True)


def values(x):
    """Point values of a jet, or the array itself."""
    return x.value if isinstance(x, Jet) else np.asarray(x)
