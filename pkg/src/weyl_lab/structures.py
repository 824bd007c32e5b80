"""Example geometries carrying a Weyl-parallel involution S and a parallel involution P.

Every builder returns a :class:`StructurePack` whose fields are closures over
coordinate jets.  Three families are provided:

* triple products ``g = e^{2f} g1 + g2 + g3`` on a flat torus chart;
* conformally rescaled products ``g = e^{2u} g0`` whose Weyl connection is the
  Levi-Civita connection of ``g0``;
* the flat cone, ``g = dt^2 + g_sphere`` with the Weyl connection of the
  Euclidean metric ``e^{2t} g`` and a constant Cartesian splitting.

The module also holds the pointwise algebra of pairs of involutions
(``alpha``, the coefficients ``A+`` and ``A-``) and a seeded sampler of random
involution pairs.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import (
    Chart,
    GeometryError,
    TensorField,
    block_diag_jets,
    check_spd,
    constant_field,
    orthonormal_frame,
    to_frame,
)
from .jets import Jet, jet_constant, jet_inv, jeinsum, stack

__all__ = [
    "InvolutionPair",
    "MetricTerm",
    "RescaledProductSpec",
    "StructurePack",
    "TrigTerm",
    "TripleProductSpec",
    "a_minus_via_frame",
    "a_plus_minus",
    "a_plus_via_frame",
    "alpha",
    "build_flat_cone",
    "build_rescaled_product",
    "build_triple_product",
    "eigenbasis",
    "flip_S",
    "haar_orthogonal",
    "random_component_metric",
    "random_involution_pair",
    "random_involution_pairs",
    "random_trig_function",
    "theta_split",
    "trig_function",
]

TWO_PI = 2.0 * np.pi


# -- trigonometric presets ----------------------------------------------------


@dataclass(frozen=True)
class TrigTerm:
    """One term ``amplitude * sin(wavevector . y + phase)``."""

    amplitude: float
    wavevector: tuple[int, ...]
    phase: float = 0.0


@dataclass(frozen=True)
class MetricTerm:
    """One perturbation ``amplitude * sin(wavevector . y + phase) * B`` of a metric block."""

    amplitude: float
    wavevector: tuple[int, ...]
    phase: float
    matrix: tuple[tuple[float, ...], ...]


def _phase_jet(ys: Sequence[Jet], wavevector, phase: float) -> Jet:
    out = ys[0] * 0.0 + phase
    for y, m in zip(ys, wavevector):
        if m:
            out = out + y * float(m)
    return out


def trig_function(terms: Sequence[TrigTerm], ys: Sequence[Jet], constant: float = 0.0) -> Jet:
    """Evaluate a trigonometric series on the coordinate jets ``ys``."""
    out = ys[0] * 0.0 + constant
    for t in terms:
        if len(t.wavevector) != len(ys):
            raise GeometryError("wavevector length does not match the number of coordinates")
        out = out + _phase_jet(ys, t.wavevector, t.phase).sin() * t.amplitude
    return out


def random_trig_function(
    nvars: int, rng: np.random.Generator, nterms: int = 3, amplitude: float = 0.4, max_freq: int = 2
) -> tuple[TrigTerm, ...]:
    """Random trigonometric series with integer wavevectors (periodic on ``[0, 2 pi]``)."""
    terms = []
    for _ in range(nterms):
        m = rng.integers(-max_freq, max_freq + 1, size=nvars)
        while not m.any():
            m = rng.integers(-max_freq, max_freq + 1, size=nvars)
        a = rng.uniform(-amplitude, amplitude)
        terms.append(TrigTerm(float(a), tuple(int(v) for v in m), float(rng.uniform(0, TWO_PI))))
    return tuple(terms)


def random_component_metric(
    dim: int, rng: np.random.Generator, nterms: int = 2, total_amplitude: float = 0.3, max_freq: int = 1
) -> tuple[MetricTerm, ...]:
    """Perturbation terms of ``I`` whose amplitudes sum to at most ``total_amplitude``.

    Each ``B`` has spectral norm one, so the block stays positive definite.
    """
    if total_amplitude > 0.3 + 1e-12:
        raise GeometryError("component metric perturbations are capped at amplitude 0.3")
    weights = rng.dirichlet(np.ones(nterms)) * total_amplitude
    terms = []
    for w in weights:
        B = rng.standard_normal((dim, dim))
        B = B + B.T
        B /= np.max(np.abs(np.linalg.eigvalsh(B)))
        m = rng.integers(-max_freq, max_freq + 1, size=dim)
        while not m.any():
            m = rng.integers(-max_freq, max_freq + 1, size=dim)
        terms.append(
            MetricTerm(
                float(w * rng.choice([-1.0, 1.0])),
                tuple(int(v) for v in m),
                float(rng.uniform(0, TWO_PI)),
                tuple(tuple(float(x) for x in row) for row in B),
            )
        )
    return tuple(terms)


def component_metric(terms: Sequence[MetricTerm], ys: Sequence[Jet]) -> Jet:
    """``I + sum a_k sin(m_k . y + phi_k) B_k`` as a jet of shape ``(points, d, d)``."""
    d = len(ys)
    if sum(abs(t.amplitude) for t in terms) > 0.3 + 1e-12:
        raise GeometryError("component metric perturbation exceeds amplitude 0.3")
    zero = ys[0] * 0.0
    out = jeinsum("...,ij->...ij", zero + 1.0, np.eye(d))
    for t in terms:
        B = np.asarray(t.matrix, dtype=float)
        if B.shape != (d, d) or not np.allclose(B, B.T):
            raise GeometryError("metric perturbation matrices must be symmetric d x d")
        s = _phase_jet(ys, t.wavevector, t.phase).sin() * t.amplitude
        out = out + jeinsum("...,ij->...ij", s, B)
    return out


# -- structure packs ------------------------------------------------------------


@dataclass(frozen=True)
class StructurePack:
    """A metric with a Weyl structure ``theta``, its parallel involution ``S`` and
    optionally a parallel involution ``P`` and a unit field ``xi`` spanning a
    rank-one eigenbundle of ``S``."""

    name: str
    chart: Chart
    g: TensorField
    S: TensorField
    theta: TensorField
    P: TensorField | None = None
    xi: TensorField | None = None
    xi_eigenvalue: int | None = None
    reference: TensorField | None = None
    expected: str | None = None
    params: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return self.chart.dim

    def with_(self, **changes) -> "StructurePack":
        return dataclasses.replace(self, **changes)


def _negate(field_: TensorField, name: str) -> TensorField:
    fn = field_.fn
    return TensorField(field_.chart, lambda xs: -fn(xs), field_.kind, name)


def flip_S(pack: StructurePack) -> StructurePack:
    """Replace S by -S; eigenbundles and the roles of theta+/theta- swap."""
    ev = None if pack.xi_eigenvalue is None else -pack.xi_eigenvalue
    return pack.with_(S=_negate(pack.S, "-" + (pack.S.name or "S")), xi_eigenvalue=ev)


def flip_P(pack: StructurePack) -> StructurePack:
    if pack.P is None:
        return pack
    return pack.with_(P=_negate(pack.P, "-" + (pack.P.name or "P")))


# -- triple products ------------------------------------------------------------


@dataclass(frozen=True)
class TripleProductSpec:
    """Data of ``g = e^{2f} g1 + g2 + g3`` on the torus ``[0, 2 pi]^n``.

    ``f`` is a trigonometric series in the first ``d1 + d2`` coordinates and
    ``metric_terms[i]`` perturbs the identity on block ``i``.
    """

    dims: tuple[int, int, int]
    f_terms: tuple[TrigTerm, ...] = ()
    metric_terms: tuple[tuple[MetricTerm, ...], ...] = ((), (), ())

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3:
            raise GeometryError("triple products need exactly three block dimensions")
        d1, d2, d3 = dims
        if d1 < 1:
            raise GeometryError("triple product needs d1 >= 1")
        if d2 < 1:
            raise GeometryError("triple product needs d2 >= 1")
        if d3 < 1:
            raise GeometryError("triple product needs d3 >= 1 (otherwise P = +-I)")
        if sum(dims) < 3:
            raise GeometryError("triple product needs n >= 3")
        object.__setattr__(self, "dims", dims)
        if len(self.metric_terms) != 3:
            raise GeometryError("one list of metric terms per block is required")
        for t in self.f_terms:
            if len(t.wavevector) != d1 + d2:
                raise GeometryError("f may only depend on the first d1 + d2 coordinates")

    @classmethod
    def random(cls, dims, seed: int, perturb: bool = True, **kw) -> "TripleProductSpec":
        cls(tuple(dims))  # validate the block dimensions before sampling
        rng = np.random.default_rng(seed)
        d1, d2, d3 = dims
        f = random_trig_function(d1 + d2, rng, **kw)
        mt = tuple(random_component_metric(d, rng) if perturb else () for d in dims)
        return cls(tuple(dims), f, mt)


def build_triple_product(spec: TripleProductSpec) -> StructurePack:
    d1, d2, d3 = spec.dims
    n = d1 + d2 + d3
    chart = Chart(n, ((0.0, TWO_PI),) * n, (True,) * n)
    b1, b2, b3 = slice(0, d1), slice(d1, d1 + d2), slice(d1 + d2, n)

    def f_of(xs):
        return trig_function(spec.f_terms, xs[: d1 + d2])

    def metric(xs):
        g1 = component_metric(spec.metric_terms[0], xs[b1])
        g2 = component_metric(spec.metric_terms[1], xs[b2])
        g3 = component_metric(spec.metric_terms[2], xs[b3])
        w = (f_of(xs) * 2.0).exp()
        return block_diag_jets([jeinsum("...,...ij->...ij", w, g1), g2, g3])

    def theta(xs):
        df = f_of(xs).grad()  # (points, n)
        mask = np.zeros(n)
        mask[b2] = 1.0
        return df * (-mask)

    S = np.diag([1.0] * d1 + [-1.0] * (d2 + d3))
    P = np.diag([1.0] * (d1 + d2) + [-1.0] * d3)
    pack = StructurePack(
        name=f"triple_product{spec.dims}",
        chart=chart,
        g=TensorField(chart, metric, "metric", "g"),
        S=constant_field(chart, S, "endomorphism", "S"),
        P=constant_field(chart, P, "endomorphism", "P"),
        theta=TensorField(chart, theta, "oneform", "theta"),
        expected="satisfied",
        params={"dims": list(spec.dims)},
    )
    if d1 == 1:

        def xi(xs):
            g1 = component_metric(spec.metric_terms[0], xs[b1])[:, 0, 0]
            scale = (-f_of(xs)).exp() / g1.sqrt()
            e = np.zeros(n)
            e[0] = 1.0
            return jeinsum("...,i->...i", scale, e)

        pack = pack.with_(xi=TensorField(chart, xi, "vector", "xi"), xi_eigenvalue=1)
    return pack


# -- conformally rescaled products ----------------------------------------------


@dataclass(frozen=True)
class RescaledProductSpec:
    """Data of ``g = e^{2u} g0`` with ``g0`` a product over ``split``.

    ``split`` gives the two block dimensions ``(k, n - k)``.  ``u`` is either a
    trigonometric series over all coordinates (``u_terms``) or the preset
    ``"inverse_radius"``: ``u = -ln|x - center|`` with Euclidean ``g0``, for
    which ``g`` is the product ``dt^2 + g_sphere`` and carries the parallel
    involution ``P`` that reflects the radial direction.
    """

    split: tuple[int, int]
    u_terms: tuple[TrigTerm, ...] = ()
    metric_terms: tuple[tuple[MetricTerm, ...], tuple[MetricTerm, ...]] = ((), ())
    preset: str = "trig"
    center: tuple[float, ...] | None = None
    radial_sign: int = 1
    box: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        k, m = (int(s) for s in self.split)
        if k < 1 or m < 1:
            raise GeometryError("both blocks of the product must be nonempty")
        object.__setattr__(self, "split", (k, m))
        if self.preset not in ("trig", "inverse_radius", "polynomial"):
            raise GeometryError(f"unknown rescaling preset {self.preset!r}")
        if self.preset == "inverse_radius" and any(self.metric_terms):
            raise GeometryError("the inverse_radius preset uses a Euclidean g0")


def _block_unit(n, at, scale: Jet) -> Jet:
    e = np.zeros(n)
    e[at] = 1.0
    return jeinsum("...,i->...i", scale, e)


def build_rescaled_product(spec: RescaledProductSpec) -> StructurePack:
    """``g = e^{2u} g0`` with ``D`` the Levi-Civita connection of ``g0`` and ``theta = -du``."""
    k, m = spec.split
    n = k + m
    if spec.preset == "inverse_radius":
        center = np.zeros(n) if spec.center is None else np.asarray(spec.center, dtype=float)
        box = spec.box or tuple((0.5, 1.5) for _ in range(n))
        chart = Chart(n, box)
        lo = np.array([a for a, _ in chart.box]) - center
        hi = np.array([b for _, b in chart.box]) - center
        if np.all((lo <= 0) & (hi >= 0)):
            raise GeometryError("inverse_radius chart must exclude the center")
    elif spec.preset == "polynomial":
        box = spec.box or tuple((-1.0, 1.0) for _ in range(n))
        chart = Chart(n, box)
    else:
        chart = Chart(n, ((0.0, TWO_PI),) * n, (True,) * n)

    def u_of(xs):
        if spec.preset == "inverse_radius":
            r2 = xs[0] * 0.0
            for x, c in zip(xs, center):
                r2 = r2 + (x - c) * (x - c)
            return r2.log() * -0.5
        if spec.preset == "polynomial":
            # u = sum a x_i x_j over the wavevector pairs, e.g. 0.2 x1 x2
            out = xs[0] * 0.0
            for t in spec.u_terms:
                term = xs[0] * 0.0 + t.amplitude
                for x, p in zip(xs, t.wavevector):
                    for _ in range(p):
                        term = term * x
                out = out + term
            return out
        return trig_function(spec.u_terms, xs)

    def g0(xs):
        h1 = component_metric(spec.metric_terms[0], xs[:k])
        h2 = component_metric(spec.metric_terms[1], xs[k:])
        return block_diag_jets([h1, h2])

    def metric(xs):
        w = (u_of(xs) * 2.0).exp()
        return jeinsum("...,...ij->...ij", w, g0(xs))

    def theta(xs):
        return -u_of(xs).grad()

    S = np.diag([1.0] * k + [-1.0] * m)
    pack = StructurePack(
        name=f"rescaled_product{spec.split}:{spec.preset}",
        chart=chart,
        g=TensorField(chart, metric, "metric", "g"),
        S=constant_field(chart, S, "endomorphism", "S"),
        theta=TensorField(chart, theta, "oneform", "theta"),
        reference=TensorField(chart, g0, "metric", "g0"),
        params={"split": [k, m], "preset": spec.preset},
    )
    if k == 1 or m == 1:
        at = 0 if k == 1 else k
        ev = 1 if k == 1 else -1

        def xi(xs):
            h = g0(xs)[:, at, at]
            return _block_unit(n, at, (-u_of(xs)).exp() / h.sqrt())

        pack = pack.with_(xi=TensorField(chart, xi, "vector", "xi"), xi_eigenvalue=ev)
    if spec.preset == "inverse_radius":
        sign = 1.0 if spec.radial_sign >= 0 else -1.0

        def P(xs):
            d = [x - c for x, c in zip(xs, center)]
            r2 = d[0] * 0.0
            for v in d:
                r2 = r2 + v * v
            rr = stack(d, axis=-1)
            proj = jeinsum("...,...ij->...ij", r2.reciprocal(), jeinsum("...i,...j->...ij", rr, rr))
            eye = jeinsum("...,ij->...ij", r2 * 0.0 + 1.0, np.eye(n))
            return (eye - proj * 2.0) * sign

        pack = pack.with_(P=TensorField(chart, P, "endomorphism", "P"), expected="violated")
    return pack


# -- the flat cone ------------------------------------------------------------------


def _sphere_factors(nang: int):
    """Factors of the hyperspherical embedding: component i is a product of
    ``(angle, "sin" | "cos")`` pairs."""
    comps = []
    for i in range(nang + 1):
        fac = [(j, "sin") for j in range(min(i, nang))]
        if i < nang:
            fac.append((i, "cos"))
        comps.append(fac)
    return comps


def _eval_factors(factors, angles: Sequence[Jet], diff: int | None = None) -> Jet:
    out = angles[0] * 0.0 + 1.0
    hit = diff is None
    for j, kind in factors:
        a = angles[j]
        if j == diff:
            hit = True
            val = a.cos() if kind == "sin" else -a.sin()
        else:
            val = a.sin() if kind == "sin" else a.cos()
        out = out * val
    return out if hit else angles[0] * 0.0


def haar_orthogonal(n: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Random orthogonal matrices from QR of Gaussian matrices, with the sign fix."""
    shape = (n, n) if size is None else (size, n, n)
    Z = rng.standard_normal(shape)
    Q, R = np.linalg.qr(Z)
    d = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    d[d == 0] = 1.0
    return Q * d[..., None, :]


def build_flat_cone(n: int, k: int = 1, seed: int = 0, radial_sign: int = 1, pole_margin: float = 0.2) -> StructurePack:
    """Flat cone in polar coordinates ``(t, angles)``, ``x = e^t u(angles)``."""
    if n not in (3, 4):
        raise GeometryError("flat cone builder supports n = 3 and n = 4")
    if not 1 <= k < n:
        raise GeometryError("cartesian split must satisfy 1 <= k < n")
    if not 0 < pole_margin < np.pi / 4:
        raise GeometryError("pole margin must lie in (0, pi/4)")
    nang = n - 1
    box = [(-0.5, 0.5)]
    box += [(pole_margin, np.pi - pole_margin)] * (nang - 1)
    box += [(0.0, TWO_PI)]
    chart = Chart(n, tuple(box))
    comps = _sphere_factors(nang)
    R = haar_orthogonal(n, np.random.default_rng(seed))
    S_cart = R @ np.diag([1.0] * k + [-1.0] * (n - k)) @ R.T

    def _check(xs):
        ang = np.stack([a.value for a in xs[1:-1]], axis=-1) if nang > 1 else None
        if ang is not None and (np.any(np.sin(ang) < np.sin(pole_margin) - 1e-12)):
            raise GeometryError("chart point too close to a pole of the angular chart")

    def metric(xs):
        _check(xs)
        ang = xs[1:]
        diag = [xs[0] * 0.0 + 1.0, xs[0] * 0.0 + 1.0]
        w = xs[0] * 0.0 + 1.0
        for j in range(1, nang):
            w = w * ang[j - 1].sin() * ang[j - 1].sin()
            diag.append(w)
        z = xs[0] * 0.0
        rows = [[diag[i] if i == j else z for j in range(n)] for i in range(n)]
        return stack([stack(r, axis=-1) for r in rows], axis=-2)

    def jacobian_over_r(xs):
        # columns: d/dt and d/d angle_j of u, so that dx = e^t [u, du]
        ang = xs[1:]
        cols = [[_eval_factors(c, ang) for c in comps]]
        for j in range(nang):
            cols.append([_eval_factors(c, ang, diff=j) for c in comps])
        return stack([stack(col, axis=-1) for col in cols], axis=-1)

    def S(xs):
        _check(xs)
        J = jacobian_over_r(xs)
        return jeinsum("...ij,...jk->...ik", jet_inv(J), jeinsum("ij,...jk->...ik", S_cart, J))

    def theta(xs):
        e = np.zeros(n)
        e[0] = 1.0
        return jeinsum("...,i->...i", xs[0] * 0.0 + 1.0, e)

    def reference(xs):
        w = (xs[0] * 2.0).exp()
        return jeinsum("...,...ij->...ij", w, metric(xs))

    Pm = np.diag([1.0] + [-1.0] * nang) * (1.0 if radial_sign >= 0 else -1.0)
    pack = StructurePack(
        name=f"flat_cone(n={n},k={k})",
        chart=chart,
        g=TensorField(chart, metric, "metric", "g"),
        S=TensorField(chart, S, "endomorphism", "S"),
        P=constant_field(chart, Pm, "endomorphism", "P"),
        theta=TensorField(chart, theta, "oneform", "theta"),
        reference=TensorField(chart, reference, "metric", "g_flat"),
        expected="violated",
        params={"n": n, "k": k, "seed": seed, "flat_reference": True},
    )
    if k == 1 or k == n - 1:
        c = R[:, 0] if k == 1 else R[:, -1]

        def xi(xs):
            J = jacobian_over_r(xs)
            v = jeinsum("...ij,j->...i", jet_inv(J), c)
            return v  # e^t J_x^{-1} c with J_x = e^t J

        pack = pack.with_(xi=TensorField(chart, xi, "vector", "xi"), xi_eigenvalue=1 if k == 1 else -1)
    return pack


# -- pointwise algebra of involutions --------------------------------------------


def theta_split(S, theta):
    """``theta+-  = (theta +- S theta) / 2`` for a one-form and a g-symmetric ``S``.

    On one-forms ``(S theta)_j = theta_i S[i, j]``, which is the flat of
    ``S theta^sharp`` when ``S`` is g-symmetric.
    """
    Stheta = np.einsum("...i,...ij->...j", theta, S)
    return 0.5 * (theta + Stheta), 0.5 * (theta - Stheta)


def alpha(S, P):
    """The endomorphism ``SP - PS`` (skew with respect to g)."""
    return S @ P - P @ S


def _tr(A):
    return np.trace(A, axis1=-2, axis2=-1)


def a_plus_minus(S, P):
    """``(A+, A-)`` from their trace definitions (basis independent)."""
    n = S.shape[-1]
    SP = S @ P
    trS, trP, trSP = _tr(S), _tr(P), _tr(SP)
    base = n * n + trS**2 - trP**2 - trSP**2 + _tr(SP @ SP) - n
    cross = 2 * n * trS - 2 * trP * trSP
    return base - cross, base + cross


def eigenbasis(S, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of ``E+(S)`` for symmetric involutions (Euclidean frame).

    Columns of ``(I + S)/2`` are orthonormalised by pivoted Gram-Schmidt,
    dropping columns whose residual norm falls below ``tol``.  Returns
    ``(Xi, keep)`` where ``Xi`` has shape ``(..., n, n)`` with zero columns at
    dropped steps and ``keep`` flags the retained columns.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[-1]
    proj = 0.5 * (np.eye(n) + S)
    work = proj.copy()
    Xi = np.zeros_like(work)
    keep = np.zeros(S.shape[:-2] + (n,), dtype=bool)
    for step in range(n):
        norms = np.linalg.norm(work, axis=-2)
        piv = np.argmax(norms, axis=-1)
        best = np.take_along_axis(norms, piv[..., None], axis=-1)[..., 0]
        ok = best > tol
        v = np.take_along_axis(work, piv[..., None, None], axis=-1)[..., 0]
        v = np.where(ok[..., None], v / np.where(ok, best, 1.0)[..., None], 0.0)
        Xi[..., :, step] = v
        keep[..., step] = ok
        work = work - v[..., :, None] * np.einsum("...i,...ij->...j", v, work)[..., None, :]
    # conditioning checks: orthonormal, eigenvectors, rank equals the trace
    G = np.swapaxes(Xi, -1, -2) @ Xi
    want = np.eye(n) * keep[..., None, :]
    rank = np.rint(_tr(proj))
    if (
        np.max(np.abs(G - want), initial=0.0) > 1e-8
        or np.max(np.abs(S @ Xi - Xi), initial=0.0) > 1e-8
        or np.any(keep.sum(-1) != rank)
    ):
        raise GeometryError("defective numerical eigenbasis of the involution")
    return Xi, keep


def a_minus_via_frame(S, P, frame: np.ndarray | None = None):
    """``A- = 4 (r^2 - r + sum_{i != j} (<P xi_i, xi_j>^2 - <P xi_i, xi_i><P xi_j, xi_j>))``."""
    S = np.asarray(S, dtype=float)
    P = np.asarray(P, dtype=float)
    if frame is not None:
        S, P = to_frame(S, frame), to_frame(P, frame)
    Xi, keep = eigenbasis(S)
    M = np.swapaxes(Xi, -1, -2) @ P @ Xi
    r = keep.sum(-1).astype(float)
    d = np.diagonal(M, axis1=-2, axis2=-1)
    off = np.sum(M**2, axis=(-1, -2)) - np.sum(d**2, axis=-1)
    prod = np.sum(d, axis=-1) ** 2 - np.sum(d**2, axis=-1)
    return 4.0 * (r * r - r + off - prod)


def a_plus_via_frame(S, P, frame: np.ndarray | None = None):
    """``A+`` via the same formula applied to ``-S`` (an orthonormal basis of ``E-(S)``)."""
    return a_minus_via_frame(-np.asarray(S, dtype=float), P, frame)


@dataclass(frozen=True)
class InvolutionPair:
    n: int
    S: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        for name, A in (("S", self.S), ("P", self.P)):
            A = np.asarray(A)
            if A.shape[-2:] != (self.n, self.n):
                raise GeometryError(f"{name} must be {self.n} x {self.n}")
            if np.max(np.abs(A - np.swapaxes(A, -1, -2))) > 1e-10:
                raise GeometryError(f"{name} is not symmetric")
            if np.max(np.abs(A @ A - np.eye(self.n))) > 1e-10:
                raise GeometryError(f"{name} is not an involution")


def _check_ranks(n, rank_S, rank_P):
    if not 3 <= n <= 8 and n != 2:
        raise GeometryError("involution pairs are sampled for 2 <= n <= 8")
    for name, r in (("rank_S", rank_S), ("rank_P", rank_P)):
        if not 1 <= r <= n - 1:
            raise GeometryError(f"{name} must lie in 1..n-1 (involutions other than +-I)")


def random_involution_pairs(n: int, rank_S: int, rank_P: int, count: int, rng: np.random.Generator):
    """Batched version of :func:`random_involution_pair`: arrays ``(count, n, n)``."""
    _check_ranks(n, rank_S, rank_P)
    Q1 = haar_orthogonal(n, rng, count)
    Q2 = haar_orthogonal(n, rng, count)
    dS = np.array([1.0] * rank_S + [-1.0] * (n - rank_S))
    dP = np.array([1.0] * rank_P + [-1.0] * (n - rank_P))
    S = (Q1 * dS) @ np.swapaxes(Q1, -1, -2)
    P = (Q2 * dP) @ np.swapaxes(Q2, -1, -2)
    # exact symmetry
    S = 0.5 * (S + np.swapaxes(S, -1, -2))
    P = 0.5 * (P + np.swapaxes(P, -1, -2))
    return S, P


def random_involution_pair(n: int, rank_S: int, rank_P: int, seed: int) -> InvolutionPair:
    rng = np.random.default_rng(seed)
    S, P = random_involution_pairs(n, rank_S, rank_P, 1, rng)
    return InvolutionPair(n, S[0], P[0])


def structure_checks(pack: StructurePack, points, order: int = 0) -> dict[str, float]:
    """Pointwise algebraic invariants of a pack: involution and symmetry defects."""
    g = pack.g.evaluate(points, 0).value
    check_spd(g)
    out = {}
    n = pack.n
    for name, F in (("S", pack.S), ("P", pack.P)):
        if F is None:
            continue
        A = F.evaluate(points, 0).value
        gA = np.einsum("...ij,...jk->...ik", g, A)
        out[f"{name}^2-I"] = float(np.max(np.abs(A @ A - np.eye(n))))
        out[f"{name} symmetry"] = float(np.max(np.abs(gA - np.swapaxes(gA, -1, -2))))
    return out


def frame_values(pack: StructurePack, points):
    """Orthonormal frame and frame matrices of S and P at points."""
    g = pack.g.evaluate(points, 0).value
    E = orthonormal_frame(g)
    S = to_frame(pack.S.evaluate(points, 0).value, E)
    P = None if pack.P is None else to_frame(pack.P.evaluate(points, 0).value, E)
    return E, S, P
