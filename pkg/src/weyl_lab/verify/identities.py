"""Pointwise identity checkers for packs satisfying the two holonomy reductions.

Every checker takes an :class:`~weyl_lab.verify.context.Evaluation` and returns
:class:`ResidualReport` objects.  Words in the letters ``S`` and ``P`` denote
composites of endomorphisms (``"PS"`` is ``P o S``); ``theta`` is used as a
vector through ``g``.
"""

from __future__ import annotations

import numpy as np

from ..connection import codifferential, covd, levi_civita
from ..curvature import cdot_matrix, riemann, riemann_as_lambda2, riemann_on_endo
from ..geometry import endo_to_twoform, exterior_d, wedge_forms
from ..jets import Jet
from .context import Evaluation
from .report import ResidualReport, Tolerances, compare, not_applicable, predicate

__all__ = [
    "APPENDIX_IDS",
    "check_appendix_traces",
    "check_commutation",
    "check_derivS",
    "check_derivation_chain",
    "check_hypotheses",
    "check_lemma_alpha",
    "check_RS",
    "check_scalar_identity",
    "noncttr_sides",
    "word",
]

APPENDIX_IDS = ("trT", "trPT", "trST", "trPST", "trSPT", "trPSPT", "trSPST", "trSPSPT", "trPSPST")


# -- helpers ----------------------------------------------------------------


def word(ev: Evaluation, w: str) -> np.ndarray:
    """Point values of the composite endomorphism spelled by ``w``."""
    out = ev.I
    for ch in w:
        out = out @ {"S": ev.S, "P": ev.P, "T": ev.T}[ch]
    return out


def word_j(ev: Evaluation, w: str) -> Jet:
    mats = [{"S": ev.S_j, "P": ev.P_j}[ch] for ch in w]
    return ev.mat(*mats)


def word_theta_j(ev: Evaluation, w: str) -> Jet:
    """Jet of the vector field ``w(theta)``."""
    if not w:
        return ev.theta_j
    return ev.act(word_j(ev, w), ev.theta_j)


def delta_word(ev: Evaluation, w: str) -> np.ndarray:
    """``delta`` of the one-form dual to ``w(theta)``."""
    return ev.codiff_vector(word_theta_j(ev, w))


class _Scalars:
    """Traces and quadratic expressions in theta shared by the trace identities."""

    def __init__(self, ev: Evaluation):
        self.ev = ev
        self.n = ev.n
        self.trS = ev.tr(ev.S)
        self.th2 = ev.norm2(ev.theta)
        if ev.P is not None:
            self.trP = ev.tr(ev.P)
            self.trSP = ev.tr(ev.S @ ev.P)
            self.trSPSP = ev.tr(ev.S @ ev.P @ ev.S @ ev.P)

    def q(self, w: str) -> np.ndarray:
        """``<theta, w(theta)>``."""
        ev = self.ev
        return ev.ip(ev.theta, ev.apply(word(ev, w), ev.theta))

    def trT(self, w: str) -> np.ndarray:
        """``tr(w o T)``."""
        ev = self.ev
        return ev.tr(word(ev, w) @ ev.T)


def _needs_P(ev: Evaluation, ids, tol):
    if ev.P is None:
        return [not_applicable(i, tol, "pack has no parallel involution P") for i in ids]
    return None


# -- hypotheses ---------------------------------------------------------------


def check_hypotheses(ev: Evaluation, tols: Tolerances = Tolerances()) -> list[ResidualReport]:
    """``D S = 0``, ``nabla P = 0`` and ``D g = -2 theta (x) g`` for the reference ``D``.

    Packs flagged with ``flat_reference`` also get the curvature of the
    reference metric checked (absolute, curvature tolerance).
    """
    tol = tols.first_order
    m = ev.m
    out = []
    DS = covd(ev.S_j, "ud", ev.weyl_gamma).value
    nS = ev.nabla_S
    out.append(compare("hyp.DS", nS, nS - DS, tol, m))
    if ev.P_j is not None:
        nP = covd(ev.P_j, "ud", ev.conn.gamma).value
        out.append(predicate("hyp.nablaP", nP, tol, m))
    else:
        out.append(not_applicable("hyp.nablaP", tol, "pack has no parallel involution P"))
    D = ev.weyl_gamma
    ref = None
    if ev.pack.reference is not None:
        ref = levi_civita(ev.pack.reference, ev.points, 3)
        D = ref.gamma
    Dg = covd(ev.g_j, "dd", D).value  # [i, j, k] = (D_k g)_ij
    rhs = -2.0 * np.einsum("mk,mij->mijk", ev.theta_form_j.value, ev.g)
    out.append(compare("hyp.Dg", Dg, rhs, tol, m))
    if ref is not None and ev.pack.params.get("flat_reference"):
        out.append(predicate("hyp.reference_flat", riemann(ref).value, tols.curvature, m))
    else:
        out.append(not_applicable("hyp.reference_flat", tols.curvature, "pack does not declare a flat reference"))
    return out


# -- first-order identities -------------------------------------------------------


def check_derivS(ev: Evaluation, rng, ndir: int = 8, tols: Tolerances = Tolerances()) -> ResidualReport:
    X = ev.directions(ndir, rng)
    lhs = np.einsum("mijk,mck->mcij", ev.nabla_S, X)
    S = ev.S[:, None]
    th = ev.theta[:, None]
    rhs = ev.odot(ev.apply(S, X), th) - ev.odot(ev.apply(S, th), X)
    return compare("eq.derivS", lhs, rhs, tols.first_order, ev.m)


def check_lemma_alpha(ev: Evaluation, rng, ndir: int = 8, tols: Tolerances = Tolerances()) -> list[ResidualReport]:
    ids = ("lemma_alpha.derivalpha", "lemma_alpha.diffalpha", "lemma_alpha.codiffalpha", "lemma_alpha.dtrace")
    tol = tols.first_order
    na = _needs_P(ev, ids, tol)
    if na:
        return na
    m, n = ev.m, ev.n
    alpha_j = ev.mat(ev.S_j, ev.P_j) - ev.mat(ev.P_j, ev.S_j)
    alpha = alpha_j.value
    S, P, th = ev.S, ev.P, ev.theta
    out = []

    # (a) covariant derivative along random directions
    X = ev.directions(ndir, rng)
    lhs = np.einsum("mijk,mck->mcij", covd(alpha_j, "ud", ev.conn.gamma).value, X)
    Sb, Pb, tb = S[:, None], P[:, None], th[:, None]
    PS = Pb @ Sb
    rhs = (
        ev.wedge(ev.apply(PS, X), tb)
        + ev.wedge(ev.apply(Pb, tb), ev.apply(Sb, X))
        - ev.wedge(ev.apply(Pb, X), ev.apply(Sb, tb))
        - ev.wedge(ev.apply(PS, tb), X)
    )
    out.append(compare(ids[0], lhs, rhs, tol, m))

    # (b) exterior derivative of the 2-form
    omega = endo_to_twoform(ev.g_j, alpha_j)
    d_omega = exterior_d(omega, 2).value
    rhs = -wedge_forms(omega.value, 2, ev.theta_form_j.value, 1)
    out.append(compare(ids[1], d_omega, rhs, tol, m))

    # (c) codifferential
    lhs = ev.raise_(codifferential(omega, 2, ev.conn).value)
    tr = ev.tr
    rhs = (
        (1 - n) * ev.apply(P @ S, th)
        - ev.apply(S @ P, th)
        - tr(P @ S)[:, None] * th
        + tr(P)[:, None] * ev.apply(S, th)
        + tr(S)[:, None] * ev.apply(P, th)
    )
    out.append(compare(ids[2], lhs, rhs, tol, m))

    # (d) differential of tr(SP)
    trSP = ev.mat(ev.S_j, ev.P_j).trace()
    lhs = ev.differential(trSP)
    rhs = 2.0 * ev.apply(alpha, th)
    out.append(compare(ids[3], lhs, rhs, tol, m))
    return out


# -- curvature identities -----------------------------------------------------------


def check_RS(ev: Evaluation, rng, ndir: int = 8, tols: Tolerances = Tolerances()) -> ResidualReport:
    X = ev.directions(ndir, rng)
    Y = ev.directions(ndir, rng)
    S, T, th = ev.S[:, None], ev.T[:, None], ev.theta[:, None]
    lhs = riemann_on_endo(ev.riemann[:, None], X, Y, S)
    od, ap = ev.odot, ev.apply
    SX, SY, TX, TY = ap(S, X), ap(S, Y), ap(T, X), ap(T, Y)
    Sth = ap(S, th)
    thY = ev.ip(th, Y)[..., None, None]
    thX = ev.ip(th, X)[..., None, None]
    th2 = ev.norm2(th)[..., None, None]
    rhs = (
        od(SY, TX)
        - od(SX, TY)
        + od(ap(S, TY), X)
        - od(ap(S, TX), Y)
        + thY * (od(SX, th) - od(Sth, X))
        + thX * (od(Sth, Y) - od(SY, th))
        - th2 * (od(SX, Y) - od(SY, X))
    )
    return compare("eq.RS", lhs, rhs, tols.curvature, ev.m)


def _outer_frame(a, b):
    """``a (x) b`` in an orthonormal frame: ``Z -> <a, Z> b``."""
    return b[..., :, None] * a[..., None, :]


def commutation_sides(ev: Evaluation):
    """The three Lambda^2 identities as ``(lhs, rhs)`` pairs of matrices."""
    fr = ev.frame
    S, P, T, th = fr["S"], fr["P"], fr["T"], fr["theta"]
    n = ev.n
    I = np.broadcast_to(np.eye(n), S.shape)
    R = riemann_as_lambda2(ev.riemann, ev.E).matrix
    c = cdot_matrix
    th2 = np.sum(th * th, axis=-1)[:, None, None]
    Sth = np.einsum("mij,mj->mi", S, th)
    Pth = np.einsum("mij,mj->mi", P, th)
    PP = c(P, P)
    SS = c(S, S)
    lhs = SS @ R - R
    commSR = (
        -2 * c(S @ T, S)
        + 2 * c(T, I)
        + 2 * c(S, _outer_frame(th, Sth))
        - 2 * c(I, _outer_frame(th, th))
        + th2 * (c(I, I) - SS)
    )
    SP = S @ P
    eqSSR = (
        -2 * c(S @ T @ P, SP)
        + 2 * c(T @ P, P)
        + 2 * c(SP, _outer_frame(Pth, Sth))
        - 2 * c(P, _outer_frame(Pth, th))
        + th2 * (PP - c(SP, SP))
    )
    commJR = (np.stack([PP @ R, R @ PP]), np.stack([R, R]))
    return {"comm.commJR": commJR, "comm.commSR": (lhs, commSR), "comm.eqSSR": (lhs, eqSSR)}


def check_commutation(ev: Evaluation, tols: Tolerances = Tolerances()) -> list[ResidualReport]:
    ids = ("comm.commJR", "comm.commSR", "comm.eqSSR")
    tol = tols.curvature
    na = _needs_P(ev, ids, tol)
    if na:
        return na
    sides = commutation_sides(ev)
    return [compare(i, *sides[i], tol, ev.m) for i in ids]


def beta_j(ev: Evaluation) -> Jet:
    """``beta = tr(S) S theta - (n+1) theta - tr(SP) PS theta + PSPS theta + tr(P) P theta``."""
    n = ev.n
    trS = ev.S_j.trace()
    trP = ev.P_j.trace()
    trSP = ev.mat(ev.S_j, ev.P_j).trace()
    return (
        ev.scale(trS, word_theta_j(ev, "S"))
        - word_theta_j(ev, "") * float(n + 1)
        - ev.scale(trSP, word_theta_j(ev, "PS"))
        + word_theta_j(ev, "PSPS")
        + ev.scale(trP, word_theta_j(ev, "P"))
    )


def scalar_identity_sides(ev: Evaluation):
    """``-delta(beta)`` and the algebraic part of the scalar identity."""
    s = _Scalars(ev)
    n = s.n
    rest = (
        0.5 * s.th2 * (n * n + s.trS**2 - s.trP**2 - s.trSP**2 + s.trSPSP - n)
        + (s.q("P") - s.q("SPS")) * s.trP
        - s.q("S") * (n * s.trS - s.trP * s.trSP)
    )
    return -ev.codiff_vector(beta_j(ev)), rest


def check_scalar_identity(ev: Evaluation, tols: Tolerances = Tolerances()) -> ResidualReport:
    tol = tols.curvature
    if ev.P is None:
        return not_applicable("scalar_identity", tol, "pack has no parallel involution P")
    lhs, rhs = scalar_identity_sides(ev)
    return compare("scalar_identity", lhs, rhs, tol, ev.m)


def noncttr_sides(ev: Evaluation, printed_sign: bool = False):
    """Both sides of the expansion of ``-delta(tr(SP) PS theta)``.

    The expansion follows from the Leibniz rule and ``d tr(SP) = 2 alpha(theta)``;
    since ``<PS theta, PS theta> = |theta|^2`` the last term is ``-2 |theta|^2``.
    ``printed_sign=True`` uses ``+2 |theta|^2`` instead, for comparison.
    """
    s = _Scalars(ev)
    trSP_j = ev.mat(ev.S_j, ev.P_j).trace()
    lhs = -ev.codiff_vector(ev.scale(trSP_j, word_theta_j(ev, "PS")))
    sign = 1.0 if printed_sign else -1.0
    rhs = -s.trSP * delta_word(ev, "PS") + 2 * s.q("SPSP") + sign * 2 * s.th2
    return lhs, rhs


def chain_sides(ev: Evaluation):
    """Intermediate trace identities between the commutation traces and the scalar identity."""
    s = _Scalars(ev)
    n = s.n
    trT = s.trT("")
    ti0_lhs = -s.trT("S") * s.trS + n * trT + s.trS * s.q("S") + 0.5 * s.th2 * (n * n - 2 * n - s.trS**2)
    Pth = ev.apply(ev.P, ev.theta)
    PthSth = ev.ip(Pth, ev.apply(ev.S, ev.theta))
    PthSPSth = ev.ip(Pth, ev.apply(word(ev, "SPS"), ev.theta))
    ti0_rhs = (
        -s.trT("PS") * s.trSP
        + s.trT("PSPS")
        + s.trT("P") * s.trP
        - trT
        + s.trSP * PthSth
        - PthSPSth
        - s.trP * s.q("P")
        + 0.5 * s.th2 * (2 + s.trP**2 - n - s.trSP**2 + s.trSPSP)
    )
    nc_lhs, nc_rhs = noncttr_sides(ev)
    n1_lhs = s.trT("PS") * s.trSP
    n1_rhs = nc_lhs - 2 * s.q("SPSP") + 2 * s.th2 - s.th2 * s.trSP**2 + s.q("S") * s.trP * s.trSP
    return {
        "chain.traceidentity0": (ti0_lhs, ti0_rhs),
        "chain.noncttr": (nc_lhs, nc_rhs),
        "chain.noncttr1": (n1_lhs, n1_rhs),
    }


def check_derivation_chain(ev: Evaluation, tols: Tolerances = Tolerances()) -> list[ResidualReport]:
    ids = ("chain.traceidentity0", "chain.noncttr", "chain.noncttr1")
    tol = tols.curvature
    na = _needs_P(ev, ids, tol)
    if na:
        return na
    sides = chain_sides(ev)
    return [compare(i, *sides[i], tol, ev.m) for i in ids]


def appendix_sides(ev: Evaluation):
    s = _Scalars(ev)
    n, q, th2 = s.n, s.q, s.th2
    trS, trP, trSP, trSPSP = s.trS, s.trP, s.trSP, s.trSPSP
    d = lambda w: delta_word(ev, w)  # noqa: E731
    return {
        "trT": (s.trT(""), -d("")),
        "trPT": (s.trT("P"), -d("P")),
        "trST": (s.trT("S"), -d("S") - th2 * trS + n * q("S")),
        "trPST": (s.trT("PS"), -d("PS") - th2 * trSP + q("S") * trP),
        "trSPT": (s.trT("SP"), -d("SP") - q("P") * trS + n * q("SP")),
        "trPSPT": (s.trT("PSP"), -d("PSP") - q("PSP") - q("P") * trSP + q("SP") * trP + q("S")),
        "trSPST": (
            s.trT("SPS"),
            -d("SPS") + (n + 1) * q("SPS") - q("SP") * trS - q("P") - th2 * trP + q("S") * trSP,
        ),
        "trSPSPT": (
            s.trT("SPSP"),
            -d("SPSP") + (n + 1) * q("SPSP") - q("PSP") * trS - th2 - q("P") * trP + q("SP") * trSP,
        ),
        "trPSPST": (
            s.trT("PSPS"),
            -d("PSPS") - q("SPSP") - q("SP") * trSP + q("SPS") * trP + th2 * (1 - trSPSP) + q("S") * trS,
        ),
    }


def check_appendix_traces(ev: Evaluation, tols: Tolerances = Tolerances()) -> list[ResidualReport]:
    ids = tuple(f"appendix.{k}" for k in APPENDIX_IDS)
    tol = tols.first_order
    if ev.P is None:
        # the first and third identities do not involve P
        out = []
        s = _Scalars(ev)
        for key, rid in zip(APPENDIX_IDS, ids):
            if key == "trT":
                out.append(compare(rid, s.trT(""), -delta_word(ev, ""), tol, ev.m))
            elif key == "trST":
                rhs = -delta_word(ev, "S") - s.th2 * s.trS + ev.n * s.q("S")
                out.append(compare(rid, s.trT("S"), rhs, tol, ev.m))
            else:
                out.append(not_applicable(rid, tol, "pack has no parallel involution P"))
        return out
    sides = appendix_sides(ev)
    return [compare(rid, *sides[k], tol, ev.m) for k, rid in zip(APPENDIX_IDS, ids)]
