"""Identities for a unit field ``xi`` spanning a rank-one Weyl-parallel line bundle."""

from __future__ import annotations

import numpy as np

from ..connection import covd
from ..geometry import exterior_d, wedge_forms
from .context import Evaluation
from .report import ResidualReport, Tolerances, compare, not_applicable, predicate

__all__ = ["RANK1_IDS", "check_rank1_suite", "rank1_sides"]

RANK1_IDS = (
    "rank1.koxi",
    "rank1.nabla_theta_xi",
    "rank1.codiff_xi",
    "rank1.d_xi",
    "rank1.d_xi_Pxi",
    "rank1.ric_xi",
    "rank1.ric_Pxi",
    "rank1.codiff_Pxi",
    "rank1.eqric",
    "rank1.theta_xi",
    "rank1.theta_Pxi",
    "rank1.const_angle",
    "rank1.claim",
    "rank1.koxi1",
    "rank1.riemxi",
)

_NEEDS_P = {"rank1.d_xi_Pxi", "rank1.ric_Pxi", "rank1.codiff_Pxi", "rank1.eqric"}
# conclusions that need compactness and both holonomy reductions
_CONCLUSIONS = {
    "rank1.theta_xi",
    "rank1.theta_Pxi",
    "rank1.const_angle",
    "rank1.claim",
    "rank1.koxi1",
    "rank1.riemxi",
}
_CURVATURE = {"rank1.ric_xi", "rank1.ric_Pxi", "rank1.eqric", "rank1.riemxi"}
_PREDICATES = {"rank1.nabla_theta_xi", "rank1.theta_xi", "rank1.theta_Pxi", "rank1.const_angle", "rank1.claim"}


def rank1_sides(ev: Evaluation, rng, ndir: int = 8) -> dict:
    """Both sides of every rank-one display (or the residual for predicates)."""
    n = ev.n
    xi_j = ev.xi_j
    xi, th = ev.xi, ev.theta
    ap, ip = ev.apply, ev.ip
    out = {}

    nabla_xi = covd(xi_j, "u", ev.conn.gamma).value  # [i, k] = (nabla_k xi)^i
    X = ev.directions(ndir, rng)
    Y = ev.directions(ndir, rng)
    xb, tb = xi[:, None], th[:, None]
    th_xi = ip(th, xi)

    lhs = np.einsum("mik,mck->mci", nabla_xi, X)
    rhs = -th_xi[:, None, None] * X + ip(X, xb)[..., None] * tb
    out["rank1.koxi"] = (lhs, rhs)
    out["rank1.nabla_theta_xi"] = np.einsum("mik,mk->mi", nabla_xi, th)
    out["rank1.codiff_xi"] = (ev.codiff_vector(xi_j), (n - 1) * th_xi)
    xi_form_j = ev.flat_j(xi_j)
    out["rank1.d_xi"] = (
        exterior_d(xi_form_j, 1).value,
        wedge_forms(ev.lower(xi), 1, ev.theta_form_j.value, 1),
    )

    theta_xi_j = ev.ip_j(ev.theta_j, xi_j)
    d_th_xi = ev.differential(theta_xi_j)
    delta_theta = ev.codiff_vector(ev.theta_j)
    Ric = ev.ricci_endo
    out["rank1.ric_xi"] = (ap(Ric, xi), (n - 2) * d_th_xi - delta_theta[:, None] * xi)

    if ev.P is not None:
        P = ev.P
        Pxi_j = ev.act(ev.P_j, xi_j)
        Pxi = ap(P, xi)
        Pth = ap(P, th)
        th_Pxi = ip(th, Pxi)
        trP = ev.tr(P)[:, None]
        angle_j = ev.ip_j(xi_j, Pxi_j)
        d_angle = ev.differential(angle_j)
        out["rank1.d_xi_Pxi"] = (d_angle, 2 * (th_Pxi[:, None] * xi - th_xi[:, None] * Pxi))
        d_th_Pxi = ev.differential(ev.ip_j(ev.theta_j, Pxi_j))
        delta_Pth = ev.codiff_vector(ev.act(ev.P_j, ev.theta_j))
        out["rank1.ric_Pxi"] = (
            ap(Ric, Pxi),
            th_Pxi[:, None] * th
            - th_xi[:, None] * Pth
            - delta_Pth[:, None] * xi
            - d_th_Pxi
            - ap(P, d_th_xi)
            + trP * d_th_xi,
        )
        out["rank1.codiff_Pxi"] = (ev.codiff_vector(Pxi_j), ev.tr(P) * th_xi - th_Pxi)
        out["rank1.eqric"] = (
            th_Pxi[:, None] * th - th_xi[:, None] * Pth - d_th_Pxi + trP * d_th_xi,
            delta_Pth[:, None] * xi - delta_theta[:, None] * Pxi + (n - 1) * ap(P, d_th_xi),
        )
        out["rank1.theta_xi"] = th_xi
        out["rank1.theta_Pxi"] = th_Pxi
        out["rank1.const_angle"] = d_angle
        angle = ip(xi, Pxi)
        xi1 = 0.5 * (1 + angle)
        xi2 = 0.5 * (1 - angle)
        # both squared lengths must be constant and one of them zero
        spread = max(np.ptp(xi1), np.ptp(xi2))
        out["rank1.claim"] = np.array([min(np.max(np.abs(xi1)), np.max(np.abs(xi2))), spread])

    out["rank1.koxi1"] = (lhs, ip(X, xb)[..., None] * tb)
    TX, TY = ap(ev.T[:, None], X), ap(ev.T[:, None], Y)
    RXY = np.einsum("mci,mcj,mijlk->mclk", X, Y, ev.riemann)
    lhs_r = ap(RXY, xb)
    rhs_r = (
        (ip(Y, tb) * ip(X, xb))[..., None] * tb
        + ip(Y, xb)[..., None] * TX
        - (ip(X, tb) * ip(Y, xb))[..., None] * tb
        - ip(X, xb)[..., None] * TY
    )
    out["rank1.riemxi"] = (lhs_r, rhs_r)
    return out


def _applicable(ev: Evaluation, rid: str) -> str | None:
    if rid in _NEEDS_P and ev.P is None:
        return "pack has no parallel involution P"
    if rid in _CONCLUSIONS and (ev.P is None or not ev.pack.chart.fully_periodic):
        return "conclusion needs a compact (fully periodic) pack carrying P"
    return None


def check_rank1_suite(
    ev: Evaluation, rng, ndir: int = 8, tols: Tolerances = Tolerances(), predicate_tol: float = 1e-9
) -> list[ResidualReport]:
    if ev.xi is None:
        return [not_applicable(i, tols.first_order, "pack has no rank-one unit field xi") for i in RANK1_IDS]
    sides = rank1_sides(ev, rng, ndir)
    out = []
    for rid in RANK1_IDS:
        tol = tols.curvature if rid in _CURVATURE else tols.first_order
        if rid in _PREDICATES and rid != "rank1.nabla_theta_xi":
            tol = predicate_tol if rid != "rank1.claim" else 1e-12
        reason = _applicable(ev, rid)
        if reason:
            out.append(not_applicable(rid, tol, reason))
        elif rid in _PREDICATES:
            out.append(predicate(rid, sides[rid], tol, ev.m))
        else:
            out.append(compare(rid, *sides[rid], tol, ev.m))
    return out
