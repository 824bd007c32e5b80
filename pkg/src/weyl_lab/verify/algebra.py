"""Pointwise linear algebra: the Lambda^2 product laws and the A+/A- sampling theorems."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from ..curvature import cdot, lambda2_trace, wedge_coords
from ..structures import (
    a_minus_via_frame,
    a_plus_minus,
    a_plus_via_frame,
    haar_orthogonal,
    random_involution_pairs,
)
from .report import ABS_FLOOR, ResidualReport, compare, predicate

__all__ = ["LAMBDA2_IDS", "ATheoremReport", "admissible_ranks", "check_a_theorems", "check_lambda2_lemmas"]

LAMBDA2_IDS = (
    "lambda2.trace",
    "lambda2.compose",
    "lambda2.prod",
    "lambda2.identity_trace",
    "lambda2.symmetric",
    "lambda2.square",
)


def check_lambda2_lemmas(n: int, samples: int = 1000, seed: int = 0, tol: float = 1e-10) -> list[ResidualReport]:
    """Trace and composition laws of ``F.G`` over random endomorphism tuples."""
    if not 2 <= n <= 8:
        raise ValueError("Lambda^2 checks run for 2 <= n <= 8")
    rng = np.random.default_rng(seed)
    F, G, F2, G2 = rng.standard_normal((4, samples, n, n))
    tr = lambda A: np.trace(A, axis1=-2, axis2=-1)  # noqa: E731
    FG = cdot(F, G)
    out = [
        compare("lambda2.trace", lambda2_trace(FG), 0.5 * (tr(F) * tr(G) - tr(F @ G)), tol, samples),
        compare(
            "lambda2.compose",
            (FG @ cdot(F2, G2)).matrix,
            (0.5 * (cdot(F @ F2, G @ G2) + cdot(G @ F2, F @ G2))).matrix,
            tol,
            samples,
        ),
        compare("lambda2.prod", (FG @ cdot(F2, F2)).matrix, cdot(F @ F2, G @ F2).matrix, tol, samples),
    ]
    I = np.eye(n)
    # exact: every entry is a sum of 0, 1/2 and 1
    tr_II = float(lambda2_trace(cdot(I, I)))
    out.append(compare("lambda2.identity_trace", tr_II, n * (n - 1) / 2, 0.0, 1))
    out.append(compare("lambda2.symmetric", FG.matrix, cdot(G, F).matrix, tol, samples))
    # (F.F)(X ^ Y) = FX ^ FY, tested on coordinate bivectors
    X, Y = rng.standard_normal((2, samples, n))
    lhs = np.einsum("mab,mb->ma", cdot(F, F).matrix, wedge_coords(X, Y))
    rhs = wedge_coords(np.einsum("mij,mj->mi", F, X), np.einsum("mij,mj->mi", F, Y))
    out.append(compare("lambda2.square", lhs, rhs, tol, samples))
    return out


def admissible_ranks(n_range=range(3, 9)) -> list[tuple[int, int, int]]:
    """All ``(n, rank E+(S), rank E+(P))`` with both involutions different from +-I."""
    return [(n, r, s) for n in n_range for r in range(1, n) for s in range(1, n)]


@dataclass
class ATheoremReport:
    reports: list[ResidualReport]
    samples: int
    combos: int
    min_value: float
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


def _route_rel(a, b) -> float:
    """Largest per-sample relative disagreement, absolute where both are tiny."""
    diff = np.abs(a - b)
    scale = np.maximum(np.abs(a), np.abs(b))
    rel = np.where(scale < ABS_FLOOR, diff, diff / np.where(scale < ABS_FLOOR, 1.0, scale))
    return float(np.max(rel, initial=0.0))


def _inclusion_pair(n, r, eps, rng, minus=False):
    """S, P with ``E_{+}(S)`` (or ``E_-(S)`` if ``minus``) inside ``E_eps(P)``.

    The distinguished eigenspace of S has rank ``r``; P acts by ``eps`` on it
    and by a random involution on the orthogonal complement, never ``eps I``
    there so that P itself is not ``+-I``.
    """
    Q = haar_orthogonal(n, rng)
    sgn = -1.0 if minus else 1.0
    dS = np.array([sgn] * r + [-sgn] * (n - r))
    k = n - r
    if k > 0:
        Qc = haar_orthogonal(k, rng)
        rank_c = int(rng.integers(0, k)) + (1 if eps < 0 else 0)
        Pc = (Qc * np.array([1.0] * rank_c + [-1.0] * (k - rank_c))) @ Qc.T
    else:
        Pc = np.zeros((0, 0))
    Pd = np.zeros((n, n))
    Pd[:r, :r] = eps * np.eye(r)
    Pd[r:, r:] = Pc
    S = (Q * dS) @ Q.T
    P = Q @ Pd @ Q.T
    return 0.5 * (S + S.T), 0.5 * (P + P.T)


def _rotate(P, K, eps):
    U = expm(eps * K)
    return U @ P @ U.T


def check_a_theorems(
    n_range=range(3, 9),
    samples: int = 100_000,
    seed: int = 0,
    nonneg_tol: float = 1e-9,
    route_tol: float = 1e-8,
    zero_tol: float = 1e-10,
    inclusions_per_n: int = 50,
) -> ATheoremReport:
    """Sample involution pairs and test nonnegativity, both routes and the vanishing loci."""
    rng = np.random.default_rng(seed)
    combos = admissible_ranks(n_range)
    per = -(-samples // len(combos))
    lo = np.inf
    route = 0.0
    forced = 0.0
    forced_frame = 0.0
    forced_count = 0
    total = 0
    for n, r, s in combos:
        S, P = random_involution_pairs(n, r, s, per, rng)
        Ap, Am = a_plus_minus(S, P)
        Ap_f, Am_f = a_plus_via_frame(S, P), a_minus_via_frame(S, P)
        lo = min(lo, float(Ap.min()), float(Am.min()))
        route = max(route, _route_rel(Ap, Ap_f), _route_rel(Am, Am_f))
        if r == 1:
            forced = max(forced, float(np.max(np.abs(Am))))
            forced_frame = max(forced_frame, float(np.max(np.abs(Am_f))))
            forced_count += per
        if r == n - 1:
            forced = max(forced, float(np.max(np.abs(Ap))))
            forced_frame = max(forced_frame, float(np.max(np.abs(Ap_f))))
            forced_count += per
        total += per

    incl = 0.0
    incl_count = 0
    growth_ok = True
    pert_min = np.inf
    for n in n_range:
        for _ in range(inclusions_per_n):
            r = int(rng.integers(1, n))
            eps = float(rng.choice([-1.0, 1.0]))
            minus = bool(rng.integers(0, 2))
            S, P = _inclusion_pair(n, r, eps, rng, minus)
            Ap, Am = a_plus_minus(S, P)
            A = Ap if minus else Am
            incl = max(incl, abs(float(A)))
            incl_count += 1
            if r < 2:
                continue  # rank one: A vanishes for every P, nothing to perturb
            K = rng.standard_normal((n, n))
            K = K - K.T
            vals = []
            for t in (1e-3, 1e-2, 1e-1):
                Ap_t, Am_t = a_plus_minus(S, _rotate(P, K, t))
                vals.append(float(Ap_t if minus else Am_t))
            pert_min = min(pert_min, vals[0])
            growth_ok &= vals[0] > 0 and vals[0] < vals[1] < vals[2]

    reports = [
        predicate("A.nonnegative", max(0.0, -lo), nonneg_tol, total, f"min(A+, A-) = {lo:.3e}"),
        ResidualReport(
            "A.routes", total, route, route, route_tol, route <= route_tol, "pass" if route <= route_tol else "fail"
        ),
        predicate("A.rank_one_zero", forced, zero_tol, forced_count, f"frame route max |A| = {forced_frame:.1e}"),
        predicate("A.rank_one_zero_frame", forced_frame, 0.0, forced_count),
        predicate("A.inclusion_zero", incl, zero_tol, incl_count),
        ResidualReport(
            "A.perturbed_positive",
            incl_count,
            float(pert_min),
            float(pert_min),
            0.0,
            bool(growth_ok and pert_min > 0),
            "pass" if growth_ok and pert_min > 0 else "fail",
            "A(eps) > 0 and increasing for eps = 1e-3, 1e-2, 1e-1",
        ),
    ]
    return ATheoremReport(reports, total, len(combos), lo, {"per_combo": per})
