"""Identity suites and a small runner that evaluates them on a pack."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..structures import StructurePack
from .algebra import ATheoremReport, check_a_theorems, check_lambda2_lemmas
from .classify import Classification, classify_structure
from .context import Evaluation, random_directions
from .identities import (
    check_appendix_traces,
    check_commutation,
    check_derivation_chain,
    check_derivS,
    check_hypotheses,
    check_lemma_alpha,
    check_RS,
    check_scalar_identity,
)
from .integrals import IntegralResult, QuadratureGrid, check_condition_star, check_integral_formula, default_ladder
from .rank1 import check_rank1_suite
from .report import TOL_CURVATURE, TOL_FIRST_ORDER, ResidualReport, Tolerances, compare, not_applicable, predicate

__all__ = [
    "ALGEBRA_SUITES",
    "PACK_SUITES",
    "ATheoremReport",
    "Classification",
    "Evaluation",
    "IntegralResult",
    "QuadratureGrid",
    "ResidualReport",
    "RunResult",
    "TOL_CURVATURE",
    "TOL_FIRST_ORDER",
    "Tolerances",
    "check_a_theorems",
    "check_appendix_traces",
    "check_commutation",
    "check_condition_star",
    "check_derivation_chain",
    "check_derivS",
    "check_hypotheses",
    "check_integral_formula",
    "check_lambda2_lemmas",
    "check_lemma_alpha",
    "check_rank1_suite",
    "check_RS",
    "check_scalar_identity",
    "classify_structure",
    "compare",
    "not_applicable",
    "predicate",
    "random_directions",
    "resolve_suites",
    "run_algebra",
    "run_suites",
]

# order matters: each suite draws from its own stream keyed by its position
PACK_SUITES = (
    "hypotheses",
    "derivS",
    "RS",
    "lemma_alpha",
    "commutation",
    "scalar_identity",
    "derivation_chain",
    "appendix_traces",
    "rank1",
    "classify",
    "condition_star",
    "integral_formula",
)
ALGEBRA_SUITES = ("lambda2", "a_theorems")


@dataclass
class RunResult:
    reports: list[ResidualReport] = field(default_factory=list)
    integrals: list[IntegralResult] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


def resolve_suites(names, allowed=PACK_SUITES) -> list[str]:
    """Expand ``"all"`` and validate a comma list or sequence of suite names."""
    if isinstance(names, str):
        names = [s.strip() for s in names.split(",") if s.strip()]
    names = list(names) or ["all"]
    if "all" in names:
        return list(allowed)
    unknown = [s for s in names if s not in allowed]
    if unknown:
        raise ValueError(f"unknown suite(s) {', '.join(unknown)}; choose from {', '.join(allowed)} or all")
    return [s for s in allowed if s in names]


def _stream(seed: int, suite: str, allowed) -> np.random.Generator:
    return np.random.default_rng([seed, allowed.index(suite)])


def run_suites(
    pack: StructurePack,
    suites="all",
    points: int = 20,
    seed: int = 0,
    tols: Tolerances = Tolerances(),
    ndir: int = 8,
    finest_grid: int = 64,
) -> RunResult:
    """Evaluate the selected suites on ``points`` seeded sample points of ``pack``."""
    names = resolve_suites(suites)
    pts = pack.chart.sample(points, np.random.default_rng(seed))
    out = RunResult()
    ev = None
    for name in names:
        rng = _stream(seed, name, PACK_SUITES)
        if name not in ("classify", "condition_star", "integral_formula") and ev is None:
            ev = Evaluation(pack, pts)
        if name == "hypotheses":
            out.reports += check_hypotheses(ev, tols)
        elif name == "derivS":
            out.reports.append(check_derivS(ev, rng, ndir, tols))
        elif name == "RS":
            out.reports.append(check_RS(ev, rng, ndir, tols))
        elif name == "lemma_alpha":
            out.reports += check_lemma_alpha(ev, rng, ndir, tols)
        elif name == "commutation":
            out.reports += check_commutation(ev, tols)
        elif name == "scalar_identity":
            out.reports.append(check_scalar_identity(ev, tols))
        elif name == "derivation_chain":
            out.reports += check_derivation_chain(ev, tols)
        elif name == "appendix_traces":
            out.reports += check_appendix_traces(ev, tols)
        elif name == "rank1":
            out.reports += check_rank1_suite(ev, rng, ndir, tols)
        elif name == "classify":
            c = classify_structure(pack, pts)
            if isinstance(c, ResidualReport):
                out.reports.append(c)
            else:
                out.reports.append(c.report())
                out.details["classification"] = c.to_dict()
        elif name == "condition_star":
            grid = None
            if pack.chart.fully_periodic:
                grid = QuadratureGrid.uniform(pack.chart, default_ladder(pack.n, min(finest_grid, 32))[-1])
            star = check_condition_star(pack, pts, grid, tols.first_order)
            out.reports += star["reports"]
            if star["hypotheses"]:
                out.details["condition_star"] = star["hypotheses"]
            if star["integral"] is not None:
                out.integrals.append(star["integral"])
        elif name == "integral_formula":
            ladder = default_ladder(pack.n, finest_grid) if pack.chart.fully_periodic else None
            res = check_integral_formula(pack, pts, ladder, seed=seed)
            out.reports += res["reports"]
            out.integrals += res["integrals"]
    return out


def run_algebra(
    suites="all",
    n_values=range(3, 9),
    samples: int = 1000,
    a_samples: int = 100_000,
    seed: int = 0,
) -> RunResult:
    """Pack-free suites: the two-vector product laws and the A+/A- sampling."""
    names = resolve_suites(suites, ALGEBRA_SUITES)
    out = RunResult()
    n_values = list(n_values)
    if "lambda2" in names:
        for n in n_values:
            for r in check_lambda2_lemmas(n, samples, seed + n):
                out.reports.append(
                    ResidualReport(f"{r.id}[n={n}]", r.points, r.max_abs, r.max_rel, r.tol, r.passed, r.status, r.note)
                )
    if "a_theorems" in names:
        rep = check_a_theorems([n for n in n_values if n >= 3], a_samples, seed)
        out.reports += rep.reports
        out.details["a_theorems"] = {"samples": rep.samples, "combos": rep.combos, "min": rep.min_value}
    return out
