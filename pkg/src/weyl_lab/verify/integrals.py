"""Trapezoid quadrature on fully periodic charts and the integral-formula checks."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..connection import codifferential
from ..geometry import Chart, GeometryError
from ..structures import StructurePack, a_plus_minus, random_trig_function, trig_function
from .context import Evaluation
from .identities import beta_j
from .report import ResidualReport, compare, not_applicable, predicate

__all__ = [
    "MAX_NODES",
    "IntegralResult",
    "QuadratureGrid",
    "check_condition_star",
    "check_integral_formula",
    "default_ladder",
    "thread_count",
]

MAX_NODES = 10_000_000
CHUNK = 32_768
# integrals below this magnitude count as converged
FLOOR = 1e-10


def thread_count() -> int:
    """Worker count from ``WEYL_LAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("WEYL_LAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class QuadratureGrid:
    """Uniform tensor grid on a torus; the trapezoid rule is an equal-weight sum there."""

    chart: Chart
    counts: tuple[int, ...]
    _vol: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.chart.fully_periodic:
            raise GeometryError("quadrature needs a fully periodic chart")
        counts = tuple(int(c) for c in np.broadcast_to(self.counts, (self.chart.dim,)))
        if any(c < 1 for c in counts):
            raise GeometryError("node counts must be positive")
        if int(np.prod(counts)) > MAX_NODES:
            raise GeometryError(f"grid of {int(np.prod(counts))} nodes exceeds the {MAX_NODES} node cap")
        self.counts = counts

    @classmethod
    def uniform(cls, chart: Chart, per_axis: int) -> "QuadratureGrid":
        return cls(chart, (per_axis,) * chart.dim)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def weight(self) -> float:
        """Coordinate volume of one cell."""
        return float(np.prod(self.chart.lengths) / self.size)

    def axes(self) -> list[np.ndarray]:
        return [a + (b - a) * np.arange(c) / c for (a, b), c in zip(self.chart.box, self.counts)]

    def nodes(self, start: int, stop: int) -> np.ndarray:
        idx = np.unravel_index(np.arange(start, stop), self.counts)
        return np.stack([ax[i] for ax, i in zip(self.axes(), idx)], axis=-1)

    def chunks(self, size: int = CHUNK):
        for start in range(0, self.size, size):
            yield start, min(start + size, self.size)

    def volume_density(self, pack: StructurePack) -> np.ndarray:
        """``sqrt(det g)`` at every node, cached per metric field."""
        key = id(pack.g)
        if key not in self._vol:
            parts = [
                np.sqrt(np.linalg.det(pack.g.evaluate(self.nodes(a, b), 0).value)) for a, b in self.chunks()
            ]
            self._vol[key] = np.concatenate(parts)
        return self._vol[key]

    def integrate(
        self, pack: StructurePack, integrands: dict[str, Callable[[Evaluation], np.ndarray]], order: int = 1
    ) -> dict[str, float]:
        """Integrate scalar functions of an :class:`Evaluation` against ``vol^g``.

        Chunks are independent; partial sums are reduced in chunk order so
        the result does not depend on the thread count.
        """
        vol = self.volume_density(pack)

        def one(bounds):
            a, b = bounds
            ev = Evaluation(pack, self.nodes(a, b), order, full_theta=True)
            w = vol[a:b]
            return {k: float(np.sum(f(ev) * w)) for k, f in integrands.items()}

        bounds = list(self.chunks())
        workers = min(thread_count(), len(bounds))
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                parts = list(pool.map(one, bounds))
        else:
            parts = [one(b) for b in bounds]
        return {k: sum(p[k] for p in parts) * self.weight for k in integrands}


@dataclass
class IntegralResult:
    id: str
    grids: list[tuple[int, float]]
    extrapolated: float
    report: ResidualReport

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "grids": [{"nodes": n, "value": v} for n, v in self.grids],
            "extrapolated": self.extrapolated,
        }


def default_ladder(dim: int, finest: int = 64) -> list[int]:
    """Per-axis counts 8, 16, ... capped by the node limit."""
    out, c = [], 8
    while c <= finest and c**dim <= MAX_NODES:
        out.append(c)
        c *= 2
    return out


# -- pointwise integrands ------------------------------------------------------


def _star_integrand(ev: Evaluation) -> np.ndarray:
    th = ev.theta
    return ev.ip(th, ev.apply(ev.P, th) - ev.apply(ev.S @ ev.P @ ev.S, th))


def _a_integrand(ev: Evaluation) -> np.ndarray:
    """``A+ ||theta+||^2 + A- ||theta-||^2``."""
    Ap, Am = a_plus_minus(ev.S, ev.P)
    th = ev.theta
    Sth = ev.apply(ev.S, th)
    tp, tm = 0.5 * (th + Sth), 0.5 * (th - Sth)
    return Ap * ev.norm2(tp) + Am * ev.norm2(tm)


def _traced_integrand(ev: Evaluation) -> np.ndarray:
    """The same integrand before splitting theta into its S-eigenparts."""
    n = ev.n
    S, P = ev.S, ev.P
    tr = ev.tr
    trS, trP, trSP = tr(S), tr(P), tr(S @ P)
    base = n * n + trS**2 - trP**2 - trSP**2 + tr(S @ P @ S @ P) - n
    th = ev.theta
    return ev.norm2(th) * base - 2 * ev.ip(th, ev.apply(S, th)) * (n * trS - trP * trSP)


def _delta_beta(ev: Evaluation) -> np.ndarray:
    return ev.codiff_vector(beta_j(ev))


# -- condition (*) ----------------------------------------------------------------


def check_condition_star(
    pack: StructurePack,
    points,
    grid: QuadratureGrid | None = None,
    tol: float = 1e-10,
) -> dict:
    """Pointwise bridge identity, the six sufficient hypotheses, and the (*) integral.

    Returns ``{"reports": [...], "hypotheses": {...}, "integral": IntegralResult | None}``.
    Hypotheses are facts about the pack, not pass/fail checks; the report
    ``star.sufficient`` fails only if some hypothesis holds while the
    integral does not vanish.
    """
    if pack.P is None:
        na = not_applicable("star.bridge", tol, "pack has no parallel involution P")
        return {"reports": [na], "hypotheses": {}, "integral": None}
    ev = Evaluation(pack, points, order=1, full_theta=True)
    th = ev.theta
    Sth = ev.apply(ev.S, th)
    alpha = ev.S @ ev.P - ev.P @ ev.S
    reports = [compare("star.bridge", _star_integrand(ev), ev.ip(Sth, ev.apply(alpha, th)), tol, ev.m)]

    scale = max(float(np.max(np.abs(th))), 1e-300)
    d_th, d_Sth = ev.codiff_vector(ev.theta_j), ev.codiff_vector(ev.act(ev.S_j, ev.theta_j))
    dscale = max(float(np.max(np.abs(d_th))), float(np.max(np.abs(d_Sth))), 1e-300)
    trSP_j = ev.mat(ev.S_j, ev.P_j).trace()
    residuals = {
        "i": min(float(np.max(np.abs(Sth - e * th))) for e in (1, -1)) / scale,
        "ii": min(float(np.max(np.abs(d_Sth - e * d_th))) for e in (1, -1)) / dscale,
        "iii": float(np.max(np.abs(alpha))),
        "iv": float(np.max(np.abs(trSP_j.gradient()))),
        "v": float(np.max(np.abs(d_Sth))),
        "vi": float(np.max(np.abs(ev.tr(ev.P)))),
    }
    if float(np.max(np.abs(th))) == 0.0:
        residuals["i"] = residuals["ii"] = 0.0
    hyps = {k: {"residual": v, "holds": v <= 1e-9} for k, v in residuals.items()}

    integral = None
    if grid is None or not pack.chart.fully_periodic:
        reports.append(not_applicable("star.integral", tol, "needs a fully periodic chart"))
    else:
        trP = float(np.trace(ev.P[0]))
        vals = grid.integrate(pack, {"star": _star_integrand, "abs": lambda e: np.abs(_star_integrand(e))})
        value = trP * vals["star"]
        integral = IntegralResult(
            "star.integral", [(grid.size, value)], value, predicate("star.integral", value, tol, grid.size)
        )
        holds = any(h["holds"] for h in hyps.values())
        ok = (not holds) or abs(value) <= tol * max(1.0, abs(trP) * vals["abs"])
        note = "hypotheses holding: " + (",".join(k for k, h in hyps.items() if h["holds"]) or "none")
        reports.append(
            ResidualReport("star.sufficient", grid.size, abs(value), abs(value), tol, ok, "pass" if ok else "fail", note)
        )
    return {"reports": reports, "hypotheses": hyps, "integral": integral}


# -- integral formula -----------------------------------------------------------------


def _ladder_result(id: str, values: list[tuple[int, float]], tol: float, per_axis: list[int]) -> IntegralResult:
    """Convergence verdict: each halving shrinks |value| 4x or lands below the floor."""
    mags = [abs(v) for _, v in values]
    decay = all(b <= a / 4 or b <= FLOOR for a, b in zip(mags, mags[1:]))
    last = values[-1][1]
    extrap = (4 * values[-1][1] - values[-2][1]) / 3 if len(values) > 1 else last
    ok = decay and abs(last) <= tol
    rate = [f"{c}:{v:.2e}" for c, (_, v) in zip(per_axis, values)]
    rep = ResidualReport(
        id, values[-1][0], abs(last), abs(last), tol, ok, "pass" if ok else "fail", "ladder " + " ".join(rate)
    )
    return IntegralResult(id, values, float(extrap), rep)


def check_integral_formula(
    pack: StructurePack,
    points,
    ladder: list[int] | None = None,
    tol: float = 1e-6,
    pointwise_tol: float = 1e-10,
    seed: int = 0,
) -> dict:
    """Pointwise and integrated forms of the A+/A- formula plus Stokes sanity checks.

    Returns ``{"reports": [...], "integrals": [IntegralResult, ...]}``.
    """
    ids = ("integral.pointwise", "integral.A", "integral.traced", "integral.delta_beta", "integral.delta_df")
    if not pack.chart.fully_periodic:
        return {"reports": [not_applicable(i, tol, "needs a fully periodic chart") for i in ids], "integrals": []}
    if pack.P is None:
        return {"reports": [not_applicable(i, tol, "pack has no parallel involution P") for i in ids], "integrals": []}
    ladder = ladder or default_ladder(pack.n)
    ev = Evaluation(pack, points, order=1, full_theta=True)
    reports = [predicate("integral.pointwise", _a_integrand(ev), pointwise_tol, ev.m)]

    rng = np.random.default_rng(seed)
    f_terms = random_trig_function(pack.n, rng)

    def delta_df(e: Evaluation) -> np.ndarray:
        f = trig_function(f_terms, pack.chart.coordinates(e.points, e.g_j.order + 1))
        return codifferential(f.grad(), 1, e.conn).value

    rows = {k: [] for k in ("A", "traced", "delta_beta", "delta_df")}
    for c in ladder:
        grid = QuadratureGrid.uniform(pack.chart, c)
        vals = grid.integrate(
            pack,
            {"A": _a_integrand, "traced": _traced_integrand, "delta_beta": _delta_beta, "delta_df": delta_df},
        )
        for k in rows:
            rows[k].append((grid.size, vals[k]))
    integrals = [_ladder_result(f"integral.{k}", rows[k], tol, ladder) for k in rows]
    reports += [r.report for r in integrals]
    return {"reports": reports, "integrals": integrals}
