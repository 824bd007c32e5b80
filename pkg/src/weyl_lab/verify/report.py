"""Residual reports shared by every identity checker."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..jets import values

__all__ = [
    "ABS_FLOOR",
    "TOL_CURVATURE",
    "TOL_FIRST_ORDER",
    "ResidualReport",
    "Tolerances",
    "compare",
    "not_applicable",
    "predicate",
]

TOL_FIRST_ORDER = 1e-10
TOL_CURVATURE = 1e-7
# below this magnitude of both sides the absolute residual is used
ABS_FLOOR = 1e-8


@dataclass(frozen=True)
class Tolerances:
    first_order: float = TOL_FIRST_ORDER
    curvature: float = TOL_CURVATURE

    def get(self, kind: str) -> float:
        return self.curvature if kind == "curvature" else self.first_order


@dataclass(frozen=True)
class ResidualReport:
    """Outcome of one identity check over a set of sample points.

    ``status`` is ``"pass"``, ``"fail"`` or ``"not_applicable"``.
    """

    id: str
    points: int
    max_abs: float
    max_rel: float
    tol: float
    passed: bool
    status: str
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        if not d["note"]:
            d.pop("note")
        return d

    def line(self) -> str:
        mark = {"pass": "PASS", "fail": "FAIL", "not_applicable": "N/A "}[self.status]
        return (
            f"{mark} {self.id:<28} points={self.points:<5d} max_abs={self.max_abs:.3e} "
            f"max_rel={self.max_rel:.3e} tol={self.tol:.1e}"
        )


def compare(id: str, lhs, rhs, tol: float, points: int, note: str = "") -> ResidualReport:
    """Compare two sides of an identity, elementwise over all samples.

    The relative residual divides the largest absolute difference by the
    largest magnitude found on either side; when both sides stay below
    ``ABS_FLOOR`` the absolute residual is used instead.
    """
    lhs = np.asarray(values(lhs), dtype=float)
    rhs = np.asarray(values(rhs), dtype=float)
    lhs, rhs = np.broadcast_arrays(lhs, rhs)
    if not (np.all(np.isfinite(lhs)) and np.all(np.isfinite(rhs))):
        return ResidualReport(id, points, float("inf"), float("inf"), tol, False, "fail", "non-finite values")
    diff = float(np.max(np.abs(lhs - rhs), initial=0.0))
    scale = max(float(np.max(np.abs(lhs), initial=0.0)), float(np.max(np.abs(rhs), initial=0.0)))
    rel = diff if scale < ABS_FLOOR else diff / scale
    ok = rel <= tol
    return ResidualReport(id, points, diff, rel, tol, ok, "pass" if ok else "fail", note)


def predicate(id: str, residual, tol: float, points: int, note: str = "") -> ResidualReport:
    """A residual that should vanish, judged in absolute terms (e.g. ``theta(xi) = 0``)."""
    r = float(np.max(np.abs(values(residual)), initial=0.0))
    ok = bool(np.isfinite(r) and r <= tol)
    return ResidualReport(id, points, r, r, tol, ok, "pass" if ok else "fail", note)


def not_applicable(id: str, tol: float, note: str) -> ResidualReport:
    return ResidualReport(id, 0, 0.0, 0.0, tol, True, "not_applicable", note)
