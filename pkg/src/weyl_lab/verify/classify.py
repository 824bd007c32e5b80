"""Tensorial triple-product test: commuting structures plus an eigenspace inclusion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import orthonormal_frame, to_frame
from ..structures import StructurePack
from .report import ResidualReport, not_applicable

__all__ = ["Classification", "classify_structure"]

SATISFIED = "satisfied"
VIOLATED = "violated"


@dataclass(frozen=True)
class Classification:
    """Outcome of the two-condition test.

    ``commute`` is ``max ||SP - PS||`` (Frobenius, orthonormal frame) and
    ``containment`` the smallest ``max ||(I - e'P)(I + eS)|| / 4`` over sign
    pairs, attained at ``signs = (e, e')``.
    """

    commute: float
    commute_holds: bool
    containment: float
    containment_holds: bool
    signs: tuple[int, int] | None
    verdict: str
    expected: str | None
    points: int
    tol: float

    def report(self) -> ResidualReport:
        note = f"criterion {self.verdict}; ||alpha||max={self.commute:.3e}, inclusion={self.containment:.3e}"
        if self.expected is None:
            return ResidualReport("classify", self.points, self.commute, self.commute, self.tol, True, "pass", note)
        ok = self.verdict == self.expected
        note += f"; expected {self.expected}"
        return ResidualReport(
            "classify", self.points, self.commute, self.commute, self.tol, ok, "pass" if ok else "fail", note
        )

    def to_dict(self) -> dict:
        return {
            "commute": self.commute,
            "commute_holds": self.commute_holds,
            "containment": self.containment,
            "containment_holds": self.containment_holds,
            "signs": list(self.signs) if self.signs else None,
            "verdict": self.verdict,
            "expected": self.expected,
        }


def classify_structure(pack: StructurePack, points, tol: float = 1e-8) -> Classification | ResidualReport:
    """Test ``SP = PS`` and ``E_e(S) in E_e'(P)`` at the sample points.

    Returns a not-applicable report for packs without ``P``.
    """
    if pack.P is None:
        return not_applicable("classify", tol, "pack has no parallel involution P")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    E = orthonormal_frame(pack.g.evaluate(points, 0).value)
    S = to_frame(pack.S.evaluate(points, 0).value, E)
    P = to_frame(pack.P.evaluate(points, 0).value, E)
    I = np.eye(pack.n)
    commute = float(np.max(np.linalg.norm(S @ P - P @ S, axis=(-2, -1))))
    best, signs = np.inf, None
    for e in (1, -1):
        for e2 in (1, -1):
            r = float(np.max(np.linalg.norm((I - e2 * P) @ (I + e * S), axis=(-2, -1)))) / 4
            if r < best:
                best, signs = r, (e, e2)
    c_ok, i_ok = commute <= tol, best <= tol
    return Classification(
        commute,
        c_ok,
        best,
        i_ok,
        signs if i_ok else None,
        SATISFIED if c_ok and i_ok else VIOLATED,
        pack.expected,
        points.shape[0],
        tol,
    )
