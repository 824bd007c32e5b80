import numpy as np
import pytest

from weyl_lab.geometry import TensorField
from weyl_lab.structures import TripleProductSpec, build_triple_product, flip_P, flip_S
from weyl_lab.verify import (
    PACK_SUITES,
    Evaluation,
    Tolerances,
    check_appendix_traces,
    check_commutation,
    check_derivation_chain,
    check_derivS,
    check_hypotheses,
    check_lemma_alpha,
    check_RS,
    check_scalar_identity,
    compare,
    predicate,
    resolve_suites,
    run_suites,
)
from weyl_lab.verify.identities import noncttr_sides

LOCAL = [s for s in PACK_SUITES if s not in ("condition_star", "integral_formula")]


def _scaled_theta(pack, c):
    fn = pack.theta.fn
    return pack.with_(theta=TensorField(pack.chart, lambda xs: fn(xs) * c, "oneform", "theta"))


@pytest.fixture(scope="module")
def ev_triple(triple_121):
    return Evaluation(triple_121, triple_121.chart.sample(12, np.random.default_rng(0)))


@pytest.fixture(scope="module")
def ev_cone(cone3):
    return Evaluation(cone3, cone3.chart.sample(12, np.random.default_rng(0)))


def test_compare_uses_relative_then_absolute_scale():
    r = compare("x", [1.0, 2.0], [1.0, 2.0 + 1e-9], 1e-9, 2)
    assert r.passed and r.max_rel == pytest.approx(5e-10, rel=1e-6)
    tiny = compare("y", [1e-10], [3e-10], 1e-9, 1)
    assert tiny.max_rel == pytest.approx(2e-10) and tiny.passed
    assert not compare("z", [np.nan], [0.0], 1.0, 1).passed
    assert not predicate("p", [1e-3, -2e-3], 1e-3, 2).passed


def test_every_local_suite_passes_on_triple_product(triple_121):
    res = run_suites(triple_121, LOCAL, points=10, seed=4)
    failed = [r.line() for r in res.reports if not r.passed]
    assert not failed, failed
    assert {r.status for r in res.reports} <= {"pass", "not_applicable"}


@pytest.mark.parametrize("flip", [flip_S, flip_P])
def test_identities_hold_for_flipped_structures(triple_121, flip):
    res = run_suites(flip(triple_121), ["derivS", "RS", "lemma_alpha", "commutation", "scalar_identity"], points=6)
    assert res.passed, [r.line() for r in res.reports if not r.passed]


def test_hypothesis_checks_detect_a_wrong_lee_form(triple_121):
    bad = _scaled_theta(triple_121, 1.1)
    ev = Evaluation(bad, bad.chart.sample(6, np.random.default_rng(1)))
    reports = {r.id: r for r in check_hypotheses(ev)}
    assert not reports["hyp.DS"].passed
    assert not check_derivS(ev, np.random.default_rng(0)).passed


def test_scalar_identity_holds_on_cone_where_structures_do_not_commute(ev_cone):
    alpha = ev_cone.S @ ev_cone.P - ev_cone.P @ ev_cone.S
    assert np.abs(alpha).max() > 0.1
    assert check_scalar_identity(ev_cone).passed
    hyps = {r.id: r for r in check_hypotheses(ev_cone)}
    assert hyps["hyp.reference_flat"].passed and hyps["hyp.DS"].max_abs <= 1e-8


def test_noncttr_sign(ev_cone):
    lhs, rhs = noncttr_sides(ev_cone)
    assert compare("noncttr", lhs, rhs, 1e-7, ev_cone.m).passed
    # the opposite sign in front of |theta|^2 is off by 4 |theta|^2
    lhs, wrong = noncttr_sides(ev_cone, printed_sign=True)
    assert not compare("noncttr", lhs, wrong, 1e-7, ev_cone.m).passed
    np.testing.assert_allclose(wrong - rhs, 4 * ev_cone.norm2(ev_cone.theta), rtol=1e-10)


@pytest.mark.parametrize("check", [check_lemma_alpha, check_RS, check_derivS])
def test_directional_checkers_pass_on_cone(ev_cone, check):
    reports = check(ev_cone, np.random.default_rng(3))
    reports = reports if isinstance(reports, list) else [reports]
    assert all(r.passed for r in reports), [r.line() for r in reports if not r.passed]


@pytest.mark.parametrize("check", [check_commutation, check_derivation_chain, check_appendix_traces])
def test_trace_checkers_pass_on_cone(ev_cone, check):
    reports = check(ev_cone)
    assert all(r.passed for r in reports), [r.line() for r in reports if not r.passed]


def test_checkers_scale_with_tolerances(ev_triple):
    strict = Tolerances(first_order=0.0, curvature=0.0)
    reports = check_commutation(ev_triple, strict)
    assert all(r.tol == 0.0 for r in reports)


def test_packs_without_p_report_not_applicable(inverse_radius):
    pack = inverse_radius.with_(P=None)
    res = run_suites(pack, ["commutation", "scalar_identity", "classify"], points=4)
    assert all(r.status == "not_applicable" for r in res.reports)


def test_resolve_suites():
    assert resolve_suites("all") == list(PACK_SUITES)
    assert resolve_suites("RS, derivS") == ["derivS", "RS"]
    with pytest.raises(ValueError):
        resolve_suites("nonsense")


def test_swapped_structure_is_not_weyl_parallel():
    # a triple product whose S is taken from a different block split is not D-parallel
    pack = build_triple_product(TripleProductSpec.random((1, 2, 1), 3))
    wrong = pack.with_(S=pack.P)
    ev = Evaluation(wrong, wrong.chart.sample(6, np.random.default_rng(0)))
    assert not {r.id: r for r in check_hypotheses(ev)}["hyp.DS"].passed
