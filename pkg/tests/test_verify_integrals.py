import numpy as np
import pytest

from weyl_lab.geometry import GeometryError
from weyl_lab.structures import TripleProductSpec, build_triple_product
from weyl_lab.verify import QuadratureGrid, check_condition_star, check_integral_formula, default_ladder
from weyl_lab.verify.integrals import MAX_NODES, thread_count


@pytest.fixture(scope="module")
def t3():
    return build_triple_product(TripleProductSpec.random((1, 1, 1), 2))


def test_default_ladder_respects_node_cap():
    assert default_ladder(3, 64) == [8, 16, 32, 64]
    assert default_ladder(4, 64) == [8, 16, 32]
    assert all(c**5 <= MAX_NODES for c in default_ladder(5, 64))


def test_grid_validation(t3, cone3):
    with pytest.raises(GeometryError):
        QuadratureGrid.uniform(cone3.chart, 8)
    with pytest.raises(GeometryError):
        QuadratureGrid.uniform(t3.chart, 256)
    with pytest.raises(GeometryError):
        QuadratureGrid(t3.chart, (8, 0, 8))


def test_trapezoid_volume_of_perturbed_torus(t3):
    # sqrt(det g) is a trigonometric function; equispaced sums converge spectrally
    coarse = QuadratureGrid.uniform(t3.chart, 16)
    fine = QuadratureGrid.uniform(t3.chart, 32)
    one = {"one": lambda ev: np.ones(ev.m)}
    v16 = coarse.integrate(t3, one)["one"]
    v32 = fine.integrate(t3, one)["one"]
    assert abs(v16 - v32) <= 1e-9 * v32
    assert v32 > 0


def test_flat_torus_integrals_are_exact():
    pack = build_triple_product(TripleProductSpec((1, 1, 1)))
    grid = QuadratureGrid.uniform(pack.chart, 8)
    vol = grid.integrate(pack, {"one": lambda ev: np.ones(ev.m)})["one"]
    assert vol == pytest.approx((2 * np.pi) ** 3, rel=1e-14)
    # sin(x0)^2 integrates to half the volume
    sq = grid.integrate(pack, {"s": lambda ev: np.sin(ev.points[:, 0]) ** 2})["s"]
    assert sq == pytest.approx(0.5 * (2 * np.pi) ** 3, rel=1e-13)


def test_thread_count_does_not_change_sums(t3, monkeypatch):
    grid = QuadratureGrid(t3.chart, (32, 32, 40))
    f = {"th2": lambda ev: ev.norm2(ev.theta)}
    monkeypatch.setenv("WEYL_LAB_THREADS", "1")
    a = grid.integrate(t3, f)["th2"]
    monkeypatch.setenv("WEYL_LAB_THREADS", "3")
    assert thread_count() == 3
    b = QuadratureGrid(t3.chart, (32, 32, 40)).integrate(t3, f)["th2"]
    assert a == b
    monkeypatch.setenv("WEYL_LAB_THREADS", "many")
    assert thread_count() == 1


def test_condition_star_on_triple_product(t3):
    p = t3.chart.sample(10, np.random.default_rng(0))
    out = check_condition_star(t3, p, QuadratureGrid.uniform(t3.chart, 16))
    reps = {r.id: r for r in out["reports"]}
    assert reps["star.bridge"].passed and reps["star.sufficient"].passed
    assert out["hypotheses"]["iii"]["holds"]
    assert abs(out["integral"].extrapolated) <= 1e-10


def test_condition_star_without_grid(cone3):
    p = cone3.chart.sample(10, np.random.default_rng(0))
    out = check_condition_star(cone3, p)
    reps = {r.id: r for r in out["reports"]}
    assert reps["star.bridge"].passed
    assert reps["star.integral"].status == "not_applicable"
    assert not out["hypotheses"]["iii"]["holds"]


def test_integral_formula_ladder(t3):
    p = t3.chart.sample(10, np.random.default_rng(0))
    out = check_integral_formula(t3, p, [8, 16, 32])
    reps = {r.id: r for r in out["reports"]}
    assert all(r.passed for r in reps.values()), [r.line() for r in reps.values() if not r.passed]
    dfr = next(i for i in out["integrals"] if i.id == "integral.delta_df")
    # a divergence integrates to zero; the coarse grid shows aliasing that dies off
    values = [abs(v) for _, v in dfr.grids]
    assert values[0] > 1e-6 and values[-1] <= 1e-10
    assert dfr.to_dict()["grids"][0]["nodes"] == 8**3


def test_integral_formula_not_applicable_on_open_chart(cone3):
    out = check_integral_formula(cone3, cone3.chart.sample(4, np.random.default_rng(0)))
    assert all(r.status == "not_applicable" for r in out["reports"]) and not out["integrals"]
