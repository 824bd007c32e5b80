import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from weyl_lab.geometry import Chart, MetricField
from weyl_lab.jets import stack
from weyl_lab.structures import (
    RescaledProductSpec,
    TripleProductSpec,
    build_flat_cone,
    build_rescaled_product,
    build_triple_product,
)

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def sphere_metric():
    """Round unit 2-sphere ``dx0^2 + sin^2(x0) dx1^2`` away from the poles."""
    chart = Chart(2, ((0.3, np.pi - 0.3), (0.0, 2 * np.pi)))

    def fn(xs):
        s = xs[0].sin()
        zero = xs[0] * 0.0
        row0 = stack([zero + 1.0, zero], axis=-1)
        row1 = stack([zero, s * s], axis=-1)
        return stack([row0, row1], axis=-2)

    return MetricField(chart, fn)


def round_sphere3():
    """Unit 3-sphere in hyperspherical coordinates, sectional curvature 1."""
    chart = Chart(3, ((0.3, np.pi - 0.3), (0.3, np.pi - 0.3), (0.0, 2 * np.pi)))

    def fn(xs):
        s0 = xs[0].sin()
        s1 = xs[1].sin()
        zero = xs[0] * 0.0
        d = [zero + 1.0, s0 * s0, s0 * s0 * s1 * s1]
        rows = [stack([d[i] if i == j else zero for j in range(3)], axis=-1) for i in range(3)]
        return stack(rows, axis=-2)

    return MetricField(chart, fn)


@pytest.fixture(scope="session")
def sphere():
    return sphere_metric()


@pytest.fixture(scope="session")
def sphere3():
    return round_sphere3()


@pytest.fixture(scope="session")
def triple_121():
    return build_triple_product(TripleProductSpec.random((1, 2, 1), 7))


@pytest.fixture(scope="session")
def cone3():
    return build_flat_cone(3, 1, seed=2)


@pytest.fixture(scope="session")
def cone4():
    return build_flat_cone(4, 2, seed=5)


@pytest.fixture(scope="session")
def inverse_radius():
    return build_rescaled_product(RescaledProductSpec((1, 2), preset="inverse_radius"))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_line(request):
    """Record one PASS/FAIL line for the terminal summary and echo it."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number: int, ok: bool, text: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {text}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
