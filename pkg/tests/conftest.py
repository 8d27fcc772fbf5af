import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from manifold_jko.manifold import get_manifold
from manifold_jko.measure import DiscreteMeasure

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

MANIFOLDS = ["circle", "sphere2", "torus2"]


def random_measure(rng, manifold, n, radius=None):
    """Random measure supported in a geodesic cap well inside the injectivity radius."""
    m = get_manifold(manifold)
    if radius is None:
        radius = {"circle": 1.2, "sphere2": 1.2, "torus2": 0.2}[m.id.value]
    center = m.random_point(rng).reshape(-1)
    atoms = m.random_cap(rng, n, center, radius)
    return DiscreteMeasure(m.id, atoms, rng.dirichlet(np.ones(n)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = {}


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL summary line per acceptance criterion."""
    state = {}

    def record(number, name, detail):
        state.update(number=number, name=name, detail=detail)

    yield record
    if state:
        rep = getattr(request.node, "rep_call", None)
        ok = rep is not None and rep.passed
        ACCEPTANCE_LINES[state["number"]] = (
            f"criterion {state['number']:>2} {'PASS' if ok else 'FAIL'}  {state['name']}: {state['detail']}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
