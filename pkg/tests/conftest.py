import numpy as np
import pytest

from safeshield import learner, simgen
from safeshield.demonstrations import DemoCorpus, DemoPoint, Demonstration


@pytest.fixture(scope="session")
def scenario():
    return simgen.Scenario()


@pytest.fixture(scope="session")
def reference_corpus(scenario):
    """Default mixed corpus reproducing the reference data-acquisition setup."""
    return simgen.generate(scenario, simgen.GenSpec(seed=7))


@pytest.fixture(scope="session")
def reference_problem(reference_corpus):
    return learner.assemble(reference_corpus, learner.LearnConfig())


@pytest.fixture(scope="session")
def reference_result(reference_problem):
    result = learner.solve(reference_problem)
    assert result.solver_status == "optimal"
    return result


@pytest.fixture(scope="session")
def prefix_corpus(scenario):
    return simgen.generate(scenario, simgen.prefix_overlap_spec(seed=7))


@pytest.fixture(scope="session")
def prefix_problem(prefix_corpus):
    return learner.assemble(prefix_corpus, learner.LearnConfig())


@pytest.fixture(scope="session")
def prefix_result(prefix_problem):
    result = learner.solve(prefix_problem)
    assert result.solver_status == "optimal"
    return result


def make_line_demo(demo_id, reward, x0, x1, n_points, u=None):
    """Straight-line demo with constant control; handy for small fixtures."""
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    pts = []
    for t in range(n_points):
        frac = t / max(1, n_points - 1)
        x = x0 + frac * (x1 - x0)
        uu = np.asarray(u, dtype=float) if u is not None else (x1 - x0) / max(1, n_points - 1) / 0.02
        pts.append(DemoPoint(x=x, u=uu, t_index=t))
    return Demonstration(id=demo_id, points=pts, reward=reward)


@pytest.fixture()
def tiny_corpus():
    """Two safe lines above/below, one semisafe, one failure into the middle."""
    demos = [
        make_line_demo("safe-a", 1.5, (0.1, 0.8), (0.9, 0.8), 12),
        make_line_demo("safe-b", 1.4, (0.1, 0.05), (0.9, 0.05), 12),
        make_line_demo("semi-a", 0.8, (0.1, 0.6), (0.9, 0.6), 12),
        make_line_demo("fail-a", -0.5, (0.1, 0.4), (0.5, 0.4), 10),
    ]
    return DemoCorpus(demos=demos, dynamics="integrator2d")
