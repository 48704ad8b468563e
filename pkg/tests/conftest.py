import numpy as np
import pytest

from nodalmp.mesh_domain import build_mesh, build_symmetry, trivial_symmetry
from nodalmp.problem_model import CoefficientField, ProblemSpec
from nodalmp.solver import VariationalProblem, far_point, mountain_pass


@pytest.fixture(scope="session")
def interval_problem():
    """Odd (tau-antisymmetric) problem on [-1, 1], n=3, p=2, exponent 4."""
    spec = ProblemSpec(n=3, p=2.0, q=1.5, epsilon=2.0)
    mesh = build_mesh("interval", 129)
    return VariationalProblem(spec, mesh, build_symmetry(mesh))


@pytest.fixture(scope="session")
def radial_problem():
    spec = ProblemSpec(n=3, p=2.0, q=1.5, epsilon=1.0)
    mesh = build_mesh("radial-ball", 65, ball_dim=3)
    return VariationalProblem(spec, mesh, trivial_symmetry(mesh))


def solve_from(problem, direction):
    return mountain_pass(problem, far_point(problem, direction))


@pytest.fixture(scope="session")
def variable_spec():
    return ProblemSpec(
        n=3, p=2.0, q=1.5, epsilon=1.0,
        a_field=CoefficientField("radial_poly", {"coeffs": [1.0, 0.0, 1.0]}),
        f_field=CoefficientField("radial_rational", {"num": [1.0], "den": [1.0, 0.0, 1.0]}),
        h_field=CoefficientField("radial_poly", {"coeffs": [0.5, 0.0, -0.25]}),
    )


def rng(seed=0):
    return np.random.default_rng(seed)


_ACCEPTANCE = pytest.StashKey()


@pytest.fixture
def acceptance(request):
    """Record one acceptance line ``(criterion, passed, detail)``."""
    log = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(key, passed, detail):
        log[key] = (bool(passed), detail)
        print(f"{key}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(log, key=lambda k: int(k[1:])):
        passed, detail = log[key]
        terminalreporter.write_line(f"{key}: {'PASS' if passed else 'FAIL'}  {detail}")
