import math

import numpy as np
import pytest

from nodalmp.errors import ConvergenceError, MountainGeometryError
from nodalmp.mesh_domain import build_mesh, build_symmetry, symmetry_residuals, trivial_symmetry
from nodalmp.problem_model import CoefficientField, ProblemSpec
from nodalmp.solver import (
    SolverControls,
    VariationalProblem,
    concentration_check,
    continuation,
    energy,
    far_point,
    mountain_pass,
    nodal_rebuild,
    random_direction,
    rim_estimate,
    sign_structure,
    weak_gradient,
)

from conftest import solve_from


def _fd_check(problem, seed, count=3):
    rng = np.random.default_rng(seed)
    free = np.flatnonzero(~problem.mesh.boundary)
    for _ in range(count):
        u = rng.standard_normal(problem.mesh.n_nodes)
        u[problem.mesh.boundary] = 0.0
        g = weak_gradient(u, problem)
        idx = rng.choice(free, size=5, replace=False)
        for i in idx:
            h = 1e-3 * max(1.0, abs(u[i]))
            e = np.zeros_like(u)
            e[i] = h
            J = [energy(u + k * e, problem) for k in (-2, -1, 1, 2)]
            fd = (J[0] - 8 * J[1] + 8 * J[2] - J[3]) / (12 * h)
            assert g[i] == pytest.approx(fd, rel=1e-7, abs=1e-9 * np.abs(g).max())


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_weak_gradient_interval_and_radial(p, variable_spec):
    q = 0.5 * (p - 1 + 4 * p / (4 - p) - 1)
    spec = ProblemSpec(n=4, p=p, q=q, a_field=variable_spec.a_field, f_field=variable_spec.f_field,
                       h_field=variable_spec.h_field)
    for mesh in (build_mesh("interval", 33), build_mesh("radial-ball", 33, ball_dim=4)):
        _fd_check(VariationalProblem(spec, mesh, trivial_symmetry(mesh)), seed=int(p * 10))


def test_energy_parts(interval_problem):
    u = np.cos(np.pi * interval_problem.mesh.nodes[:, 0] / 2)
    G, A, F, H = interval_problem.parts(u)
    assert G == pytest.approx(np.pi**2 / 4, rel=1e-3)  # int_{-1}^{1} |u'|^2 = pi^2/4
    assert F == pytest.approx(0.75, rel=1e-3)  # int cos^4 = 3/4, up to P1 interpolation
    assert A == 0.0 and H == 0.0


def test_mountain_pass_interval(interval_problem):
    x = interval_problem.mesh.nodes[:, 0]
    res = solve_from(interval_problem, np.sin(np.pi * x))
    assert res.converged and res.grad_norm < 1e-7
    assert symmetry_residuals(res.field, interval_problem.symmetry) == (0.0, 0.0)
    again = solve_from(interval_problem, np.sin(np.pi * x))
    assert again.level == res.level
    np.testing.assert_array_equal(again.field, res.field)
    # level of a critical point on its ray: J(u) = (1/p - 1/r) int |u'|^p for a=h=0
    G = interval_problem.parts(res.field)[0]
    assert res.level == pytest.approx((0.5 - 1 / interval_problem.r) * G, rel=1e-9)


def test_rim_below_level(interval_problem):
    x = interval_problem.mesh.nodes[:, 0]
    rim = rim_estimate(interval_problem, direction=np.sin(np.pi * x))
    res = solve_from(interval_problem, np.sin(np.pi * x))
    assert 0.0 < rim["rho"] < res.level


def test_rim_fails_without_coercivity():
    mesh = build_mesh("interval", 33)
    spec = ProblemSpec(n=3, p=2.0, q=1.5, a_field=CoefficientField.constant(-50.0))
    prob = VariationalProblem(spec, mesh, build_symmetry(mesh))
    with pytest.raises(MountainGeometryError):
        rim_estimate(prob, coercivity=-1.0)


def test_convergence_error_carries_history(interval_problem):
    x = interval_problem.mesh.nodes[:, 0]
    start = far_point(interval_problem, np.sin(np.pi * x))
    with pytest.raises(ConvergenceError) as err:
        mountain_pass(interval_problem, start, SolverControls(max_iter=2, max_path_iter=2))
    assert err.value.history and err.value.result is not None
    res = mountain_pass(interval_problem, start, SolverControls(max_iter=2, max_path_iter=2),
                        raise_on_failure=False)
    assert not res.converged


def test_far_point_errors(interval_problem):
    with pytest.raises(ValueError):
        far_point(interval_problem, np.zeros(interval_problem.mesh.n_nodes))
    with pytest.raises(MountainGeometryError):
        mountain_pass(interval_problem, 1e-3 * np.sin(np.pi * interval_problem.mesh.nodes[:, 0]))


def test_nodal_rebuild_sign_structure(interval_problem):
    v = random_direction(interval_problem, seed=3)
    res = solve_from(interval_problem, v)
    out = nodal_rebuild(res, interval_problem)
    sig = sign_structure(out.field, interval_problem.symmetry, interval_problem.mesh)
    assert sig["sign_ok"] and sig["zero_set_ok"]
    assert sig["zero_set"] == [0, 64, 128]


def test_continuation_schedule_and_envelope(interval_problem):
    x = interval_problem.mesh.nodes[:, 0]
    with pytest.raises(ValueError):
        continuation(interval_problem, [0.1, 0.5])
    cont = continuation(interval_problem, [2.0, 1.5, 1.0], direction=np.sin(np.pi * x))
    assert all(r.converged for r in cont.results)
    assert cont.envelope["ok"]
    assert cont.levels[0] > cont.levels[-1] > 0.0


def test_concentration_flags_a_sharp_bubble():
    spec = ProblemSpec(n=3, p=2.0, q=1.5)
    mesh = build_mesh("radial-ball", 401, ball_dim=3, grading=3.0)
    prob = VariationalProblem(spec, mesh, trivial_symmetry(mesh))
    r = mesh.nodes[:, 0]
    lam = 1e-3
    bubble = (3 * lam**2) ** 0.25 / np.sqrt(lam**2 + r**2)
    bubble -= bubble[-1]
    rep = concentration_check([bubble, np.cos(np.pi * r / 2)], prob)
    assert rep[0]["concentrated"] and 0 in rep[0]["radii"][-1]["flagged"]
    assert not rep[1]["concentrated"]
    assert all(d["max_test"] <= 1.0 + 1e-6 for d in rep[0]["radii"])
