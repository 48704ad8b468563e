import math

import numpy as np
import pytest
from shapely.geometry import LineString, Point, Polygon

from nodalmp.errors import StructuralError
from nodalmp.mesh_domain import build_mesh, build_symmetry, disc_symmetry, trivial_symmetry
from nodalmp.pohozaev import (
    PolygonDomain,
    identity_terms,
    nonexistence_check,
    refinement_order,
    star_shaped_check,
)
from nodalmp.problem_model import CoefficientField, ProblemSpec
from nodalmp.solver import VariationalProblem

from conftest import solve_from


def _solve(spec, mesh, sym, direction):
    prob = VariationalProblem(spec, mesh, sym)
    return solve_from(prob, direction).field


def test_identity_residual_interval_variable_coefficients(variable_spec):
    res = []
    for N in (65, 129):
        mesh = build_mesh("interval", N)
        x = mesh.nodes[:, 0]
        u = _solve(variable_spec, mesh, build_symmetry(mesh), np.sin(np.pi * x))
        rep = identity_terms(u, variable_spec, mesh)
        res.append(rep.residual)
        # two independent evaluations of int <x, grad_x H>
        assert rep.term_xgradH == pytest.approx(rep.xgradH_symbolic, rel=1e-8)
        # the expanded display (times p) equals p times the raw identity
        p = variable_spec.p
        raw = p * (rep.term_nH + rep.term_xgradH + rep.term_ug)
        assert rep.expanded_lhs == pytest.approx(raw, rel=1e-10)
        assert rep.expanded_literal_lhs != pytest.approx(raw, rel=1e-3)
        assert rep.dimension == 1
    assert refinement_order(*res) >= 1.0


def test_constant_coefficients_give_zero_xgradH():
    spec = ProblemSpec(n=3, p=2.0, q=1.5, epsilon=1.0, a_field=CoefficientField.constant(0.5),
                       h_field=CoefficientField.constant(0.2))
    mesh = build_mesh("radial-ball", 33, ball_dim=3)
    u = _solve(spec, mesh, trivial_symmetry(mesh), np.cos(np.pi * mesh.nodes[:, 0] / 2))
    rep = identity_terms(u, spec, mesh)
    assert rep.term_xgradH == 0.0 and rep.xgradH_symbolic == 0.0
    assert rep.dimension == 3 and rep.star_shaped
    assert rep.relative_residual < 0.05


def test_disc_residual_decreases():
    spec = ProblemSpec(n=4, p=2.0, q=1.5, epsilon=1.0)
    res = []
    for R in (8, 16):
        mesh = build_mesh("disc", R)
        x = mesh.nodes
        u = _solve(spec, mesh, disc_symmetry(mesh, group="mirror"), x[:, 0] * (1 - (x**2).sum(1)))
        res.append(identity_terms(u, spec, mesh).residual)
    assert refinement_order(*res) >= 1.0


def test_torus_rejected():
    mesh = build_mesh("torus", 6)
    with pytest.raises(StructuralError):
        identity_terms(np.zeros(mesh.n_nodes), ProblemSpec(n=3, p=2.0, q=1.5), mesh)


def test_tabulated_fields_give_partial_report():
    mesh = build_mesh("interval", 33)
    vals = 1.0 + mesh.nodes[:, 0] ** 2
    spec = ProblemSpec(n=3, p=2.0, q=1.5, epsilon=1.0,
                       a_field=CoefficientField("tabulated", {"values": vals.tolist()}))
    rep = identity_terms(np.sin(np.pi * mesh.nodes[:, 0]), spec, mesh)
    assert rep.partial and math.isnan(rep.xgradH_symbolic)
    crit = nonexistence_check(spec, mesh)
    assert crit["partial"] and crit["criterion_met"] is None and crit["conditions"]["dr_a>=0"] is None


def test_nonexistence_criterion_examples():
    ball = build_mesh("radial-ball", 33, ball_dim=3)
    spec = ProblemSpec(n=3, p=2.0, q=1.5, a_field=CoefficientField.constant(1.0))
    crit = nonexistence_check(spec, ball)
    assert crit["criterion_met"] and crit["strict"]["a>=0"] and crit["applies"]
    # a = 0, f decreasing: d_r f < 0 is the strict one
    spec = ProblemSpec(n=3, p=2.0, q=1.5,
                       f_field=CoefficientField("radial_rational", {"num": [1.0], "den": [1.0, 0.0, 1.0]}))
    crit = nonexistence_check(spec, ball)
    assert crit["criterion_met"] and crit["strict"]["dr_f<=0"]
    # all equalities: nothing strict
    crit = nonexistence_check(ProblemSpec(n=3, p=2.0, q=1.5), ball)
    assert not crit["any_strict"] and not crit["criterion_met"]
    # h > 0 breaks the sign condition
    spec = ProblemSpec(n=3, p=2.0, q=1.5, h_field=CoefficientField.constant(0.1))
    assert nonexistence_check(spec, ball)["conditions"]["h<=0"] is False
    # subcritical exponent: the identity does not forbid solutions
    spec = ProblemSpec(n=3, p=2.0, q=1.5, epsilon=0.5, a_field=CoefficientField.constant(1.0))
    assert nonexistence_check(spec, ball)["criterion_met"] is False


def _shapely_star(poly):
    # strict star-shapedness w.r.t. the origin: origin inside, and no edge line
    # passes through or behind it (every segment origin -> boundary point in the polygon)
    shp = Polygon(poly.rings[0], holes=poly.rings[1:])
    if not shp.contains(Point(0, 0)):
        return False
    pts, _ = poly.boundary_points(3)
    inner = shp.buffer(1e-9)
    return all(inner.contains(LineString([(0, 0), tuple(q)])) for q in pts)


@pytest.mark.parametrize("poly,expected", [
    (PolygonDomain.regular(7), True),
    (PolygonDomain.annulus(0.5, 1.0), False),
    (PolygonDomain.star(5, 0.45, 1.0, center=(0.1, -0.05)), True),
    (PolygonDomain.star(5, 0.45, 1.0, center=(0.6, 0.0)), False),
    (PolygonDomain.regular(6, center=(2.0, 0.0)), False),
])
def test_star_shaped_against_shapely(poly, expected):
    assert star_shaped_check(poly) is expected
    assert _shapely_star(poly) is expected


def test_mesh_star_shapedness():
    assert star_shaped_check(build_mesh("disc", 6))
    assert star_shaped_check(build_mesh("interval", 9))
