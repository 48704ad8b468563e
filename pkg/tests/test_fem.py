import math

import numpy as np
import pytest

from nodalmp import fem
from nodalmp.mesh_domain import build_mesh, disc_symmetry, project_H


def test_quadrature_integrates_polynomials_exactly_on_triangles():
    mesh = build_mesh("disc", 5)
    rule = fem.quadrature_rule(mesh)
    pts = rule.points.reshape(rule.weights.shape + (2,))
    # degree-4 monomials are integrated exactly element by element
    for f in (lambda x, y: x**4, lambda x, y: x**2 * y**2, lambda x, y: x * y**3 + 1):
        quad = np.sum(rule.weights * f(pts[..., 0], pts[..., 1]), axis=1)
        for e in (0, 17, len(mesh.elements) - 1):
            c = mesh.elem_coords[e]
            # reference: a fine subdivision via a high-order tensor rule on the triangle
            g, w = np.polynomial.legendre.leggauss(12)
            s = 0.5 * (g + 1)
            ws = 0.5 * w
            tot = 0.0
            for a, wa in zip(s, ws):
                for b, wb in zip(s, ws):
                    lam1, lam2 = a, b * (1 - a)
                    x = c[0] + lam1 * (c[1] - c[0]) + lam2 * (c[2] - c[0])
                    tot += wa * wb * (1 - a) * f(x[0], x[1])
            tot *= 2 * mesh.elem_weight[e]
            assert quad[e] == pytest.approx(tot, rel=1e-11, abs=1e-15)


def test_radial_quadrature_volume_moments():
    mesh = build_mesh("radial-ball", 9, ball_dim=5)
    one = np.ones(mesh.n_nodes)
    omega = 8 * math.pi**2 / 3  # |S^4|
    assert fem.quad_power(mesh, one, 2.0) == pytest.approx(omega / 5, rel=1e-13)
    r = mesh.nodes[:, 0]
    # int_B |x|^2 dx = omega / 7, exact since r (P1) interpolates r exactly
    assert fem.quad_power(mesh, r, 2.0) == pytest.approx(omega / 7, rel=1e-12)


def test_quad_power_derivative_matches_fd():
    mesh = build_mesh("disc", 4)
    u = np.random.default_rng(2).standard_normal(mesh.n_nodes)
    c = 1.0 + np.arange(fem.quadrature_rule(mesh).weights.size) % 3
    g = fem.quad_power_derivative(mesh, u, 3.5, c)
    for i in (1, 9, 20):
        e = np.zeros_like(u)
        e[i] = 1e-4
        fd = (fem.quad_power(mesh, u + e, 3.5, c) - fem.quad_power(mesh, u - e, 3.5, c)) / (2e-4 * 3.5)
        assert g[i] == pytest.approx(fd, rel=1e-6)


def test_nodal_density_sums_to_total():
    mesh = build_mesh("interval", 17)
    u = np.sin(3 * mesh.nodes[:, 0])
    assert fem.quad_nodal_density(mesh, u, 4.0).sum() == pytest.approx(fem.quad_power(mesh, u, 4.0))


def test_riesz_map_commutes_with_symmetry():
    mesh = build_mesh("disc", 6)
    sym = disc_symmetry(mesh, rotation_order=4)
    riesz = fem.RieszMap(mesh)
    g = project_H(np.random.default_rng(5).standard_normal(mesh.n_nodes), sym)
    x = riesz.solve(g)
    np.testing.assert_allclose(project_H(x, sym), x, atol=1e-12)
    assert np.all(x[mesh.boundary] == 0.0)
    assert riesz.inner(x, x) > 0
