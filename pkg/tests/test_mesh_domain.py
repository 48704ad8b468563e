import math

import numpy as np
import pytest

from nodalmp import fem
from nodalmp.errors import StructuralError
from nodalmp.mesh_domain import (
    SymmetrySpec,
    build_mesh,
    build_symmetry,
    disc_symmetry,
    h_dimension,
    interval_symmetry,
    mesh_from_dict,
    mesh_to_dict,
    orbit,
    orbit_card_extended,
    permutation_from_map,
    project_G,
    project_H,
    split_check,
    symmetry_residuals,
    torus_symmetry,
    verify_weak_commute,
)


@pytest.mark.parametrize("kind,res,opts", [
    ("interval", 17, {}), ("radial-ball", 17, {"ball_dim": 3}), ("disc", 6, {}), ("disc", 5, {"rotation_order": 3}),
])
def test_gradient_of_linear_field_is_exact(kind, res, opts):
    mesh = build_mesh(kind, res, **opts)
    for d in range(mesh.dim):
        g = fem.element_gradients(mesh, mesh.nodes[:, d])
        expected = np.zeros(mesh.dim)
        expected[d] = 1.0
        np.testing.assert_allclose(g, np.broadcast_to(expected, g.shape), atol=1e-12)


def test_measures():
    assert build_mesh("interval", 33).elem_weight.sum() == pytest.approx(2.0)
    ball = build_mesh("radial-ball", 33, ball_dim=3)
    assert ball.elem_weight.sum() == pytest.approx(4 * math.pi / 3, rel=1e-13)
    assert ball.node_weight.sum() == pytest.approx(4 * math.pi / 3, rel=1e-13)
    disc = build_mesh("disc", 16)
    assert disc.elem_weight.sum() == pytest.approx(math.pi, rel=5e-3)
    assert disc.node_weight.sum() == pytest.approx(disc.elem_weight.sum(), rel=1e-13)
    torus = build_mesh("torus", 8)
    assert torus.elem_weight.sum() == pytest.approx(1.0, rel=1e-13)
    assert not torus.boundary.any() and not torus.euclidean


def test_aliases_and_errors():
    assert build_mesh("interval-1D", 9).kind == "interval"
    assert build_mesh("flat-torus-2D", 4).kind == "torus"
    assert build_mesh("radial-ball-1D", 9).geometric_dim == 3
    with pytest.raises(StructuralError):
        build_mesh("interval", 3)
    with pytest.raises(StructuralError):
        build_mesh("interval", 10)  # 0 must be a node
    with pytest.raises(StructuralError):
        build_mesh("sphere", 8)


def test_boundary_facets_have_outward_normals():
    disc = build_mesh("disc", 8)
    per = sum(f["measure"] for f in disc.facets)
    assert per == pytest.approx(2 * math.pi, rel=1e-2)
    for f in disc.facets:
        assert f["point"] @ f["normal"] > 0.99 * np.linalg.norm(f["point"])
        assert np.linalg.norm(f["normal"]) == pytest.approx(1.0)
    iv = build_mesh("interval", 9)
    assert [float(f["point"] @ f["normal"]) for f in iv.facets] == [1.0, 1.0]


def test_disc_rotation_reflection_orbits():
    mesh = build_mesh("disc", 6, rotation_order=4)
    sym = disc_symmetry(mesh, rotation_order=4, tau="reflection")
    generic = int(np.flatnonzero(~mesh.boundary & (np.abs(mesh.nodes[:, 1]) > 1e-9)
                                 & (np.abs(mesh.nodes[:, 0]) > 1e-9)
                                 & (np.abs(np.abs(mesh.nodes[:, 0]) - np.abs(mesh.nodes[:, 1])) > 1e-9))[0])
    assert len(orbit(generic, sym)) == 4
    assert orbit_card_extended(generic, sym) == 8
    assert orbit_card_extended(0, sym) == 1
    assert verify_weak_commute(sym) == (True, None)
    # rotations move nodes across the half-planes: the split fails honestly
    rep = split_check(sym, mesh)
    assert not rep["ok"] and not rep["G_stable"] and rep["tau_swaps"]


def test_disc_mirror_group_splits():
    mesh = build_mesh("disc", 6)
    sym = disc_symmetry(mesh, group="mirror")
    rep = split_check(sym, mesh)
    assert rep["ok"], rep["violations"]
    assert h_dimension(mesh, sym) > 0


def test_point_reflection_kills_h():
    mesh = build_mesh("disc", 6, rotation_order=4)
    sym = disc_symmetry(mesh, rotation_order=4, tau="point")  # -id is a rotation in Z4
    assert h_dimension(mesh, sym) == 0


def test_projection_exact_and_idempotent():
    mesh = build_mesh("disc", 7, rotation_order=6)
    sym = disc_symmetry(mesh, rotation_order=6)
    u = np.random.default_rng(3).standard_normal(mesh.n_nodes)
    v = project_H(u, sym)
    assert symmetry_residuals(v, sym) == (0.0, 0.0)
    np.testing.assert_allclose(project_H(v, sym), v, rtol=0, atol=1e-15)
    w = project_G(u, sym)
    assert symmetry_residuals(w, sym)[0] == 0.0


def test_weak_commute_failure_has_witness():
    mesh = build_mesh("interval", 9)
    base = interval_symmetry(mesh)
    g = np.arange(9)
    g[[1, 2]] = [2, 1]  # swaps nodes 1 and 2 only; tau maps {1,2} to {7,6}, not an orbit
    sym = SymmetrySpec([g], base.tau, base.omega1, base.omega2, 9)
    ok, witness = verify_weak_commute(sym)
    assert not ok and witness in (1, 2, 6, 7)


def test_torus_symmetry():
    mesh = build_mesh("torus", 8)
    sym = torus_symmetry(mesh, translation_order=2)
    assert verify_weak_commute(sym)[0]
    assert split_check(sym, mesh)["ok"]
    assert mesh.distance([0.05, 0.5], [0.95, 0.5]) == pytest.approx(0.1)
    assert build_symmetry(mesh).tau is not None


def test_permutation_from_map_rejects_non_automorphism():
    mesh = build_mesh("disc", 5, rotation_order=4)
    with pytest.raises(StructuralError):
        permutation_from_map(mesh, lambda p: np.array([p[0] * math.cos(0.1) - p[1] * math.sin(0.1),
                                                       p[0] * math.sin(0.1) + p[1] * math.cos(0.1)]))


def test_round_trip():
    mesh = build_mesh("disc", 5)
    sym = disc_symmetry(mesh, group="mirror")
    m2, s2 = mesh_from_dict(mesh_to_dict(mesh, sym))
    np.testing.assert_array_equal(m2.nodes, mesh.nodes)
    np.testing.assert_array_equal(s2.tau, sym.tau)
    np.testing.assert_array_equal(s2.omega1, sym.omega1)
