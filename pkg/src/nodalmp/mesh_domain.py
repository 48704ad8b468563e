"""P1 meshes built symmetry-first, and symmetries realised as node permutations.

Four domain kinds are supported:

``interval``      [-1, 1] (node at 0 required so the reflection has a fixed node)
``radial-ball``   radial reduction of the unit ball of R^n, weight omega r^(n-1)
``disc``          unit disc, concentric rings with alternating diagonals
``torus``         flat torus [0,1)^2, every cell split into four triangles

Group elements never interpolate: every isometry maps nodes onto nodes, so
averaging over the group commutes exactly with discrete integration.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.spatial import cKDTree

from .errors import StructuralError
from .special_constants import sphere_area

__all__ = [
    "DomainMesh",
    "SymmetrySpec",
    "build_mesh",
    "build_symmetry",
    "interval_symmetry",
    "disc_symmetry",
    "torus_symmetry",
    "trivial_symmetry",
    "permutation_from_map",
    "orbit",
    "orbit_card_extended",
    "verify_weak_commute",
    "project_G",
    "antisymmetrize_tau",
    "project_H",
    "split_check",
    "symmetry_residuals",
    "h_free_mask",
    "h_dimension",
    "mesh_to_dict",
    "mesh_from_dict",
]

KINDS = ("interval", "radial-ball", "disc", "torus")
_ALIASES = {
    "interval-1D": "interval",
    "radial-ball-1D": "radial-ball",
    "disc-2D": "disc",
    "flat-torus-2D": "torus",
}


@dataclass
class DomainMesh:
    kind: str
    nodes: np.ndarray  # (N, dim)
    elements: np.ndarray  # (E, dim+1)
    boundary: np.ndarray  # (N,) bool
    elem_coords: np.ndarray  # (E, dim+1, dim), unwrapped for periodic meshes
    elem_weight: np.ndarray  # (E,) measure (radially weighted for radial-ball)
    node_weight: np.ndarray  # (N,) lumped measure
    grad_ops: np.ndarray  # (E, dim, dim+1) maps local nodal values to the gradient
    facets: list = field(default_factory=list)  # boundary facets, see _facet
    ball_dim: int = 0  # ambient dimension for radial-ball
    params: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.nodes.shape[1]

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def euclidean(self):
        return self.kind != "torus"

    @property
    def geometric_dim(self):
        """Dimension of the Euclidean domain the mesh discretises."""
        return self.ball_dim if self.kind == "radial-ball" else self.dim

    @property
    def free(self):
        return ~self.boundary

    def positions(self):
        """Euclidean representatives used to evaluate coefficient fields."""
        return self.nodes

    def distances_to(self, point):
        """Distance from every node to ``point`` (periodic on the torus)."""
        d = self.nodes - np.asarray(point, dtype=float)
        if self.kind == "torus":
            d -= np.round(d)
        return np.sqrt(np.sum(d * d, axis=1))

    def distance(self, a, b):
        d = np.asarray(a, float) - np.asarray(b, float)
        if self.kind == "torus":
            d -= np.round(d)
        return float(np.sqrt(np.sum(d * d)))


def _facet(point, normal, measure, element, local):
    # One boundary facet: a quadrature point, outward unit normal, measure,
    # and the adjacent element used for the one-sided normal derivative.
    return {
        "point": np.asarray(point, float),
        "normal": np.asarray(normal, float),
        "measure": float(measure),
        "element": int(element),
        "local": local,
    }


def _simplex_geometry(coords):
    """Gradient operators and measures for a stack of P1 simplices."""
    E, k, d = coords.shape
    edges = coords[:, 1:, :] - coords[:, :1, :]  # (E, d, d)
    det = np.linalg.det(edges)
    inv = np.linalg.inv(edges)  # columns: dual basis
    # inv[e]^T @ (x - x0) gives barycentric coords 1..d, so grad lambda_j = inv[e][:, j-1]
    grads = np.zeros((E, d, k))
    grads[:, :, 1:] = inv
    grads[:, :, 0] = -grads[:, :, 1:].sum(axis=2)
    measure = np.abs(det) / math.factorial(d)
    return grads, measure


def _finish(kind, nodes, elements, boundary, elem_coords, facets, *, radial_dim=0, params=None):
    grads, measure = _simplex_geometry(elem_coords)
    if np.any(measure <= 0):
        raise StructuralError("degenerate element in mesh")
    k = elements.shape[1]
    if radial_dim:
        omega = sphere_area(radial_dim)
        r0 = elem_coords[:, 0, 0]
        r1 = elem_coords[:, 1, 0]
        n = radial_dim
        elem_weight = omega * (r1**n - r0**n) / n
        mid = 0.5 * (r0 + r1)
        node_weight = np.zeros(len(nodes))
        np.add.at(node_weight, elements[:, 0], omega * (mid**n - r0**n) / n)
        np.add.at(node_weight, elements[:, 1], omega * (r1**n - mid**n) / n)
    else:
        elem_weight = measure
        node_weight = np.zeros(len(nodes))
        for j in range(k):
            np.add.at(node_weight, elements[:, j], measure / k)
    return DomainMesh(
        kind=kind,
        nodes=nodes,
        elements=elements,
        boundary=boundary,
        elem_coords=elem_coords,
        elem_weight=elem_weight,
        node_weight=node_weight,
        grad_ops=grads,
        facets=facets,
        ball_dim=radial_dim,
        params=dict(params or {}),
    )


def _interval(resolution, length=1.0):
    if resolution % 2 == 0:
        raise StructuralError(
            f"interval needs an odd node count so 0 is a node (got {resolution})"
        )
    x = np.linspace(-length, length, resolution)
    x[resolution // 2] = 0.0
    nodes = x[:, None]
    elements = np.column_stack([np.arange(resolution - 1), np.arange(1, resolution)])
    boundary = np.zeros(resolution, bool)
    boundary[[0, -1]] = True
    coords = nodes[elements]
    facets = [
        _facet([-length], [-1.0], 1.0, 0, 0),
        _facet([length], [1.0], 1.0, resolution - 2, 1),
    ]
    return _finish("interval", nodes, elements, boundary, coords, facets,
                   params={"resolution": resolution, "length": length})


def _radial_ball(resolution, ball_dim=3, radius=1.0, grading=1.0):
    s = np.linspace(0.0, 1.0, resolution)
    r = radius * s**grading
    nodes = r[:, None]
    elements = np.column_stack([np.arange(resolution - 1), np.arange(1, resolution)])
    boundary = np.zeros(resolution, bool)
    boundary[-1] = True
    coords = nodes[elements]
    omega = sphere_area(ball_dim)
    facets = [_facet([radius], [1.0], omega * radius ** (ball_dim - 1), resolution - 2, 1)]
    return _finish(
        "radial-ball", nodes, elements, boundary, coords, facets, radial_dim=ball_dim,
        params={"resolution": resolution, "ball_dim": ball_dim, "radius": radius, "grading": grading},
    )


def _angular_count(rings, rotation_order):
    base = int(np.lcm(4, 2 * rotation_order))
    m = max(1, int(math.ceil(2.0 * math.pi * rings / base)))
    return int(base * m)


def _disc(resolution, rotation_order=4, angular=None):
    R = resolution
    M = angular or _angular_count(R, rotation_order)
    if M % 4 or (M // rotation_order) % 2 or M % rotation_order:
        raise StructuralError(
            f"angular count {M} incompatible with rotation order {rotation_order}"
        )
    theta = 2.0 * np.pi * np.arange(M) / M
    cos, sin = np.cos(theta), np.sin(theta)
    # snap the axis angles so reflections map nodes exactly
    cos[np.isclose(cos, 0.0, atol=1e-12)] = 0.0
    sin[np.isclose(sin, 0.0, atol=1e-12)] = 0.0
    pts = [np.zeros(2)]
    for j in range(1, R + 1):
        rho = j / R
        pts.extend(np.column_stack([rho * cos, rho * sin]))
    nodes = np.array(pts)

    def ring(j, i):
        return 1 + (j - 1) * M + (i % M)

    tris = []
    for i in range(M):
        tris.append((0, ring(1, i), ring(1, i + 1)))
    for j in range(1, R):
        for i in range(M):
            a0, a1 = ring(j, i), ring(j, i + 1)
            b0, b1 = ring(j + 1, i), ring(j + 1, i + 1)
            if i % 2 == 0:
                tris.append((a0, a1, b1))
                tris.append((a0, b1, b0))
            else:
                tris.append((a0, a1, b0))
                tris.append((a1, b1, b0))
    elements = np.array(tris, dtype=int)
    boundary = np.zeros(len(nodes), bool)
    boundary[1 + (R - 1) * M:] = True
    coords = nodes[elements]
    # outer boundary edges: between ring(R, i) and ring(R, i+1)
    edge_elem = {}
    for e, tri in enumerate(elements):
        for a in range(3):
            u, v = tri[a], tri[(a + 1) % 3]
            if boundary[u] and boundary[v]:
                edge_elem[frozenset((u, v))] = e
    facets = []
    for i in range(M):
        u, v = ring(R, i), ring(R, i + 1)
        mid = 0.5 * (nodes[u] + nodes[v])
        t = nodes[v] - nodes[u]
        normal = np.array([t[1], -t[0]])
        normal /= np.linalg.norm(normal)
        if normal @ mid < 0:
            normal = -normal
        facets.append(_facet(mid, normal, np.linalg.norm(t), edge_elem[frozenset((u, v))], None))
    return _finish("disc", nodes, elements, boundary, coords, facets,
                   params={"resolution": R, "rotation_order": rotation_order, "angular": M})


def _torus(resolution):
    N = resolution
    grid = [(i / N, j / N) for j in range(N) for i in range(N)]
    centers = [((i + 0.5) / N, (j + 0.5) / N) for j in range(N) for i in range(N)]
    nodes = np.array(grid + centers)

    def g(i, j):
        return (j % N) * N + (i % N)

    tris, coords = [], []
    h = 1.0 / N
    for j in range(N):
        for i in range(N):
            c = N * N + j * N + i
            corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
            cxy = np.array([(i + 0.5) * h, (j + 0.5) * h])
            for k in range(4):
                (i0, j0), (i1, j1) = corners[k], corners[(k + 1) % 4]
                tris.append((c, g(i0, j0), g(i1, j1)))
                coords.append([cxy, [i0 * h, j0 * h], [i1 * h, j1 * h]])
    elements = np.array(tris, dtype=int)
    boundary = np.zeros(len(nodes), bool)
    return _finish("torus", nodes, elements, boundary, np.array(coords), [],
                   params={"resolution": N})


def build_mesh(kind, resolution, **options):
    """Build a symmetry-compatible P1 mesh.

    Parameters
    ----------
    kind : str
        One of ``interval``, ``radial-ball``, ``disc``, ``torus`` (the long
        names ``interval-1D`` etc. are accepted too).
    resolution : int
        Node count for 1D kinds, ring count for the disc, cells per side
        for the torus. Must be at least 4.
    options
        ``rotation_order``/``angular`` (disc), ``ball_dim``/``radius``/
        ``grading`` (radial-ball), ``length`` (interval).
    """
    kind = _ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise StructuralError(f"unknown mesh kind {kind!r}")
    if resolution < 4:
        raise StructuralError(f"resolution must be >= 4, got {resolution}")
    if kind == "interval":
        return _interval(resolution, **options)
    if kind == "radial-ball":
        return _radial_ball(resolution, **options)
    if kind == "disc":
        return _disc(resolution, **options)
    return _torus(resolution, **options)


# --------------------------------------------------------------------------
# symmetries


@dataclass
class SymmetrySpec:
    """A finite group G and an optional involution tau acting on mesh nodes.

    ``generators`` and ``tau`` are integer arrays ``perm`` meaning the map
    sends node ``i`` to node ``perm[i]``; a field is composed as
    ``(u o sigma)[i] = u[perm[i]]``.
    """

    generators: list
    tau: np.ndarray = None
    omega1: np.ndarray = None
    omega2: np.ndarray = None
    n_nodes: int = 0

    def __post_init__(self):
        self.generators = [np.asarray(g, dtype=int) for g in self.generators]
        if self.tau is not None:
            self.tau = np.asarray(self.tau, dtype=int)
        if not self.n_nodes:
            ref = self.tau if self.tau is not None else (self.generators or [None])[0]
            self.n_nodes = 0 if ref is None else len(ref)
        self._labels = None

    @property
    def fixed(self):
        if self.tau is None:
            return np.zeros(0, dtype=int)
        return np.flatnonzero(self.tau == np.arange(len(self.tau)))

    @property
    def orbit_labels(self):
        """Label of the G-orbit of every node (labels are orbit minima)."""
        if self._labels is None:
            labels = np.arange(self.n_nodes)
            changed = True
            while changed:
                changed = False
                for g in self.generators:
                    m = np.minimum(labels, labels[g])
                    # propagate both ways through the permutation
                    inv = np.empty_like(g)
                    inv[g] = np.arange(len(g))
                    m = np.minimum(m, m[inv])
                    if np.any(m != labels):
                        labels = m
                        changed = True
            self._labels = labels
        return self._labels


def permutation_from_map(mesh, fn, tol=1e-9):
    """Node permutation induced by a point map, matched by nearest node."""
    pts = np.array([fn(x) for x in mesh.nodes])
    if mesh.kind == "torus":
        pts = np.mod(pts, 1.0)
        pts[np.isclose(pts, 1.0, atol=tol)] = 0.0
        tree = cKDTree(mesh.nodes, boxsize=1.0 + 1e-12)
    else:
        tree = cKDTree(mesh.nodes)
    dist, idx = tree.query(pts)
    if np.max(dist) > tol:
        bad = int(np.argmax(dist))
        raise StructuralError(f"map does not preserve the node set (node {bad} misses by {dist[bad]:.3g})")
    if len(np.unique(idx)) != len(idx):
        raise StructuralError("map is not injective on nodes")
    return idx


def trivial_symmetry(mesh):
    return SymmetrySpec(generators=[], tau=None, n_nodes=mesh.n_nodes)


def interval_symmetry(mesh):
    tau = permutation_from_map(mesh, lambda x: -x)
    x = mesh.nodes[:, 0]
    return SymmetrySpec(
        generators=[], tau=tau, omega1=np.flatnonzero(x > 0), omega2=np.flatnonzero(x < 0),
        n_nodes=mesh.n_nodes,
    )


def _rotation(angle):
    c, s = math.cos(angle), math.sin(angle)
    return lambda x: np.array([c * x[0] - s * x[1], s * x[0] + c * x[1]])


def disc_symmetry(mesh, rotation_order=None, tau="reflection", group="rotations"):
    """Symmetry on the disc.

    ``group`` is ``"rotations"`` (Z_k, rotations by 2 pi / k), ``"mirror"``
    (the reflection y -> -y, which preserves both half-planes) or
    ``"trivial"``. ``tau`` is ``"reflection"`` (x -> -x, splitting the disc
    into half-planes), ``"point"`` (x -> -x) or None.
    """
    k = rotation_order or mesh.params.get("rotation_order", 4)
    if group == "rotations":
        gens = [permutation_from_map(mesh, _rotation(2.0 * math.pi / k))] if k > 1 else []
    elif group == "mirror":
        gens = [permutation_from_map(mesh, lambda p: np.array([p[0], -p[1]]))]
    elif group == "trivial":
        gens = []
    else:
        raise StructuralError(f"unknown disc group {group!r}")
    x = mesh.nodes[:, 0]
    if tau == "reflection":
        t = permutation_from_map(mesh, lambda p: np.array([-p[0], p[1]]))
        return SymmetrySpec(gens, t, np.flatnonzero(x > 0), np.flatnonzero(x < 0), mesh.n_nodes)
    if tau == "point":
        t = permutation_from_map(mesh, lambda p: -p)
        return SymmetrySpec(gens, t, None, None, mesh.n_nodes)
    if tau is None:
        return SymmetrySpec(gens, None, None, None, mesh.n_nodes)
    raise StructuralError(f"unknown involution {tau!r}")


def torus_symmetry(mesh, translation_order=2):
    """y-translations by 1/k and the reflection x -> -x (mod 1)."""
    k = translation_order
    gens = [permutation_from_map(mesh, lambda p: np.array([p[0], p[1] + 1.0 / k]))] if k > 1 else []
    t = permutation_from_map(mesh, lambda p: np.array([-p[0], p[1]]))
    x = mesh.nodes[:, 0]
    omega1 = np.flatnonzero((x > 0) & (x < 0.5))
    omega2 = np.flatnonzero(x > 0.5)
    return SymmetrySpec(gens, t, omega1, omega2, mesh.n_nodes)


def build_symmetry(mesh, **options):
    """Default symmetry for each mesh kind (see the per-kind builders)."""
    if mesh.kind == "interval":
        return interval_symmetry(mesh)
    if mesh.kind == "disc":
        return disc_symmetry(mesh, **options)
    if mesh.kind == "torus":
        return torus_symmetry(mesh, **options)
    return trivial_symmetry(mesh)


def orbit(x, symmetry, extended=False):
    """Sorted node indices of the G-orbit of node ``x`` (with tau if ``extended``)."""
    maps = list(symmetry.generators)
    if extended and symmetry.tau is not None:
        maps.append(symmetry.tau)
    seen = {int(x)}
    frontier = [int(x)]
    while frontier:
        nxt = []
        for y in frontier:
            for g in maps:
                z = int(g[y])
                if z not in seen:
                    seen.add(z)
                    nxt.append(z)
        frontier = nxt
    return np.array(sorted(seen), dtype=int)


def orbit_card_extended(x, symmetry):
    """Card of the orbit of ``x`` under the group generated by G and tau."""
    return len(orbit(x, symmetry, extended=True))


def verify_weak_commute(symmetry):
    """Check tau(O_G(x)) == O_G(tau(x)) for every node.

    Returns ``(ok, witness)``; ``witness`` is the first failing node or None.
    """
    if symmetry.tau is None:
        return True, None
    labels = symmetry.orbit_labels
    tau = symmetry.tau
    # tau maps an orbit onto an orbit iff all images of one orbit share a label
    image_label = labels[tau]
    for lab in np.unique(labels):
        members = np.flatnonzero(labels == lab)
        imgs = image_label[members]
        if np.any(imgs != imgs[0]):
            return False, int(members[0])
        target = np.flatnonzero(labels == imgs[0])
        if len(target) != len(members):
            return False, int(members[0])
    return True, None


def project_G(u, symmetry):
    """Average over the group: replace every value by its orbit mean."""
    u = np.asarray(u, dtype=float)
    if not symmetry.generators:
        return u.copy()
    labels = symmetry.orbit_labels
    sums = np.bincount(labels, weights=u, minlength=len(u))
    counts = np.bincount(labels, minlength=len(u))
    means = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
    return means[labels]


def antisymmetrize_tau(u, symmetry):
    """``(u - u o tau) / 2``; exact antisymmetry in floating point."""
    u = np.asarray(u, dtype=float)
    if symmetry.tau is None:
        return u.copy()
    return 0.5 * (u - u[symmetry.tau])


def project_H(u, symmetry):
    """Projection onto G-invariant, tau-antisymmetric fields."""
    return antisymmetrize_tau(project_G(u, symmetry), symmetry)


def symmetry_residuals(u, symmetry):
    """Max violation of G-invariance and of tau-antisymmetry."""
    u = np.asarray(u, dtype=float)
    inv = max((float(np.max(np.abs(u[g] - u))) for g in symmetry.generators), default=0.0)
    anti = 0.0 if symmetry.tau is None else float(np.max(np.abs(u[symmetry.tau] + u)))
    return inv, anti


def h_free_mask(mesh, symmetry):
    """Free nodes whose value is not forced to zero in discrete H.

    A node is forced to zero when tau maps its G-orbit onto itself, since
    then ``u = u o tau = -u`` there.
    """
    mask = ~np.asarray(mesh.boundary, bool)
    if symmetry.tau is not None:
        labels = symmetry.orbit_labels
        mask &= labels != labels[symmetry.tau]
    return mask


def h_dimension(mesh, symmetry):
    """Dimension of discrete H (one degree of freedom per <G,tau>-orbit pair)."""
    mask = h_free_mask(mesh, symmetry)
    labels = symmetry.orbit_labels[mask]
    n_orbits = len(np.unique(labels))
    return n_orbits // 2 if symmetry.tau is not None else n_orbits


def split_check(symmetry, mesh=None):
    """Check that the fixed set of tau splits the nodes into Omega_1, Omega_2.

    Returns a dict with ``ok`` plus the individual checks and witnesses. When
    ``mesh`` is given it also checks that F carries no element interior, i.e.
    no element has all of its nodes in F.
    """
    report = {"ok": False, "violations": []}
    if symmetry.tau is None or symmetry.omega1 is None or symmetry.omega2 is None:
        report["violations"].append("no involution or no subdomains")
        return report
    n = symmetry.n_nodes
    o1 = set(map(int, symmetry.omega1))
    o2 = set(map(int, symmetry.omega2))
    F = set(map(int, symmetry.fixed))
    checks = {}
    inter = o1 & o2
    checks["disjoint"] = not inter
    if inter:
        report["violations"].append(("omega1 & omega2", min(inter)))
    cover = o1 | o2 | F
    checks["cover"] = len(cover) == n and not (F & (o1 | o2))
    if not checks["cover"]:
        missing = set(range(n)) - cover
        report["violations"].append(("cover", min(missing | (F & (o1 | o2)) or {-1})))
    tau = symmetry.tau
    tau_o1 = {int(tau[i]) for i in o1}
    checks["tau_swaps"] = tau_o1 == o2
    if not checks["tau_swaps"]:
        report["violations"].append(("tau(omega1) != omega2", min(tau_o1 ^ o2)))
    stable = True
    for g in symmetry.generators:
        for part in (o1, o2):
            bad = {i for i in part if int(g[i]) not in part}
            if bad:
                stable = False
                report["violations"].append(("generator moves node out of its part", min(bad)))
    checks["G_stable"] = stable
    if mesh is not None:
        Fmask = np.zeros(n, bool)
        Fmask[list(F)] = True
        inside = np.all(Fmask[mesh.elements], axis=1)
        checks["F_null"] = not np.any(inside)
        if np.any(inside):
            report["violations"].append(("element inside F", int(np.flatnonzero(inside)[0])))
    report.update(checks)
    report["ok"] = all(checks.values())
    return report


# --------------------------------------------------------------------------
# serialisation


def mesh_to_dict(mesh, symmetry=None):
    out = {
        "kind": mesh.kind,
        "params": mesh.params,
        "nodes": mesh.nodes.tolist(),
        "elements": mesh.elements.tolist(),
        "boundary": np.flatnonzero(mesh.boundary).tolist(),
    }
    if symmetry is not None:
        out["symmetry"] = {
            "generators": [g.tolist() for g in symmetry.generators],
            "tau": None if symmetry.tau is None else symmetry.tau.tolist(),
            "fixed": symmetry.fixed.tolist(),
            "omega1": None if symmetry.omega1 is None else np.asarray(symmetry.omega1).tolist(),
            "omega2": None if symmetry.omega2 is None else np.asarray(symmetry.omega2).tolist(),
        }
    return out


def mesh_from_dict(data):
    """Rebuild mesh (and symmetry, if present) from :func:`mesh_to_dict` output."""
    params = dict(data["params"])
    kind = data["kind"]
    res = params.pop("resolution")
    if kind == "disc":
        params.pop("angular", None)
    mesh = build_mesh(kind, res, **params)
    if not np.allclose(mesh.nodes, np.asarray(data["nodes"])):
        raise StructuralError("stored nodes do not match the regenerated mesh")
    sym = None
    if "symmetry" in data:
        s = data["symmetry"]
        sym = SymmetrySpec(
            s["generators"],
            None if s["tau"] is None else np.asarray(s["tau"]),
            None if s["omega1"] is None else np.asarray(s["omega1"]),
            None if s["omega2"] is None else np.asarray(s["omega2"]),
            mesh.n_nodes,
        )
    return mesh, sym
