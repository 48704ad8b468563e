"""Discrete integrals on P1 meshes and the Sobolev (Riesz) preconditioner.

The gradient term is integrated exactly for P1 fields (the gradient is
constant per element). Zero-order terms use element Gauss rules (five
points per interval, including the radial weight; six points of degree 4
per triangle). Lumping them instead would break the Sobolev inequality for
P1 fields: a hat function at the centre of a radial ball has a lumped
Sobolev quotient below the sharp constant, which creates spurious
concentrated critical points at the critical exponent.
"""

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import StructuralError

__all__ = [
    "element_gradients",
    "grad_power",
    "grad_power_derivative",
    "lumped_power",
    "lumped_power_derivative",
    "QuadratureRule",
    "quadrature_rule",
    "quad_power",
    "quad_power_derivative",
    "quad_nodal_density",
    "sobolev_norm",
    "stiffness_matrix",
    "RieszMap",
]


def element_gradients(mesh, u):
    """(E, dim) array of the constant gradient of ``u`` on every element."""
    return np.einsum("edk,ek->ed", mesh.grad_ops, u[mesh.elements])


def _regularised(g2, p, sigma):
    # (|g|^2 + sigma^2)^(p/2) with sigma only active for p < 2
    return g2 + sigma * sigma if p < 2.0 else g2


def grad_power(mesh, u, p, sigma=0.0):
    """``int |grad u|^p`` (regularised as ``(|grad u|^2+s^2)^(p/2) - s^p`` for p < 2)."""
    g = element_gradients(mesh, u)
    g2 = np.sum(g * g, axis=1)
    if p < 2.0 and sigma > 0.0:
        val = _regularised(g2, p, sigma) ** (0.5 * p) - sigma**p
    else:
        val = g2 ** (0.5 * p)
    return float(mesh.elem_weight @ val)


def grad_power_derivative(mesh, u, p, sigma=0.0):
    """Derivative of ``(1/p) int |grad u|^p`` with respect to the nodal values."""
    g = element_gradients(mesh, u)
    g2 = np.sum(g * g, axis=1)
    s = _regularised(g2, p, sigma) if sigma > 0.0 else g2
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(s > 0.0, s ** (0.5 * p - 1.0), 0.0)
    flux = (mesh.elem_weight * coef)[:, None] * g  # (E, dim)
    local = np.einsum("ed,edk->ek", flux, mesh.grad_ops)
    out = np.zeros(mesh.n_nodes)
    np.add.at(out, mesh.elements, local)
    return out


def lumped_power(mesh, u, power, coef=None):
    """``sum_i w_i c_i |u_i|^power``."""
    w = mesh.node_weight if coef is None else mesh.node_weight * coef
    return float(w @ np.abs(u) ** power)


def lumped_power_derivative(mesh, u, power, coef=None):
    """Derivative of ``(1/power) sum_i w_i c_i |u_i|^power``."""
    w = mesh.node_weight if coef is None else mesh.node_weight * coef
    return w * np.abs(u) ** (power - 1.0) * np.sign(u)


class QuadratureRule:
    """Element quadrature: basis values, weights and physical points.

    ``basis`` is (E, nq, k), ``weights`` (E, nq) already include the element
    measure (and the radial weight on radial meshes), ``points`` (E*nq, dim).
    """

    def __init__(self, basis, weights, points):
        self.basis = basis
        self.weights = weights
        self.points = points

    def values(self, mesh, u):
        return np.einsum("eqk,ek->eq", self.basis, u[mesh.elements])

    def interpolate(self, mesh, nodal):
        return self.values(mesh, np.asarray(nodal, float)).ravel()


_GL5_X, _GL5_W = np.polynomial.legendre.leggauss(5)
_TRI_A, _TRI_B = 0.445948490915965, 0.091576213509771
_TRI_WA, _TRI_WB = 0.223381589678011, 0.109951743655322
_TRI_BARY = np.array([
    [_TRI_A, _TRI_A, 1 - 2 * _TRI_A], [_TRI_A, 1 - 2 * _TRI_A, _TRI_A], [1 - 2 * _TRI_A, _TRI_A, _TRI_A],
    [_TRI_B, _TRI_B, 1 - 2 * _TRI_B], [_TRI_B, 1 - 2 * _TRI_B, _TRI_B], [1 - 2 * _TRI_B, _TRI_B, _TRI_B],
])
_TRI_W = np.array([_TRI_WA] * 3 + [_TRI_WB] * 3)


def quadrature_rule(mesh):
    """Cached :class:`QuadratureRule` for ``mesh``."""
    rule = getattr(mesh, "_quadrature", None)
    if rule is not None:
        return rule
    E = len(mesh.elements)
    if mesh.dim == 1:
        lam = 0.5 * (_GL5_X + 1.0)  # position along the element
        basis = np.broadcast_to(np.stack([1.0 - lam, lam], axis=1), (E, 5, 2)).copy()
        x0 = mesh.elem_coords[:, 0, 0][:, None]
        x1 = mesh.elem_coords[:, 1, 0][:, None]
        pts = x0 + (x1 - x0) * lam[None, :]
        weights = 0.5 * np.abs(x1 - x0) * _GL5_W[None, :]
        if mesh.kind == "radial-ball":
            from .special_constants import sphere_area

            n = mesh.ball_dim
            weights = weights * sphere_area(n) * pts ** (n - 1)
        points = pts.reshape(-1, 1)
    else:
        basis = np.broadcast_to(_TRI_BARY, (E, 6, 3)).copy()
        pts = np.einsum("qk,ekd->eqd", _TRI_BARY, mesh.elem_coords)
        if mesh.kind == "torus":
            pts = np.mod(pts, 1.0)
        weights = mesh.elem_weight[:, None] * _TRI_W[None, :]
        points = pts.reshape(-1, 2)
    rule = QuadratureRule(basis, weights, points)
    mesh._quadrature = rule
    return rule


def quad_power(mesh, u, power, coef=None):
    """``int c |u|^power`` by element quadrature (``coef`` at quadrature points)."""
    rule = quadrature_rule(mesh)
    uq = np.abs(rule.values(mesh, u)) ** power
    w = rule.weights if coef is None else rule.weights * coef.reshape(rule.weights.shape)
    return float(np.sum(w * uq))


def quad_power_derivative(mesh, u, power, coef=None):
    """Derivative of ``(1/power) int c |u|^power`` with respect to nodal values."""
    rule = quadrature_rule(mesh)
    uq = rule.values(mesh, u)
    w = rule.weights if coef is None else rule.weights * coef.reshape(rule.weights.shape)
    dens = w * np.abs(uq) ** (power - 1.0) * np.sign(uq)
    local = np.einsum("eq,eqk->ek", dens, rule.basis)
    out = np.zeros(mesh.n_nodes)
    np.add.at(out, mesh.elements, local)
    return out


def quad_nodal_density(mesh, u, power, coef=None):
    """Nodal shares of ``int c |u|^power`` (basis-weighted, they sum to the total)."""
    rule = quadrature_rule(mesh)
    uq = np.abs(rule.values(mesh, u)) ** power
    w = rule.weights if coef is None else rule.weights * coef.reshape(rule.weights.shape)
    local = np.einsum("eq,eqk->ek", w * uq, rule.basis)
    out = np.zeros(mesh.n_nodes)
    np.add.at(out, mesh.elements, local)
    return out


def sobolev_norm(mesh, u, p):
    """``||grad u||_p + ||u||_p``."""
    return grad_power(mesh, u, p) ** (1.0 / p) + quad_power(mesh, u, p) ** (1.0 / p)


def stiffness_matrix(mesh):
    """Sparse P1 stiffness matrix with the mesh's (possibly radial) weights."""
    B = mesh.grad_ops  # (E, d, k)
    local = np.einsum("e,edi,edj->eij", mesh.elem_weight, B, B)
    k = mesh.elements.shape[1]
    rows = np.repeat(mesh.elements, k, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, k)).ravel()
    A = sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(mesh.n_nodes,) * 2)
    return A.tocsc()


class RieszMap:
    """Solve ``(K + M) x = g`` on free nodes; fixed (Dirichlet) nodes stay 0.

    K is the stiffness matrix and M the lumped mass. Both are invariant under
    every mesh automorphism, so the map commutes with symmetry projections.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self.free = np.flatnonzero(~mesh.boundary)
        if self.free.size == 0:
            raise StructuralError("mesh has no free nodes")
        A = stiffness_matrix(mesh) + sparse.diags(mesh.node_weight)
        self.matrix = A
        self._lu = splu(A[self.free][:, self.free].tocsc())

    def solve(self, g):
        x = np.zeros(self.mesh.n_nodes)
        x[self.free] = self._lu.solve(np.ascontiguousarray(g[self.free]))
        return x

    def inner(self, x, y):
        return float(x @ (self.matrix @ y))
