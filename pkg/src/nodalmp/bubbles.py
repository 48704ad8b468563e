"""Truncated bubble profiles and the small-eta expansion of their energy.

The profile concentrating at x_o is

    psi(r) = f0^((p-n)/p^2) eta^((n-p)/p^2) (eta + r^(p/(p-1)))^(1-n/p) C(n,p) - mu

on r <= delta and 0 beyond, with mu chosen so that psi(delta) = 0.

Energies are reported in the normalisation ``p * J`` so that the leading part
of ``p J(t psi)`` is ``phi(t) K^-n f0^(1-n/p)`` with
``phi(t) = t^p - (p/p*) t^(p*)``, whose maximum is ``(p/n) K^-n f0^(1-n/p)``.
"""

from dataclasses import dataclass, asdict, replace
import math

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, SupportOverlapError
from .problem_model import critical_exponent, mp_threshold
from .quadrature import radial_integral
from . import special_constants as sc

__all__ = [
    "BubbleParams",
    "ExpansionReport",
    "psi_value",
    "psi_derivative",
    "orbit_superposition",
    "expansion_terms",
    "quadrature_terms",
    "expansion_with_quadrature",
    "F_H_terms",
    "phi",
    "sup_scan",
    "TERMS",
]

TERMS = ("grad", "mass", "crit", "pert")


@dataclass(frozen=True)
class BubbleParams:
    """Bubble scale ``eta``, cut-off radius ``delta`` and centre ``center``.

    ``mu`` is derived, see :meth:`mu_for`.
    """

    eta: float
    delta: float = 1.0
    center: tuple = (0.0,)

    def __post_init__(self):
        if not self.eta > 0.0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.delta > 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    def amplitude(self, spec):
        n, p = spec.n, spec.p
        return (
            spec.x0.f0 ** ((p - n) / p**2)
            * self.eta ** ((n - p) / p**2)
            * sc.bubble_constant(n, p)
        )

    def mu_for(self, spec):
        n, p = spec.n, spec.p
        return self.amplitude(spec) * (self.eta + self.delta ** (p / (p - 1.0))) ** (1.0 - n / p)


def psi_value(r, params, spec):
    """Bubble profile at distance ``r`` (scalar or array)."""
    n, p = spec.n, spec.p
    r = np.asarray(r, dtype=float)
    A = params.amplitude(spec)
    core = A * (params.eta + r ** (p / (p - 1.0))) ** (1.0 - n / p) - params.mu_for(spec)
    out = np.where(r <= params.delta, core, 0.0)
    return float(out) if out.ndim == 0 else out


def psi_derivative(r, params, spec):
    """``d psi / dr`` (zero beyond delta)."""
    n, p = spec.n, spec.p
    r = np.asarray(r, dtype=float)
    s = p / (p - 1.0)
    A = params.amplitude(spec)
    d = A * (1.0 - n / p) * s * (params.eta + r**s) ** (-n / p) * r ** (s - 1.0)
    out = np.where(r <= params.delta, d, 0.0)
    return float(out) if out.ndim == 0 else out


def orbit_superposition(params, symmetry, spec, mesh, center_node):
    """Sum of signed bumps over the G-orbit of a node and its tau-image.

    ``sum_i psi_{x_i} - psi_{tau(x_i)}`` evaluated at mesh nodes. Supports
    must be pairwise disjoint: every two centres must be more than
    ``2 delta`` apart, otherwise :class:`SupportOverlapError` names the pair.
    """
    from .mesh_domain import orbit

    G_orbit = orbit(center_node, symmetry)
    centres = [(int(i), 1.0) for i in G_orbit]
    if symmetry.tau is not None:
        images = {int(symmetry.tau[i]) for i in G_orbit}
        if images & set(map(int, G_orbit)):
            raise SupportOverlapError(
                "tau maps the orbit onto itself, the bumps cancel", (int(center_node), int(symmetry.tau[center_node]))
            )
        centres += [(i, -1.0) for i in sorted(images)]
    for a in range(len(centres)):
        for b in range(a + 1, len(centres)):
            i, j = centres[a][0], centres[b][0]
            d = mesh.distance(mesh.nodes[i], mesh.nodes[j])
            if d <= 2.0 * params.delta:
                raise SupportOverlapError(
                    f"supports of bumps at nodes {i} and {j} overlap (distance {d:.4g} <= 2 delta)", (i, j)
                )
    u = np.zeros(mesh.n_nodes)
    for i, sign in centres:
        u += sign * psi_value(mesh.distances_to(mesh.nodes[i]), params, spec)
    return u


# --------------------------------------------------------------------------
# expansions


@dataclass(frozen=True)
class ExpansionReport:
    """One bubble energy term at a given eta.

    ``leading`` is the leading analytic value at ``eta`` (for ``mass`` and
    ``pert`` it already includes the power ``eta^leading_power``).
    ``correction_coeff * eta^correction_power`` is the first displayed
    correction; for ``pert`` the h0 part is the displayed term and
    ``next_coeff * eta^next_power`` the Delta h / Scal part.
    """

    term: str
    eta: float
    leading: float
    leading_power: float
    correction_coeff: float
    correction_power: float
    next_coeff: float = 0.0
    next_power: float = math.nan
    quadrature_value: float = math.nan

    @property
    def correction(self):
        return self.correction_coeff * self.eta**self.correction_power

    @property
    def rel_err(self):
        if math.isnan(self.quadrature_value) or self.leading == 0.0:
            return math.nan
        return abs(self.quadrature_value - self.leading) / abs(self.leading)

    def as_dict(self):
        d = asdict(self)
        d["correction"] = self.correction
        d["rel_err"] = self.rel_err
        return d


def _coefficients(spec):
    n, p, q = spec.n, spec.p, spec.q
    x = spec.x0
    s = 1.0 - 1.0 / p
    C = sc.bubble_constant(n, p)
    omega = sc.sphere_area(n)
    I_base = sc.base_integral(n, p)
    fpow = x.f0 ** (1.0 - n / p)
    grad = C**p * ((n - p) / (p - 1.0)) ** p * fpow * omega * (p - 1.0) / p * I_base
    crit = C ** critical_exponent(n, p) * fpow * omega * (n - p) / (n * p) * I_base
    out = {"grad": grad, "crit": crit, "s": s, "omega": omega, "I_base": I_base, "C": C}
    try:
        out["mass"] = (p - 1.0) / p * C**p * x.a0 * fpow * omega * sc.ratio_b(n, p) * I_base
    except DomainError:
        out["mass"] = math.nan
    P = (n / p - 1.0) * (q + 1.0)
    out["pert_pow"] = (n * p - (n - p) * (q + 1.0)) * s / p
    try:
        out["pert"] = (
            (p - 1.0) / p * C ** (q + 1.0) * x.f0 ** ((p - n) * (q + 1.0) / p**2)
            * omega * sc.beta_integral(P, n * s - 1.0)
        )
    except DomainError:
        out["pert"] = math.nan
    return out


def expansion_terms(spec, params):
    """Analytic expansions of the four bubble energy integrals.

    Returns reports for ``int |grad psi|^p``, ``int a psi^p``,
    ``int f psi^p*`` and ``int h psi^(q+1)``.
    """
    n, p, q = spec.n, spec.p, spec.q
    x = spec.x0
    eta = params.eta
    k = _coefficients(spec)
    s = k["s"]
    two = 2.0 * s
    reports = []

    a_ratio = sc.ratio_a(n, p) if n > 3 * p - 2 else math.nan
    g_corr = -k["grad"] * x.scal0 / (6.0 * n) * a_ratio if x.scal0 else 0.0
    reports.append(ExpansionReport("grad", eta, k["grad"], 0.0, g_corr, two))

    m = k["mass"]
    reports.append(ExpansionReport("mass", eta, m * eta ** (p - 1.0), p - 1.0, m, p - 1.0))

    bracket = x.lap_f0 / (2.0 * n * x.f0) + x.scal0 / (6.0 * n)
    c_corr = -k["crit"] * bracket * sc.ratio_c(n, p) if bracket else 0.0
    reports.append(ExpansionReport("crit", eta, k["crit"], 0.0, c_corr, two))

    pw = k["pert_pow"]
    hb = x.lap_h0 / (2.0 * n) + x.h0 * x.scal0 / (6.0 * n)
    nxt = -k["pert"] * hb * sc.ratio_e(n, p, q) if hb else 0.0
    lead = k["pert"] * x.h0
    reports.append(ExpansionReport("pert", eta, lead * eta**pw, pw, lead, pw, nxt, pw + two))
    return reports


def quadrature_terms(spec, params, epsrel=1e-11):
    """Flat-space quadrature of the four integrals (constant a0, f0, h0).

    Variable coefficients enter through their second-order Taylor model
    ``c0 - lap_c0 r^2 / (2n)`` (geometer's sign), which is what the
    expansion resolves.
    """
    n, p, q = spec.n, spec.p, spec.q
    x = spec.x0
    omega = sc.sphere_area(n)
    pstar = critical_exponent(n, p)
    scale = params.eta ** ((p - 1.0) / p)
    R = params.delta

    def rad(fn):
        return omega * radial_integral(lambda r: fn(r) * r ** (n - 1), R, scale, epsrel)

    def psi(r):
        return max(psi_value(r, params, spec), 0.0)

    vals = {
        "grad": rad(lambda r: abs(psi_derivative(r, params, spec)) ** p),
        "mass": x.a0 * rad(lambda r: psi(r) ** p),
        "crit": rad(lambda r: (x.f0 - x.lap_f0 * r * r / (2 * n)) * psi(r) ** pstar),
        "pert": rad(lambda r: (x.h0 - x.lap_h0 * r * r / (2 * n)) * psi(r) ** (q + 1.0)),
    }
    return vals


def expansion_with_quadrature(spec, params):
    """Expansion reports with ``quadrature_value`` filled in."""
    quad = quadrature_terms(spec, params)
    return [replace(r, quadrature_value=quad[r.term]) for r in expansion_terms(spec, params)]


def _value(report):
    # leading plus all displayed corrections, evaluated at the report's eta
    total = report.leading
    if report.term in ("grad", "crit"):
        total += report.correction
    if report.term == "pert" and report.next_coeff:
        total += report.next_coeff * report.eta**report.next_power
    return total


def F_H_terms(t, spec, params):
    """Correction terms F and H of ``p J(t psi)`` at ``t``.

    ``F`` gathers the curvature, a0 and Delta f corrections, ``H`` the h
    perturbation; ``p J(t psi) ~ phi(t) K^-n f0^(1-n/p) + F + H``.
    Returns a dict with ``F``, ``H`` and their signs.
    """
    p, q = spec.p, spec.q
    pstar = critical_exponent(spec.n, p)
    reps = {r.term: r for r in expansion_terms(spec, params)}
    mass = reps["mass"].leading if spec.x0.a0 else 0.0
    F = (
        t**p * (reps["grad"].correction + mass)
        - (p / pstar) * t**pstar * reps["crit"].correction
    )
    H = -(p / (q + 1.0)) * t ** (q + 1.0) * _value(reps["pert"])
    return {"F": float(F), "H": float(H), "F_sign": int(np.sign(F)), "H_sign": int(np.sign(H))}


def phi(t, n, p):
    """``t^p - (p/p*) t^(p*)``, maximal at t = 1 with value p/n."""
    pstar = critical_exponent(n, p)
    return t**p - (p / pstar) * t**pstar


def sup_scan(spec, params, t_grid=None):
    """Maximise the assembled ``p J(t psi)`` over t.

    A coarse grid (512 points on [0, 2] by default) is refined by bounded
    Brent search around the best grid point; ties go to the smallest t.
    The result is compared with the per-bubble threshold
    ``(p/n) K^-n f0^(1-n/p)``.
    """
    n, p = spec.n, spec.p
    G0 = sc.sobolev_K_pow(n, p) * spec.x0.f0 ** (1.0 - n / p)

    def model(t):
        fh = F_H_terms(t, spec, params)
        return G0 * phi(t, n, p) + fh["F"] + fh["H"]

    if t_grid is None:
        t_grid = np.linspace(0.0, 2.0, 512)
    t_grid = np.asarray(t_grid, dtype=float)
    vals = np.array([model(t) for t in t_grid])
    i = int(np.argmax(vals))  # first maximiser
    lo = t_grid[max(i - 1, 0)]
    hi = t_grid[min(i + 1, len(t_grid) - 1)]
    t_star, best = t_grid[i], vals[i]
    if hi > lo:
        res = minimize_scalar(lambda t: -model(t), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        if -res.fun > best:
            t_star, best = float(res.x), float(-res.fun)
    threshold = mp_threshold(replace(spec, orbit_card=1)).scaled
    return {
        "t_star": float(t_star),
        "sup_value": float(best),
        "threshold": float(threshold),
        "below_threshold": bool(best < threshold),
    }
