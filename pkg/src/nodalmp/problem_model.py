"""Problem description and the checkable hypotheses on it.

The equation is

    Delta_p u + a |u|^(p-2) u = f |u|^(p*-2) u + h |u|^(q-1) u

with the geometer's sign ``Delta_p u = -div(|grad u|^(p-2) grad u)``; the
same sign is used for the pointwise Laplacians ``lap_f0`` and ``lap_h0``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace, asdict
import math
import os

import numpy as np

from . import fem
from .errors import DomainError, StructuralError
from .mesh_domain import h_free_mask, project_H
from .special_constants import sobolev_K_pow

__all__ = [
    "CoefficientField",
    "X0Data",
    "ProblemSpec",
    "ConditionReport",
    "ThresholdPair",
    "WindowReport",
    "critical_exponent",
    "check_conditions_C",
    "mp_threshold",
    "exponent_windows",
    "coercivity_estimate",
]

P_TWO_TOL = 1e-12


# --------------------------------------------------------------------------
# coefficient fields


def _poly(coeffs, r):
    out = np.zeros_like(r)
    for c in reversed(coeffs):
        out = out * r + c
    return out


def _dpoly(coeffs):
    return [k * c for k, c in enumerate(coeffs)][1:] or [0.0]


@dataclass(frozen=True)
class CoefficientField:
    """A coefficient a, f or h.

    ``kind`` is one of

    ``constant``         params ``{"value": c}``
    ``radial_poly``      params ``{"coeffs": [c0, c1, ...], "center": [...]}``,
                         value ``sum_k c_k r^k`` with ``r = |x - center|``
    ``radial_rational``  params ``{"num": [...], "den": [...], "center": [...]}``
    ``tabulated``        params ``{"values": [...]}``, one value per mesh node

    Closed-form kinds also provide ``x . grad c`` for the Pohozaev identity.
    """

    kind: str
    params: dict = field(default_factory=dict)

    KINDS = ("constant", "radial_poly", "radial_rational", "tabulated")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"unknown coefficient kind {self.kind!r}", "kind", self.kind)

    @classmethod
    def constant(cls, value):
        return cls("constant", {"value": float(value)})

    @classmethod
    def from_dict(cls, data):
        return cls(data["kind"], dict(data.get("params", {})))

    def to_dict(self):
        return {"kind": self.kind, "params": self.params}

    @property
    def closed_form(self):
        return self.kind != "tabulated"

    def _radius(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        center = np.zeros(pts.shape[1])
        if "center" in self.params:
            c = np.asarray(self.params["center"], dtype=float)
            center[: len(c)] = c[: pts.shape[1]]
        d = pts - center
        return pts, d, np.sqrt(np.sum(d * d, axis=1))

    def __call__(self, points):
        """Values at the rows of ``points`` (tabulated: the stored values)."""
        if self.kind == "tabulated":
            vals = np.asarray(self.params["values"], dtype=float)
            n = np.atleast_2d(points).shape[0]
            if len(vals) != n:
                raise DomainError(
                    f"tabulated field has {len(vals)} values for {n} points", "values", len(vals)
                )
            return vals.copy()
        pts, _, r = self._radius(points)
        if self.kind == "constant":
            return np.full(len(pts), float(self.params["value"]))
        if self.kind == "radial_poly":
            return _poly(self.params["coeffs"], r)
        return _poly(self.params["num"], r) / _poly(self.params["den"], r)

    def radial_derivative(self, r):
        """``dc/dr`` at radii ``r``; None for tabulated fields."""
        r = np.asarray(r, dtype=float)
        if self.kind == "tabulated":
            return None
        if self.kind == "constant":
            return np.zeros_like(r)
        if self.kind == "radial_poly":
            return _poly(_dpoly(self.params["coeffs"]), r)
        num, den = self.params["num"], self.params["den"]
        N, D = _poly(num, r), _poly(den, r)
        return (_poly(_dpoly(num), r) * D - N * _poly(_dpoly(den), r)) / D**2

    def x_dot_grad(self, points):
        """``<x, grad c(x)>`` at the given points; None for tabulated fields."""
        if self.kind == "tabulated":
            return None
        pts, d, r = self._radius(points)
        dc = self.radial_derivative(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            val = np.where(r > 0.0, np.sum(pts * d, axis=1) / np.where(r > 0, r, 1.0) * dc, 0.0)
        return val


# --------------------------------------------------------------------------
# problem specification


@dataclass(frozen=True)
class X0Data:
    """Pointwise data at the concentration point x_o."""

    a0: float = 0.0
    f0: float = 1.0
    h0: float = 0.0
    lap_f0: float = 0.0
    lap_h0: float = 0.0
    scal0: float = 0.0

    def as_dict(self):
        return asdict(self)


def critical_exponent(n, p):
    """``p* = np / (n - p)``."""
    if not 1.0 < p < n:
        raise DomainError(f"need 1 < p < n, got n={n}, p={p}", "p", p)
    return n * p / (n - p)


@dataclass(frozen=True)
class ProblemSpec:
    """Immutable problem description.

    ``epsilon`` is the subcritical defect (the solver uses the exponent
    ``p* - epsilon``), ``epsilon_max`` the bound eps_o with
    ``epsilon <= eps_o <= N - q`` and ``N = p* - 1``. ``orbit_card`` may be
    ``math.inf``.
    """

    n: int
    p: float
    q: float
    epsilon: float = 0.0
    a_field: CoefficientField = field(default_factory=lambda: CoefficientField.constant(0.0))
    f_field: CoefficientField = field(default_factory=lambda: CoefficientField.constant(1.0))
    h_field: CoefficientField = field(default_factory=lambda: CoefficientField.constant(0.0))
    x0: X0Data = field(default_factory=X0Data)
    orbit_card: float = 1
    epsilon_max: float = None

    def __post_init__(self):
        n, p, q = self.n, self.p, self.q
        if int(n) != n or n < 2:
            raise DomainError(f"dimension n must be an integer >= 2, got {n}", "n", n)
        pstar = critical_exponent(n, p)
        if not p - 1.0 < q < pstar - 1.0:
            raise DomainError(f"q must lie in (p-1, p*-1) = ({p - 1}, {pstar - 1}), got {q}", "q", q)
        if self.epsilon < 0.0:
            raise DomainError(f"epsilon must be >= 0, got {self.epsilon}", "epsilon", self.epsilon)
        N = pstar - 1.0
        if self.epsilon_max is None:
            object.__setattr__(self, "epsilon_max", N - q)
        if not self.epsilon <= self.epsilon_max <= N - q + 1e-12:
            raise DomainError(
                f"need epsilon <= epsilon_max <= N - q = {N - q}, got "
                f"epsilon={self.epsilon}, epsilon_max={self.epsilon_max}",
                "epsilon_max",
                self.epsilon_max,
            )
        if not self.x0.f0 > 0.0:
            raise DomainError(f"f must be positive, got f0={self.x0.f0}", "f0", self.x0.f0)
        if self.f_field.kind == "constant" and not self.f_field.params["value"] > 0.0:
            raise DomainError("f must be positive", "f", self.f_field.params["value"])
        card = self.orbit_card
        if not (card == math.inf or (int(card) == card and card >= 1)):
            raise DomainError(f"orbit_card must be a positive integer or inf, got {card}", "orbit_card", card)

    @property
    def critical(self):
        return critical_exponent(self.n, self.p)

    @property
    def exponent(self):
        """Nonlinearity exponent actually used, ``p* - epsilon``."""
        return self.critical - self.epsilon

    @property
    def N(self):
        return self.critical - 1.0

    def with_epsilon(self, epsilon):
        return replace(self, epsilon=epsilon)

    def tabulate(self, mesh):
        """Nodal values of (a, f, h) on ``mesh``; checks f > 0."""
        pts = mesh.positions()
        a, f, h = self.a_field(pts), self.f_field(pts), self.h_field(pts)
        if np.any(f <= 0.0):
            i = int(np.argmin(f))
            raise DomainError(f"f must be positive on the mesh; f = {f[i]} at node {i}", "f", f[i])
        return a, f, h

    def tabulate_quadrature(self, mesh):
        """Values of (a, f, h) at the element quadrature points, shape (E, nq)."""
        rule = fem.quadrature_rule(mesh)
        shape = rule.weights.shape
        out = []
        for fld in (self.a_field, self.f_field, self.h_field):
            if fld.closed_form:
                vals = fld(rule.points)
            else:
                vals = rule.interpolate(mesh, fld(mesh.positions()))
            out.append(vals.reshape(shape))
        if np.any(out[1] <= 0.0):
            raise DomainError("f must be positive at every quadrature point", "f", float(out[1].min()))
        return tuple(out)

    def to_dict(self):
        return {
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "epsilon": self.epsilon,
            "epsilon_max": self.epsilon_max,
            "fields": {
                "a": self.a_field.to_dict(),
                "f": self.f_field.to_dict(),
                "h": self.h_field.to_dict(),
            },
            "x0": self.x0.as_dict(),
            "orbit_card": "inf" if self.orbit_card == math.inf else int(self.orbit_card),
        }

    @classmethod
    def from_dict(cls, data):
        fields = data.get("fields", {})
        kw = {}
        for key in ("a", "f", "h"):
            if key in fields:
                kw[f"{key}_field"] = CoefficientField.from_dict(fields[key])
        card = data.get("orbit_card", 1)
        return cls(
            n=data["n"],
            p=float(data["p"]),
            q=float(data["q"]),
            epsilon=float(data.get("epsilon", 0.0)),
            x0=X0Data(**data.get("x0", {})),
            orbit_card=math.inf if card in ("inf", math.inf) else int(card),
            epsilon_max=data.get("epsilon_max"),
            **kw,
        )


# --------------------------------------------------------------------------
# conditions (C), windows, threshold


@dataclass(frozen=True)
class ConditionReport:
    case_id: str
    applicable: bool
    satisfied: bool
    lhs_value: float
    rhs_value: float
    indeterminate: bool = False
    note: str = ""


def check_conditions_C(spec):
    """Evaluate the four sub-conditions of (C) at x_o.

    (i)   1 < p < 2:      a0 < 0
    (ii)  p = 2:          4(n-1)/(n-2) a0 - scal0 + (n-4) lap_f0/f0 < 0
    (iii) 2 < p < n/2:    lap_f0/f0 < p/(n-3p+2) scal0   (indeterminate if n-3p+2 <= 0)
    (iv)  always:         h0 = 0 and lap_h0 <= 0

    For n/2 <= p < n none of (i)-(iii) applies.
    """
    n, p, x = spec.n, spec.p, spec.x0
    if not x.f0 > 0.0:
        raise DomainError("f0 must be positive", "f0", x.f0)
    is_two = abs(p - 2.0) <= P_TWO_TOL
    out = []

    app = 1.0 < p < 2.0 and not is_two
    out.append(ConditionReport("i", app, app and x.a0 < 0.0, x.a0, 0.0))

    lhs = 4.0 * (n - 1) / (n - 2) * x.a0 - x.scal0 + (n - 4) * x.lap_f0 / x.f0
    out.append(ConditionReport("ii", is_two, is_two and lhs < 0.0, lhs, 0.0))

    app = 2.0 < p < n / 2.0 and not is_two
    denom = n - 3.0 * p + 2.0
    lhs = x.lap_f0 / x.f0
    if denom > 0.0:
        rhs = p / denom * x.scal0
        out.append(ConditionReport("iii", app, app and lhs < rhs, lhs, rhs))
    else:
        out.append(ConditionReport(
            "iii", app, False, lhs, math.nan, indeterminate=app,
            note=f"n-3p+2 = {denom:g} <= 0, the comparison is undefined",
        ))

    ok = x.h0 == 0.0 and x.lap_h0 <= 0.0
    out.append(ConditionReport("iv", True, ok, x.h0, x.lap_h0))
    return out


@dataclass(frozen=True)
class ThresholdPair:
    """Mountain-pass threshold in both normalisations.

    ``raw`` is ``Card K^-n f0^(1-n/p)``; ``scaled`` carries the extra ``p/n``.
    ``infinite`` marks Card = inf, in which case both values are inf.
    """

    raw: float
    scaled: float
    infinite: bool = False


def mp_threshold(spec):
    n, p, f0 = spec.n, spec.p, spec.x0.f0
    if not f0 > 0.0:
        raise DomainError("f0 must be positive", "f0", f0)
    if spec.orbit_card == math.inf:
        return ThresholdPair(math.inf, math.inf, True)
    raw = spec.orbit_card * sobolev_K_pow(n, p) * f0 ** (1.0 - n / p)
    return ThresholdPair(raw, raw * p / n, False)


@dataclass(frozen=True)
class WindowReport:
    """Windows for ``q + 1``.

    ``basic`` is (p, p*); ``perturbation`` is ((n(p-1)+2p)/(n-p), p*), the
    range in which the h-term beats the bubble corrections. ``effective`` is
    their intersection: the perturbation window is contained in the basic
    one only when n <= p^2 + 2p.
    """

    q_plus_1: float
    basic: tuple
    in_basic: bool
    perturbation: tuple
    in_perturbation: bool
    effective: tuple
    in_effective: bool


def exponent_windows(spec_or_n, p=None, q=None):
    """Window membership for ``q + 1``; accepts a ProblemSpec or (n, p, q)."""
    if p is None:
        n, p, q = spec_or_n.n, spec_or_n.p, spec_or_n.q
    else:
        n = spec_or_n
    pstar = critical_exponent(n, p)
    t = q + 1.0
    lo = (n * (p - 1.0) + 2.0 * p) / (n - p)
    eff = (max(p, lo), pstar)
    return WindowReport(
        q_plus_1=t,
        basic=(p, pstar),
        in_basic=p < t < pstar,
        perturbation=(lo, pstar),
        in_perturbation=lo < t < pstar,
        effective=eff,
        in_effective=eff[0] < t < pstar,
    )


# --------------------------------------------------------------------------
# coercivity


_SIGMA = 1e-8


def _quotient(mesh, u, p, a):
    G = fem.grad_power(mesh, u, p, _SIGMA)
    L = fem.quad_power(mesh, u, p)
    A = G + fem.quad_power(mesh, u, p, a)
    nrm = G ** (1.0 / p) + L ** (1.0 / p)
    return A / nrm**p, A, G, L, nrm


def _quotient_grad(mesh, u, p, a, parts):
    _, A, G, L, nrm = parts
    dG = fem.grad_power_derivative(mesh, u, p, _SIGMA)  # d/du of G/p
    dL = fem.quad_power_derivative(mesh, u, p)
    dA = p * (dG + fem.quad_power_derivative(mesh, u, p, a))
    dN = G ** (1.0 / p - 1.0) * dG + L ** (1.0 / p - 1.0) * dL
    return dA / nrm**p - p * A / nrm ** (p + 1.0) * dN


def _minimise_quotient(mesh, symmetry, riesz, p, a, u, iterations):
    mask = h_free_mask(mesh, symmetry)

    def proj(v):
        v = project_H(v, symmetry)
        v[~mask] = 0.0
        return v

    u = proj(u)
    u /= fem.sobolev_norm(mesh, u, p)
    parts = _quotient(mesh, u, p, a)
    step = 1.0
    for _ in range(iterations):
        g = _quotient_grad(mesh, u, p, a, parts)
        d = -proj(riesz.solve(g))
        slope = float(g @ d)
        if slope > -1e-16:
            break
        step = min(1.0, 2.0 * step)
        while step > 1e-14:
            trial = u + step * d
            trial /= fem.sobolev_norm(mesh, trial, p)
            tparts = _quotient(mesh, trial, p, a)
            if tparts[0] <= parts[0] + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            break
        u, parts = trial, tparts
    return parts[0]


def coercivity_estimate(spec, mesh, symmetry, starts=8, iterations=500, seed=0, threads=None):
    """Numerical estimate of the coercivity constant on discrete H.

    Minimises ``int (|grad u|^p + a |u|^p) / ||u||_{1,p}^p`` by projected,
    Riesz-preconditioned descent from ``starts`` seeded random fields. The
    minimum found is an upper bound on the discrete infimum, so a value
    <= 0 means coercivity is not verified. Starts run on up to
    ``threads`` workers (default ``$NODALMP_THREADS`` or 1); the reduction
    is a minimum in start order, so the result does not depend on it.
    """
    mask = h_free_mask(mesh, symmetry)
    if not np.any(mask):
        raise StructuralError("discrete H is trivial: the symmetry kills every degree of freedom")
    a, _, _ = spec.tabulate_quadrature(mesh)
    riesz = fem.RieszMap(mesh)
    p = spec.p

    def run(k):
        rng = np.random.default_rng([seed, k])
        u0 = rng.standard_normal(mesh.n_nodes)
        u0 = project_H(u0, symmetry)
        u0[~mask] = 0.0
        if not np.any(u0):
            u0 = project_H(mask.astype(float) * rng.standard_normal(mesh.n_nodes), symmetry)
        return _minimise_quotient(mesh, symmetry, riesz, p, a, u0, iterations)

    if threads is None:
        threads = int(os.environ.get("NODALMP_THREADS", "1") or 1)
    threads = max(1, min(threads, starts))
    if threads == 1:
        values = [run(k) for k in range(starts)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(run, range(starts)))
    return float(min(values))
