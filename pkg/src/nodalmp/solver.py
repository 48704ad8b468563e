"""Mountain-pass solver for nodal solutions on the discrete symmetric subspace.

The functional is

    J(u) = int |grad u|^p / p + a |u|^p / p - f |u|^r / r - h |u|^(q+1) / (q+1)

with ``r = p* - epsilon``. Fields are nodal P1 vectors; every iterate is
projected onto discrete H (G-invariant, tau-antisymmetric, zero on the
Dirichlet boundary) so the symmetry is kept to machine precision.
"""

from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np
from scipy.optimize import brentq

from . import fem
from .errors import ConvergenceError, MountainGeometryError, StructuralError
from .mesh_domain import h_free_mask, project_H
from .problem_model import coercivity_estimate
from .special_constants import sobolev_K_pow

__all__ = [
    "SolverControls",
    "VariationalProblem",
    "MountainPassResult",
    "energy",
    "weak_gradient",
    "rim_estimate",
    "random_direction",
    "sign_structure",
    "far_point",
    "mountain_pass",
    "nodal_rebuild",
    "continuation",
    "ContinuationResult",
    "concentration_check",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverControls:
    """Knobs of the mountain-pass iteration.

    ``path_points`` fields discretise the path; the path phase stops once
    the gradient norm at the path maximum drops below ``switch_tol`` (or
    after ``max_path_iter`` steps) and the ray phase then drives it below
    ``tol_grad``.
    """

    path_points: int = 33
    tol_grad: float = 1e-7
    switch_tol: float = 1e-3
    max_path_iter: int = 400
    max_iter: int = 3000
    armijo: float = 1e-4
    sigma: float = 1e-8
    seed: int = 0
    rim_samples: int = 16
    safety: float = 2.0

    def to_dict(self):
        return dict(self.__dict__)


class VariationalProblem:
    """Discrete J_epsilon on a mesh with a symmetry.

    Parameters
    ----------
    spec : ProblemSpec
    mesh : DomainMesh
    symmetry : SymmetrySpec
    """

    def __init__(self, spec, mesh, symmetry, sigma=1e-8):
        self.spec = spec
        self.mesh = mesh
        self.symmetry = symmetry
        self.p = spec.p
        self.r = spec.exponent
        self.q = spec.q
        self.sigma = sigma if spec.p < 2.0 else 0.0
        self.a, self.f, self.h = spec.tabulate(mesh)
        self.aq, self.fq, self.hq = spec.tabulate_quadrature(mesh)
        self.mask = h_free_mask(mesh, symmetry)
        if not np.any(self.mask):
            raise StructuralError("discrete H is trivial: the symmetry kills every degree of freedom")
        self.riesz = fem.RieszMap(mesh)

    def with_spec(self, spec):
        """Same mesh and symmetry, new spec (shares the factorisation)."""
        new = object.__new__(VariationalProblem)
        new.__dict__.update(self.__dict__)
        new.spec = spec
        new.r = spec.exponent
        new.a, new.f, new.h = spec.tabulate(self.mesh)
        new.aq, new.fq, new.hq = spec.tabulate_quadrature(self.mesh)
        return new

    # pieces -------------------------------------------------------------
    def parts(self, u):
        """(int |grad u|^p, int a|u|^p, int f|u|^r, int h|u|^(q+1))."""
        m = self.mesh
        return (
            fem.grad_power(m, u, self.p, self.sigma),
            fem.quad_power(m, u, self.p, self.aq),
            fem.quad_power(m, u, self.r, self.fq),
            fem.quad_power(m, u, self.q + 1.0, self.hq),
        )

    def energy(self, u):
        G, A, F, H = self.parts(u)
        return (G + A) / self.p - F / self.r - H / (self.q + 1.0)

    def gradient(self, u):
        """Dual vector ``<J'(u), phi_i>`` for every nodal basis function."""
        m = self.mesh
        g = (
            fem.grad_power_derivative(m, u, self.p, self.sigma)
            + fem.quad_power_derivative(m, u, self.p, self.aq)
            - fem.quad_power_derivative(m, u, self.r, self.fq)
            - fem.quad_power_derivative(m, u, self.q + 1.0, self.hq)
        )
        g[m.boundary] = 0.0
        return g

    def project(self, u):
        v = project_H(u, self.symmetry)
        v[~self.mask] = 0.0
        return v

    def sobolev_gradient(self, u, g=None):
        """Riesz representative of J'(u) in discrete H."""
        if g is None:
            g = self.gradient(u)
        return self.project(self.riesz.solve(g))

    def grad_norm(self, u, g=None):
        """Dual norm of J'(u) restricted to H, ``sqrt(g . R^-1 g)``."""
        if g is None:
            g = self.gradient(u)
        x = self.sobolev_gradient(u, g)
        return math.sqrt(max(float(g @ x), 0.0))

    def norm(self, u):
        return fem.sobolev_norm(self.mesh, u, self.p)

    # ray ----------------------------------------------------------------
    def ray_max(self, u):
        """Maximiser t* > 0 of t -> J(t u) and the value J(t* u).

        Uses ``<J'(t u), u> / t^(p-1) = A - t^(r-p) B - t^(q+1-p) C``.
        Returns ``(None, inf)`` if the ray never turns down.
        """
        G, A, F, H = self.parts(u)
        a_, b_, c_ = G + A, F, H
        p, r, q1 = self.p, self.r, self.q + 1.0

        def s(t):
            return a_ - t ** (r - p) * b_ - t ** (q1 - p) * c_

        lo = 1e-12
        if s(lo) <= 0.0:
            return None, math.inf
        hi = 1.0
        while s(hi) > 0.0:
            hi *= 2.0
            if hi > 1e12:
                return None, math.inf
        t = brentq(s, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=200)
        val = t**p * a_ / p - t**r * b_ / r - t**q1 * c_ / q1
        return t, val


def energy(u, problem):
    """Discrete J_epsilon(u)."""
    return problem.energy(u)


def weak_gradient(u, problem):
    """Dual representation of J_epsilon'(u) against the nodal basis."""
    return problem.gradient(u)


@dataclass
class MountainPassResult:
    level: float
    field: np.ndarray
    grad_norm: float
    path: list = field(default_factory=list)
    iterations: int = 0
    rim_rho: float = math.nan
    rim_radius: float = math.nan
    history: list = field(default_factory=list)
    converged: bool = True
    epsilon: float = math.nan
    norm: float = math.nan

    def summary(self):
        return {
            "level": self.level,
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "rim_rho": self.rim_rho,
            "rim_radius": self.rim_radius,
            "converged": self.converged,
            "epsilon": self.epsilon,
            "norm": self.norm,
            "max_abs": float(np.max(np.abs(self.field))),
        }


# --------------------------------------------------------------------------
# geometry of the functional


def _random_directions(problem, count, seed):
    """Smooth random fields in H (Riesz-smoothed noise), unit ||.||_{1,p}."""
    rng = np.random.default_rng([seed, 7919])
    out = []
    for _ in range(count):
        v = problem.project(problem.riesz.solve(rng.standard_normal(problem.mesh.n_nodes)))
        nv = problem.norm(v)
        if nv > 0.0:
            out.append(v / nv)
    return out


def random_direction(problem, seed=0):
    """A smooth random field in discrete H with unit ||.||_{1,p} norm."""
    dirs = _random_directions(problem, 1, seed)
    if not dirs:
        raise StructuralError("could not sample a direction in discrete H")
    return dirs[0]


def rim_estimate(problem, direction=None, controls=SolverControls(), coercivity=None):
    """Radius R and level rho > 0 with J >= rho on the sphere ||u||_{1,p} = R.

    The radius is seeded by maximising the lower bound

        P(R) = (Lambda/p) R^p - (max f / s) S_s^s R^s - (max h+ / (q+1)) S_{q+1}^(q+1) R^(q+1)

    with ``s = p* - epsilon_max`` (valid for every epsilon <= epsilon_max when
    R <= 1). Embedding constants S are sampled on discrete H and inflated by
    ``controls.safety``. J is then evaluated on sampled sphere points and R
    halved until all values are positive; ``rho`` is the smaller of the
    sampled minimum and P(R).
    """
    spec = problem.spec
    p = spec.p
    if coercivity is None:
        coercivity = coercivity_estimate(spec, problem.mesh, problem.symmetry, starts=4,
                                         iterations=200, seed=controls.seed)
    if not coercivity > 0.0:
        raise MountainGeometryError(
            f"mountain geometry not established: coercivity estimate {coercivity:.4g} <= 0"
        )
    dirs = _random_directions(problem, controls.rim_samples, controls.seed)
    if direction is not None:
        v = problem.project(np.asarray(direction, float))
        if problem.norm(v) > 0:
            dirs.append(v / problem.norm(v))
    if not dirs:
        raise StructuralError("could not sample directions in discrete H")
    s = spec.critical - spec.epsilon_max
    q1 = spec.q + 1.0
    m = problem.mesh

    def embed(power):
        vals = [fem.quad_power(m, d, power) ** (1.0 / power) for d in dirs]
        return controls.safety * max(vals)

    S_s, S_q = embed(s), embed(q1)
    fmax = float(np.max(problem.fq))
    hmax = max(float(np.max(problem.hq)), 0.0)

    def lower(R):
        return (coercivity / p * R**p - fmax / s * (S_s * R) ** s - hmax / q1 * (S_q * R) ** q1)

    grid = np.geomspace(1e-6, 1.0, 400)
    vals = np.array([lower(R) for R in grid])
    R = float(grid[int(np.argmax(vals))])
    for _ in range(60):
        sampled = min(problem.energy(R * d) for d in dirs)
        rho = min(sampled, lower(R))
        if rho > 0.0:
            return {"radius": R, "rho": float(rho), "seed_radius": float(grid[int(np.argmax(vals))]),
                    "coercivity": float(coercivity), "sampled_min": float(sampled)}
        R *= 0.5
    raise MountainGeometryError("mountain geometry not established: no positive rim found")


def far_point(problem, v, t0=1.0, t_max=1e6):
    """``t v`` with J(t v) < 0, found by doubling t."""
    v = problem.project(np.asarray(v, dtype=float))
    if not np.any(v):
        raise ValueError("far_point needs a nonzero direction in H")
    t = t0
    while t <= t_max:
        if problem.energy(t * v) < 0.0:
            return t * v
        t *= 2.0
    raise MountainGeometryError(
        f"J(t v) stayed nonnegative up to t = {t_max:g}; f positivity violated or mesh too coarse"
    )


# --------------------------------------------------------------------------
# mountain pass


def _retension(problem, path):
    """Re-space interior path fields uniformly in ||.||_{1,p} arc length."""
    seg = np.array([problem.norm(b - a) for a, b in zip(path[:-1], path[1:])])
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] <= 0.0:
        return list(path)
    targets = np.linspace(0.0, s[-1], len(path))
    out = [path[0]]
    for t in targets[1:-1]:
        k = min(int(np.searchsorted(s, t, side="right")) - 1, len(seg) - 1)
        lam = 0.0 if seg[k] == 0.0 else (t - s[k]) / seg[k]
        out.append(problem.project((1.0 - lam) * path[k] + lam * path[k + 1]))
    out.append(path[-1])
    return out


def _armijo(fun, x, d, f0, slope, c, step, max_halvings=60, noise=0.0):
    """Backtracking along ``x - step d``; ``slope`` is the squared gradient norm.

    Gives up once the required decrease falls below ``noise`` (the round-off
    level of ``fun``), where acceptance would be decided by rounding.
    """
    for _ in range(max_halvings):
        if c * step * slope < noise:
            break
        trial = x - step * d
        val = fun(trial)
        if val <= f0 - c * step * slope:
            return trial, val, step
        step *= 0.5
    return None, f0, step


def _path_phase(problem, path, controls, history):
    energies = [problem.energy(w) for w in path]
    step = 1.0
    it = 0
    i = int(np.argmax(energies))
    for it in range(1, controls.max_path_iter + 1):
        i = int(np.argmax(energies))  # lowest index on ties
        w = path[i]
        g = problem.gradient(w)
        d = problem.sobolev_gradient(w, g)
        gn2 = max(float(g @ d), 0.0)
        history.append(energies[i])
        if math.sqrt(gn2) < controls.switch_tol or i in (0, len(path) - 1):
            break
        new, val, step = _armijo(problem.energy, w, d, energies[i], gn2, controls.armijo,
                                 min(1.0, 2.0 * step))
        if new is None:
            break
        path[i] = problem.project(new)
        energies[i] = val
        cand = _retension(problem, path)
        cand_e = [problem.energy(w) for w in cand]
        if max(cand_e) <= max(energies):
            path, energies = cand, cand_e
    i = int(np.argmax(energies))
    return path, i, it


def _ray_phase(problem, u, controls, history, max_iter=None):
    """Steepest descent of Phi(u) = max_t J(t u) on discrete H.

    Returns the critical field (on its ray maximum), its energy, gradient
    norm and the iteration count.
    """
    max_iter = controls.max_iter if max_iter is None else max_iter
    t, level = problem.ray_max(u)
    if t is None:
        raise MountainGeometryError("the ray through the path maximum never turns down")
    u = t * u
    step = 1.0
    gn = math.inf

    def phi(v):
        return problem.ray_max(v)[1]

    for it in range(max_iter + 1):
        g = problem.gradient(u)
        d = problem.sobolev_gradient(u, g)
        gn2 = max(float(g @ d), 0.0)
        gn = math.sqrt(gn2)
        history.append(level)
        if gn < controls.tol_grad:
            return u, level, gn, it, True
        if it == max_iter:
            break
        trial_step = min(1.0, 2.0 * step)
        new, val, step = _armijo(phi, u, d, level, gn2, controls.armijo, trial_step,
                                 noise=64.0 * np.finfo(float).eps * abs(level))
        if new is None:
            # Near the floor the Armijo decrease drops below the round-off of
            # the level; accept the step if it lowers the gradient norm.
            step = trial_step
            cand = _gradient_fallback(problem, u, d, gn, step)
            if cand is None:
                break
            u, level = cand
            continue
        new = problem.project(new)
        t, level = problem.ray_max(new)
        u = t * new
    return u, level, gn, it, False


def _gradient_fallback(problem, u, d, gn, step, max_halvings=30):
    """Secant step on the slope of ``s -> Phi(u - s d)``.

    By the envelope theorem the slope at ``s`` is ``-t J'(t v) . d`` with
    ``v = u - s d`` on its ray maximum ``t``; it carries no cancellation,
    unlike differences of levels.
    """
    slope0 = -gn * gn
    for _ in range(max_halvings):
        new = problem.project(u - step * d)
        t, _ = problem.ray_max(new)
        if t is not None:
            slope1 = -t * float(problem.gradient(t * new) @ d)
            s = step
            if slope1 > slope0:
                s = min(step * slope0 / (slope0 - slope1), 4.0 * step)
            for trial in (s, step):
                cand_dir = problem.project(u - trial * d)
                tc, level = problem.ray_max(cand_dir)
                if tc is not None:
                    cand = tc * cand_dir
                    if problem.grad_norm(cand) < gn:
                        return cand, level
        step *= 0.5
    return None


def mountain_pass(problem, start, controls=SolverControls(), rim=None, raise_on_failure=True):
    """Mountain-pass critical point on the path class joining 0 to ``start``.

    The straight path 0 -> ``start`` (``controls.path_points`` fields) is
    deformed by descent at its maximum with arc-length re-tensioning; once
    the gradient there is below ``controls.switch_tol`` the maximum is
    refined by descent of ``max_t J(t u)``.

    Raises
    ------
    ConvergenceError
        if ``tol_grad`` is not reached; carries the level history and the
        partial result.
    """
    start = problem.project(np.asarray(start, dtype=float))
    if problem.energy(start) >= 0.0:
        raise MountainGeometryError("path end point must have negative energy")
    m = controls.path_points
    path = [problem.project(k / (m - 1.0) * start) for k in range(m)]
    history = []
    path, i, it1 = _path_phase(problem, path, controls, history)
    u, level, gn, it2, ok = _ray_phase(problem, path[i], controls, history)
    result = MountainPassResult(
        level=float(level),
        field=u,
        grad_norm=float(gn),
        path=path,
        iterations=it1 + it2,
        rim_rho=math.nan if rim is None else rim["rho"],
        rim_radius=math.nan if rim is None else rim["radius"],
        history=history,
        converged=ok,
        epsilon=problem.spec.epsilon,
        norm=problem.norm(u),
    )
    if not ok and raise_on_failure:
        raise ConvergenceError(
            f"PS sequence not converged: grad_norm {gn:.3g} > {controls.tol_grad:g} "
            f"after {result.iterations} iterations",
            history=history,
            result=result,
        )
    return result


def _surgery(u, symmetry):
    v = np.zeros_like(u)
    v[symmetry.omega1] = np.abs(u[symmetry.omega1])
    v[symmetry.omega2] = -np.abs(u[symmetry.omega2])
    return v


def sign_structure(u, symmetry, mesh, tol_zero=None):
    """Sign and zero-set diagnostics for a field on a split domain."""
    umax = float(np.max(np.abs(u)))
    tol = 1e-6 * umax if tol_zero is None else tol_zero
    interior = ~mesh.boundary
    in1 = np.zeros(len(u), bool)
    in1[symmetry.omega1] = True
    in2 = np.zeros(len(u), bool)
    in2[symmetry.omega2] = True
    zero = np.abs(u) < tol
    F = np.zeros(len(u), bool)
    F[symmetry.fixed] = True
    expected = F | mesh.boundary
    o1 = u[in1 & interior]
    o2 = u[in2 & interior]
    return {
        "min_omega1": float(o1.min()) if o1.size else math.nan,
        "max_omega2": float(o2.max()) if o2.size else math.nan,
        "zero_set": np.flatnonzero(zero).tolist(),
        "zero_set_ok": bool(np.array_equal(zero, expected)),
        "tol_zero": tol,
        "sign_ok": bool(o1.size and o1.min() > 0.0 and o2.max() < 0.0),
    }


def nodal_rebuild(result, problem, controls=SolverControls()):
    """Sign surgery |u| on Omega_1, -|u| on Omega_2, then re-descent.

    The surgery is applied to the stored path and to the critical field;
    the surgered field is refined by the ray descent. Raises
    ConvergenceError if the re-descent fails or loses the sign structure.
    """
    sym = problem.symmetry
    if sym.omega1 is None or sym.omega2 is None:
        raise StructuralError("nodal_rebuild needs the splitting Omega_1, Omega_2")
    path = [problem.project(_surgery(w, sym)) for w in result.path]
    u0 = problem.project(_surgery(result.field, sym))
    history = list(result.history)
    u, level, gn, it, ok = _ray_phase(problem, u0, controls, history)
    signs = sign_structure(u, sym, problem.mesh)
    out = replace(
        result, level=float(level), field=u, grad_norm=float(gn), path=path,
        iterations=result.iterations + it, history=history, converged=ok, norm=problem.norm(u),
    )
    if not ok:
        raise ConvergenceError("re-descent after sign surgery did not converge", history, out)
    if not signs["sign_ok"]:
        raise ConvergenceError("sign structure lost after re-descent", history, out)
    return out


# --------------------------------------------------------------------------
# continuation in epsilon


@dataclass
class ContinuationResult:
    results: list
    schedule: list
    envelope: dict
    warnings: list = field(default_factory=list)

    @property
    def levels(self):
        return [r.level for r in self.results]

    @property
    def norms(self):
        return [r.norm for r in self.results]

    @property
    def norm_drift(self):
        nv = np.array(self.norms)
        return float((nv.max() - nv.min()) / nv.min()) if len(nv) else math.nan

    def summary(self):
        return {
            "schedule": list(self.schedule),
            "levels": self.levels,
            "norms": self.norms,
            "grad_norms": [r.grad_norm for r in self.results],
            "converged": [r.converged for r in self.results],
            "norm_drift": self.norm_drift,
            "envelope": self.envelope,
            "warnings": self.warnings,
        }


def _envelope(problem, psi, schedule, levels):
    """Upper bounds for c_eps from the ray through ``psi``.

    For every t >= 0,
    ``J_eps(t psi) <= J_0(t psi) + (1/p*) max f int t^(p*-eps) | t^eps |psi|^p* - |psi|^(p*-eps) |``,
    and c_eps <= max_t J_eps(t psi), so the bound dominates every level.
    """
    spec = problem.spec
    pstar = spec.critical
    crit = problem.with_spec(spec.with_epsilon(0.0))
    t_star, c_est = crit.ray_max(psi)
    T = 4.0 * (t_star or 1.0)
    ts = np.linspace(0.0, T, 801)
    fmax = float(np.max(problem.fq))
    rule = fem.quadrature_rule(problem.mesh)
    w = rule.weights
    a = np.abs(rule.values(problem.mesh, psi))
    j0 = np.array([crit.energy(t * psi) for t in ts])
    checks = []
    for eps, lev in zip(schedule, levels):
        r = pstar - eps
        extra = np.array([t**r * float(np.sum(w * np.abs(t**eps * a**pstar - a**r))) for t in ts])
        bound = float(np.max(j0 + fmax / pstar * extra))
        checks.append({"epsilon": eps, "level": lev, "bound": bound, "ok": bool(lev <= bound + 1e-12)})
    return {"critical_level_estimate": float(c_est), "checks": checks,
            "ok": all(c["ok"] for c in checks)}


def continuation(problem, schedule, controls=SolverControls(), direction=None, drift_warn=0.5):
    """Warm-started mountain-pass solves along a decreasing epsilon schedule.

    Each solve starts from the far point along the previous critical field
    (``direction`` for the first one, default a smooth random H field).
    Non-converged solves are kept with ``converged=False``; a norm growth
    beyond ``drift_warn`` is reported as a concentration warning.
    """
    schedule = [float(e) for e in schedule]
    if any(b > a for a, b in zip(schedule[:-1], schedule[1:])):
        raise ValueError("epsilon schedule must be non-increasing")
    spec = problem.spec
    if direction is None:
        direction = _random_directions(problem, 1, controls.seed)[0]
    results, warnings = [], []
    v = np.asarray(direction, dtype=float)
    for eps in schedule:
        prob = problem.with_spec(spec.with_epsilon(eps))
        start = far_point(prob, v)
        res = mountain_pass(prob, start, controls, raise_on_failure=False)
        results.append(res)
        if not res.converged:
            warnings.append(f"epsilon={eps:g}: not converged (grad_norm {res.grad_norm:.3g})")
        v = res.field
    norms = [r.norm for r in results]
    if norms and max(norms) > (1.0 + drift_warn) * norms[0]:
        warnings.append("norm growth along the schedule: possible concentration")
    env = _envelope(problem, results[-1].field, schedule, [r.level for r in results])
    return ContinuationResult(results, schedule, env, warnings)


# --------------------------------------------------------------------------
# concentration


def concentration_check(fields, problem, radii=None, margin=0.02):
    """Local critical-mass test at every node and dyadic radius.

    For a node x and radius delta the local mass is
    ``m = sum_{|y-x|<delta, y interior} w_y f_y |u_y|^r`` and the test value
    ``K^p f(x)^(p/p*) m^((p*-p)/p*)``; a full bubble gives exactly 1, so
    nodes with value >= 1 - margin are reported as concentration
    candidates. On radial meshes the ball is replaced by the shell
    ``|r_y - r_x| < delta``, which contains it.
    """
    from scipy.spatial import cKDTree

    spec = problem.spec
    mesh = problem.mesh
    n, p = spec.n, spec.p
    pstar = spec.critical
    Kp = sobolev_K_pow(n, p) ** (-p / n)
    if radii is None:
        span = float(np.ptp(mesh.nodes, axis=0).max())
        radii = [span * 2.0 ** (-k) for k in range(1, 6)]
    if mesh.kind == "torus":
        tree = cKDTree(mesh.nodes, boxsize=1.0 + 1e-12)
    else:
        tree = cKDTree(mesh.nodes)
    interior = ~mesh.boundary
    report = []
    for u in fields:
        u = np.asarray(u, dtype=float)
        dens = np.where(interior, fem.quad_nodal_density(mesh, u, problem.r, problem.fq), 0.0)
        total = float(dens.sum())
        per_radius = []
        for delta in radii:
            nbrs = tree.query_ball_point(mesh.nodes, delta * (1.0 - 1e-12))
            mass = np.array([dens[idx].sum() for idx in nbrs])
            test = Kp * problem.f ** (p / pstar) * mass ** ((pstar - p) / pstar)
            flagged = np.flatnonzero(test >= 1.0 - margin)
            rest = np.delete(test, flagged)
            per_radius.append({
                "delta": float(delta),
                "max_test": float(test.max()),
                "argmax": int(np.argmax(test)),
                "flagged": flagged.tolist(),
                "max_mass": float(mass.max()),
                "elsewhere_max": float(rest.max()) if rest.size else 0.0,
            })
        report.append({"total_mass": total, "radii": per_radius,
                       "concentrated": any(r["flagged"] for r in per_radius)})
    return report
