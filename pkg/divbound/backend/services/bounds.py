"""Optimal lower bounds L = K* and their companions.

lower_bound_curve conjugates a sampled cgf curve with local refinement,
abs_lower_bound and ipm_cgf aggregate one-sided and class-wide bounds,
oracle_lower_bound brute-forces the primal problem on tiny supports.
"""
import math
import hashlib
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from divbound.backend.services.cgf import CgfCurve, CgfQuery, CgfSample, cgf_curve
from divbound.backend.utils.convex_core import minimize_1d
from divbound.backend.utils.csv_io import write_json, write_rows_csv
from divbound.backend.utils.errors import (
    AllInfinite,
    BadParameter,
    InsufficientSamples,
    PreconditionError,
    SupportTooLarge,
    ZeroVariance,
)
from divbound.backend.utils.extended_real import INF, ExtReal
from divbound.backend.utils.measures import pushforward
from divbound.backend.utils.parallel import map_ordered
from divbound.backend.utils.text_utils import json_number

logger = logging.getLogger(__name__)

PROVENANCES = ("conjugate-of-cgf", "oracle", "closed-form")

# Expansion cap for maximisers that run off the sampled t-grid
T_CAP = 1e8
# Refinement tolerance in t
T_TOL = 1e-9

ORACLE_MAX_SUPPORT = 4
ORACLE_MAX_FREE = 2
ORACLE_ROUNDS = 3
ORACLE_POINTS = {1: 201, 2: 101}
ORACLE_WINDOW = {1: 2, 2: 4}


@dataclass(frozen=True)
class BoundSample:
    eps: float
    value: ExtReal
    boundary: bool = False
    t_opt: Optional[float] = None


@dataclass(frozen=True)
class BoundCurve:
    samples: Tuple[BoundSample, ...]
    provenance: str
    spec_name: str
    dist_digest: str = ""

    @property
    def eps(self):
        return np.array([s.eps for s in self.samples])

    @property
    def values(self):
        return np.array([s.value.value for s in self.samples])

    def value_at(self, eps):
        for s in self.samples:
            if s.eps == eps:
                return s.value
        raise KeyError(eps)


@dataclass(frozen=True)
class FunctionClass:
    members: Tuple = ()
    closed_under_negation: bool = False

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise PreconditionError("function class must have at least one member")

    def expanded(self):
        """Members plus negations when the class is declared closed under negation."""
        if not self.closed_under_negation:
            return list(self.members)
        out = list(self.members)
        seen = set(out)
        for g in self.members:
            neg = g.negated()
            if neg not in seen:
                out.append(neg)
                seen.add(neg)
        return out


# ------------------------------------------------------------------------------
# Conjugation of a sampled cgf
# ------------------------------------------------------------------------------
def _k_value(curve, t):
    if curve.evaluate is None:
        return INF
    return curve.evaluate(t).value


def _refine_between(curve, eps, lo, hi):
    """max over t in [lo, hi] of t*eps - K(t); K convex so this is a 1-D convex problem."""
    def objective(t):
        return _k_value(curve, t) - t * eps

    try:
        t, val = minimize_1d(objective, (lo, hi), tol=T_TOL, lower_limit=lo, upper_limit=hi)
    except AllInfinite:
        return None, -INF
    return t, -val.value


def _run_off_edge(curve, eps, t_edge, t_inner, best):
    """
    Follow the maximiser past the last finite sample.

    Returns:
        (value, t_opt, boundary)
    """
    direction = 1.0 if t_edge > t_inner else -1.0
    step = max(abs(t_edge - t_inner), 1e-3)
    before_t, prev_t, prev_v = t_inner, t_edge, best
    last_gain = None
    while abs(prev_t) < T_CAP:
        step *= 2.0
        t = t_edge + direction * step
        k = _k_value(curve, t)
        if math.isinf(k):
            # K leaves its domain between prev_t and t
            t_ref, v_ref = _refine_between(curve, eps, min(before_t, t), max(before_t, t))
            if v_ref > prev_v:
                return v_ref, t_ref, False
            return prev_v, prev_t, False
        v = t * eps - k
        if v <= prev_v:
            t_ref, v_ref = _refine_between(curve, eps, min(before_t, t), max(before_t, t))
            if v_ref > prev_v:
                return v_ref, t_ref, False
            return prev_v, prev_t, False
        gain = v - prev_v
        if gain <= 1e-12 * (1.0 + abs(v)):
            return v, t, True
        if last_gain is not None and gain >= last_gain:
            logger.debug("lower_bound_curve: eps=%g outside dom L (gains not shrinking)", eps)
            return INF, None, False
        last_gain = gain
        before_t, prev_t, prev_v = prev_t, t, v
    logger.warning("lower_bound_curve: eps=%g maximiser not attained below |t|=%g; flagged", eps, T_CAP)
    return prev_v, prev_t, True


def _conjugate_at(curve, finite, eps):
    if eps == 0.0:
        return BoundSample(eps=0.0, value=ExtReal(0.0), boundary=False, t_opt=0.0)
    ts = np.array([s.t for s in finite])
    ks = np.array([s.k.value for s in finite])
    vals = ts * eps - ks
    i = int(np.argmax(vals))
    best, t_best = float(vals[i]), float(ts[i])
    boundary = False

    if curve.evaluate is not None:
        at_right = i == len(ts) - 1 and eps > 0
        at_left = i == 0 and eps < 0
        if at_right or at_left:
            inner = ts[i - 1] if at_right else ts[i + 1]
            value, t_opt, boundary = _run_off_edge(curve, eps, ts[i], inner, best)
            if value > best:
                best, t_best = value, t_opt
        else:
            lo = ts[max(i - 1, 0)]
            hi = ts[min(i + 1, len(ts) - 1)]
            t_ref, v_ref = _refine_between(curve, eps, lo, hi)
            if v_ref > best:
                best, t_best = v_ref, t_ref

    value = ExtReal(max(best, 0.0)) if math.isfinite(best) else ExtReal.inf()
    return BoundSample(eps=float(eps), value=value, boundary=boundary, t_opt=t_best)


def lower_bound_curve(curve, eps_grid, max_workers=None):
    """
    L(eps) = sup_t {t*eps - K(t)} from a sampled cgf curve.

    The supremum over samples is refined with extra cgf evaluations around
    the maximising t. A maximiser that never settles is reported with
    boundary=True (or +inf when eps lies outside dom L).

    Args:
        curve: CgfCurve
        eps_grid: Iterable of eps values

    Returns:
        BoundCurve with provenance conjugate-of-cgf
    """
    finite = curve.finite_samples()
    if len(finite) < 3:
        raise InsufficientSamples(f"need at least 3 finite cgf samples, got {len(finite)}")
    eps_grid = [float(e) for e in eps_grid]
    samples = tuple(map_ordered(lambda e: _conjugate_at(curve, finite, e), eps_grid, max_workers=max_workers))
    flagged = sum(s.boundary for s in samples)
    if flagged:
        logger.warning("lower_bound_curve %s: %d boundary value(s) flagged", curve.spec_name, flagged)
    return BoundCurve(
        samples=samples,
        provenance="conjugate-of-cgf",
        spec_name=curve.spec_name,
        dist_digest=curve.dist_digest,
    )


def abs_lower_bound(curve_plus, curve_minus, eps_grid, max_workers=None):
    """min{L_g(eps), L_{-g}(eps)} for eps >= 0."""
    eps_grid = [float(e) for e in eps_grid]
    if any(e < 0 for e in eps_grid):
        raise PreconditionError("abs_lower_bound takes eps >= 0")
    plus = lower_bound_curve(curve_plus, eps_grid, max_workers=max_workers)
    minus = lower_bound_curve(curve_minus, eps_grid, max_workers=max_workers)
    samples = []
    for a, b in zip(plus.samples, minus.samples):
        pick = a if a.value <= b.value else b
        samples.append(BoundSample(eps=a.eps, value=pick.value, boundary=a.boundary or b.boundary, t_opt=pick.t_opt))
    return BoundCurve(
        samples=tuple(samples),
        provenance="conjugate-of-cgf",
        spec_name=plus.spec_name,
        dist_digest=plus.dist_digest,
    )


# ------------------------------------------------------------------------------
# Function classes
# ------------------------------------------------------------------------------
def ipm_cgf(spec, dists, ts, range_overrides=None, max_workers=None):
    """
    Pointwise supremum of the member cgf curves.

    Args:
        spec: PhiSpec
        dists: Nonempty list of PushforwardDist, one per (g, nu) pair
        ts: Sorted t-grid containing 0

    Returns:
        CgfCurve whose evaluate() is the supremum of the member evaluators
    """
    dists = list(dists)
    if not dists:
        raise PreconditionError("ipm_cgf needs at least one distribution")
    overrides = list(range_overrides) if range_overrides is not None else [None] * len(dists)
    curves = [
        cgf_curve(CgfQuery(spec, d, o), ts, max_workers=max_workers)
        for d, o in zip(dists, overrides)
    ]
    if len(curves) == 1:
        return curves[0]

    samples = []
    for column in zip(*(c.samples for c in curves)):
        top = max(column, key=lambda s: s.k)
        samples.append(CgfSample(t=top.t, k=top.k, lambda_opt=top.lambda_opt))

    evaluators = [c.evaluate for c in curves]

    def evaluate(t):
        return max(ev(t) for ev in evaluators)

    digest = hashlib.sha256("|".join(c.dist_digest for c in curves).encode("utf-8")).hexdigest()
    return CgfCurve(samples=tuple(samples), spec_name=spec.label, dist_digest=digest, evaluate=evaluate)


def ipm_cgf_from_class(spec, nu, fclass, ts, max_workers=None):
    """ipm_cgf over the pushforwards of nu through every member of a FunctionClass."""
    dists = [pushforward(nu, g) for g in fclass.expanded()]
    return ipm_cgf(spec, dists, ts, max_workers=max_workers)


# ------------------------------------------------------------------------------
# Brute-force oracle
# ------------------------------------------------------------------------------
@dataclass
class _OracleProblem:
    """Primal problem after eliminating the two linear constraints."""
    phi: Callable
    nu_w: np.ndarray
    g: np.ndarray
    slope: float
    pivot_lo: int
    pivot_hi: int
    free: list
    target: float
    has_singular: bool

    def objective(self, free_values):
        """D(mu || nu) for an (m, k) array of free coordinates; +inf when infeasible."""
        free_values = np.atleast_2d(free_values)
        m = free_values.shape[0]
        n = self.g.size
        mu = np.zeros((m, n))
        for j, idx in enumerate(self.free):
            mu[:, idx] = free_values[:, j]
        rest_mass = 1.0 - mu.sum(axis=1)
        rest_moment = self.target - mu @ self.g
        g_lo, g_hi = self.g[self.pivot_lo], self.g[self.pivot_hi]
        mu_hi = (rest_moment - rest_mass * g_lo) / (g_hi - g_lo)
        mu_lo = rest_mass - mu_hi
        mu[:, self.pivot_hi] = mu_hi
        mu[:, self.pivot_lo] = mu_lo

        feasible = np.all(mu >= -1e-13, axis=1)
        mu = np.clip(mu, 0.0, None)
        n_reg = self.nu_w.size
        ratio = mu[:, :n_reg] / self.nu_w
        total = (self.phi.values(ratio) * self.nu_w).sum(axis=1)
        if self.has_singular:
            total = total + mu[:, n_reg] * self.slope
        return np.where(feasible, total, INF)


def _grid_search(problem):
    k = len(problem.free)
    if k == 0:
        return float(problem.objective(np.zeros((1, 0)))[0])
    points = ORACLE_POINTS[k]
    window = ORACLE_WINDOW[k]
    lo = np.zeros(k)
    hi = np.ones(k)
    best_val, best_x = INF, None
    for round_no in range(ORACLE_ROUNDS + 1):
        axes = [np.linspace(lo[j], hi[j], points) for j in range(k)]
        mesh = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=1)
        vals = problem.objective(mesh)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_x = float(vals[i]), mesh[i]
        if not math.isfinite(best_val):
            return INF
        step = (hi - lo) / (points - 1)
        lo = np.maximum(best_x - window * step, 0.0)
        hi = np.minimum(best_x + window * step, 1.0)
        logger.debug("oracle round %d: best %.12g, step %s", round_no, best_val, step)
    return best_val


def oracle_lower_bound(spec, nu, g, eps, support_cap=ORACLE_MAX_SUPPORT, g_sing=None):
    """
    inf{D(mu || nu) : mu probability, mu(g) - nu(g) = eps} by grid search.

    mu ranges over nu's support, plus one singular atom carrying value
    g_sing when phi'(inf) is finite. The two linear constraints fix the
    coordinates at argmin g and argmax g; at most two coordinates stay free.

    Returns:
        ExtReal (+inf when the constraint set is empty)
    """
    if support_cap > ORACLE_MAX_SUPPORT:
        raise BadParameter(f"support_cap is at most {ORACLE_MAX_SUPPORT}")
    ids = [pid for pid, w in nu.atoms if w > 0]
    if len(ids) > support_cap:
        raise SupportTooLarge(f"support of nu has {len(ids)} atoms, cap is {support_cap}")
    eps = float(eps)
    if eps == 0.0:
        return ExtReal(0.0)

    nu_w = np.array([nu.weight_of(pid) for pid in ids])
    gv = np.array([g.value_of(pid) for pid in ids])
    slope = spec.slope_inf.value
    has_singular = math.isfinite(slope)
    g_all = gv
    if has_singular:
        if g_sing is None:
            g_sing = float(np.max(gv)) if eps >= 0 else float(np.min(gv))
        g_all = np.concatenate([gv, [float(g_sing)]])

    pivot_lo, pivot_hi = int(np.argmin(g_all)), int(np.argmax(g_all))
    if g_all[pivot_hi] == g_all[pivot_lo]:
        return ExtReal.inf()
    free = [i for i in range(g_all.size) if i not in (pivot_lo, pivot_hi)]
    if len(free) > ORACLE_MAX_FREE:
        raise SupportTooLarge(
            f"oracle handles at most {ORACLE_MAX_FREE} free coordinates, got {len(free)}"
        )
    problem = _OracleProblem(
        phi=spec.phi,
        nu_w=nu_w,
        g=g_all,
        slope=slope,
        pivot_lo=pivot_lo,
        pivot_hi=pivot_hi,
        free=free,
        target=float(np.dot(nu_w, gv)) + eps,
        has_singular=has_singular,
    )
    value = _grid_search(problem)
    return ExtReal(value) if math.isfinite(value) else ExtReal.inf()


def oracle_curve(spec, nu, g, eps_grid, support_cap=ORACLE_MAX_SUPPORT):
    samples = tuple(
        BoundSample(eps=float(e), value=oracle_lower_bound(spec, nu, g, e, support_cap=support_cap))
        for e in eps_grid
    )
    return BoundCurve(samples=samples, provenance="oracle", spec_name=spec.label)


# ------------------------------------------------------------------------------
# Closed forms and certificates
# ------------------------------------------------------------------------------
def hcr_bound(nu_dist, eps):
    """Hammersley-Chapman-Robbins: chi2(mu || nu) >= eps^2 / Var."""
    var = nu_dist.var
    if var <= 0.0:
        raise ZeroVariance("HCR bound needs a distribution with positive variance")
    return float(eps) ** 2 / var


def hcr_curve(nu_dist, eps_grid):
    samples = tuple(BoundSample(eps=float(e), value=ExtReal(hcr_bound(nu_dist, e))) for e in eps_grid)
    return BoundCurve(samples=samples, provenance="closed-form", spec_name="chi2", dist_digest=nu_dist.digest)


def subgaussian_certificate(curve, sigma2, tol=1e-12):
    """
    True iff K(t) <= sigma2 t^2 / 2 at every sample.

    An infinite sample is a violation: no quadratic envelope covers it.
    """
    for s in curve.samples:
        if s.k.is_pos_inf:
            return False
        if s.k.value > 0.5 * sigma2 * s.t ** 2 + tol * (1.0 + abs(s.k.value)):
            return False
    return True


def min_subgaussian_sigma2(curve):
    """Smallest sigma2 passing subgaussian_certificate on the sampled grid (+inf if none)."""
    best = 0.0
    for s in curve.samples:
        if s.t == 0.0:
            continue
        if s.k.is_pos_inf:
            return INF
        best = max(best, 2.0 * s.k.value / s.t ** 2)
    return best


# ------------------------------------------------------------------------------
# Output
# ------------------------------------------------------------------------------
def write_bound_csv(path, curve):
    rows = [(s.eps, s.value, s.boundary, curve.provenance) for s in curve.samples]
    write_rows_csv(path, ["eps", "L", "boundary", "provenance"], rows)


def bound_summary(curve, cgf_curve_=None):
    """JSON summary {spec, dist_digest, subgaussian_sigma2_min, ...}."""
    sigma2 = min_subgaussian_sigma2(cgf_curve_) if cgf_curve_ is not None else None
    return {
        "spec": curve.spec_name,
        "dist_digest": curve.dist_digest,
        "provenance": curve.provenance,
        "subgaussian_sigma2_min": json_number(sigma2),
        "samples": [
            {"eps": s.eps, "L": json_number(s.value), "boundary": s.boundary}
            for s in curve.samples
        ],
    }


def write_bound_json(path, curve, cgf_curve_=None):
    write_json(path, bound_summary(curve, cgf_curve_))
