"""Scalar convex-function toolkit.

Provides the ``ScalarConvexFunction`` container used for every generator and
conjugate in the package, Legendre-Fenchel conjugation (closed form when one is
registered, adaptive grid supremum otherwise), slopes at infinity, and a
golden-section minimiser that tolerates +inf values and flat minima.
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from divbound.backend.utils import config
from divbound.backend.utils.errors import (
    AllInfinite,
    EmptyDomain,
    NonConvexInput,
    UnboundedBelow,
)
from divbound.backend.utils.extended_real import INF, ExtReal, Interval

logger = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
# Relative bracket width below which equal golden-section values are rounding
# noise around a smooth minimum rather than a flat optimal region.
FLAT_TIE_WIDTH = 1e-5


@dataclass(frozen=True)
class GridPolicy:
    """Sampling policy for numeric conjugation."""
    coarse_points: int = 400
    refine_rounds: int = 3
    refine_points: int = 41
    offset_min: float = 1e-10
    offset_max: float = 1e7
    polish_iterations: int = 80
    closed_tol: float = 1e-10
    sampled_tol: float = 1e-6

    @classmethod
    def from_settings(cls):
        return cls(
            refine_rounds=config.get_int("DIVBOUND_REFINE_ROUNDS"),
            closed_tol=config.get_float("DIVBOUND_CLOSED_TOL"),
            sampled_tol=config.get_float("DIVBOUND_SAMPLED_TOL"),
        )


@dataclass(frozen=True)
class ScalarConvexFunction:
    """
    Extended-real convex function on the real line.

    ``fn`` is vectorised and may return +inf; values outside
    [dom_lo, dom_hi] (or on an open endpoint) are forced to +inf.
    """
    fn: Callable[[np.ndarray], np.ndarray]
    dom_lo: float = -INF
    dom_hi: float = INF
    lo_closed: bool = True
    hi_closed: bool = True
    slope_plus: Optional[float] = None
    slope_minus: Optional[float] = None
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kind: str = "closed-form"
    name: str = ""
    closed_conjugate: Optional["ScalarConvexFunction"] = field(default=None, compare=False)
    closed_argmax: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    subgradient_fn: Optional[Callable[[float], Interval]] = field(default=None, compare=False)

    def values(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(self.fn(x), dtype=float)
        out = np.broadcast_to(out, x.shape).copy()
        outside = (x < self.dom_lo) | (x > self.dom_hi)
        if not self.lo_closed:
            outside |= x == self.dom_lo
        if not self.hi_closed:
            outside |= x == self.dom_hi
        out[outside] = INF
        out[np.isnan(out)] = INF
        return out

    def __call__(self, x):
        out = self.values(x)
        return float(out) if out.ndim == 0 else out

    def subgrad(self, x, step=1e-6):
        """
        Subgradient interval at x from one-sided difference quotients.

        Uses the registered subgradient map, then the exact derivative as a
        degenerate interval when x is interior.
        """
        x = float(x)
        fx = float(self.values(x))
        if not math.isfinite(fx):
            raise EmptyDomain(f"{self.name or 'function'} is +inf at {x}")
        if self.subgradient_fn is not None:
            return self.subgradient_fn(x)
        if self.derivative is not None and self.dom_lo < x < self.dom_hi:
            d = float(self.derivative(np.asarray(x)))
            return Interval(d, d)
        h = step * max(1.0, abs(x))
        left_val = float(self.values(x - h))
        right_val = float(self.values(x + h))
        left = (fx - left_val) / h if math.isfinite(left_val) else -INF
        right = (right_val - fx) / h if math.isfinite(right_val) else INF
        if left > right:
            left, right = right, left
        return Interval(left, right)


@dataclass(frozen=True)
class ConjugateResult:
    function: ScalarConvexFunction
    argmax_map: Callable[[np.ndarray], np.ndarray]
    method: str
    boundary: tuple = ()


# ------------------------------------------------------------------------------
# Convexity spot check
# ------------------------------------------------------------------------------
def _probe_box(f):
    lo = f.dom_lo if math.isfinite(f.dom_lo) else -50.0
    hi = f.dom_hi if math.isfinite(f.dom_hi) else 50.0
    if math.isfinite(f.dom_lo) and not math.isfinite(f.dom_hi):
        hi = f.dom_lo + 50.0
    if math.isfinite(f.dom_hi) and not math.isfinite(f.dom_lo):
        lo = f.dom_hi - 50.0
    return lo, hi


def check_convexity(f, trials=400, tol=1e-8, seed=0):
    """Raise NonConvexInput when a random triple violates the chord inequality."""
    if f.dom_lo > f.dom_hi or (f.dom_lo == f.dom_hi and not (f.lo_closed and f.hi_closed)):
        raise EmptyDomain(f"{f.name or 'function'} has an empty domain")
    lo, hi = _probe_box(f)
    rng = np.random.default_rng(seed)
    a = rng.uniform(lo, hi, trials)
    b = rng.uniform(lo, hi, trials)
    theta = rng.uniform(0.0, 1.0, trials)
    fa, fb = f.values(a), f.values(b)
    both = np.isfinite(fa) & np.isfinite(fb)
    if not np.any(both) and not np.any(np.isfinite(f.values(np.linspace(lo, hi, 2001)))):
        raise EmptyDomain(f"{f.name or 'function'} is +inf on its probed domain")
    mid = theta * a + (1.0 - theta) * b
    fm = f.values(mid)
    rhs = theta * fa + (1.0 - theta) * fb
    bad = both & (fm > rhs + tol * (1.0 + np.abs(rhs)))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NonConvexInput(
            f"{f.name or 'function'} fails convexity at a={a[i]:.6g}, b={b[i]:.6g}, theta={theta[i]:.4g}"
        )


# ------------------------------------------------------------------------------
# Slopes at infinity
# ------------------------------------------------------------------------------
def slope_at_infinity(f, side=1):
    """
    Limit of f(x)/x as x tends to +inf (side=1) or -inf (side=-1).

    Exact when the function registers its slope, otherwise extrapolated from
    f(x)/x on the geometric grid x = 10^k with Aitken's delta-squared step.
    """
    sign = 1.0 if side > 0 else -1.0
    known = f.slope_plus if sign > 0 else f.slope_minus
    if known is not None:
        return ExtReal(known)
    edge = f.dom_hi if sign > 0 else f.dom_lo
    if math.isfinite(edge):
        return ExtReal(sign * INF)

    xs = sign * np.power(10.0, np.arange(2, 13, dtype=float))
    vals = f.values(xs)
    if not np.all(np.isfinite(vals)):
        return ExtReal(sign * INF)
    ratios = vals / xs
    diffs = np.diff(ratios)
    d1, d2 = diffs[-2], diffs[-1]
    # Sublinear convergence (log growth and slower) shows no contraction.
    if abs(d2) > 1e-12 * (1.0 + abs(ratios[-1])) and abs(d2) >= 0.9 * abs(d1):
        return ExtReal(sign * INF)
    denom = d2 - d1
    if denom == 0 or abs(d2) < 1e-15:
        return ExtReal(float(ratios[-1]))
    return ExtReal(float(ratios[-1] - d2 * d2 / denom))


# ------------------------------------------------------------------------------
# Conjugation
# ------------------------------------------------------------------------------
def _coarse_grid(f, policy):
    offsets = np.geomspace(policy.offset_min, policy.offset_max, policy.coarse_points)
    lo, hi = f.dom_lo, f.dom_hi
    pieces = []
    if math.isfinite(lo) and math.isfinite(hi):
        pieces.append(np.linspace(lo, hi, policy.coarse_points))
        pieces.append(lo + offsets[offsets < hi - lo])
        pieces.append(hi - offsets[offsets < hi - lo])
    elif math.isfinite(lo):
        pieces.append(np.array([lo]))
        pieces.append(lo + offsets)
    elif math.isfinite(hi):
        pieces.append(np.array([hi]))
        pieces.append(hi - offsets)
    else:
        pieces.append(np.array([0.0]))
        pieces.append(offsets)
        pieces.append(-offsets)
    grid = np.unique(np.concatenate(pieces))
    return grid[np.isfinite(f.values(grid))]


def _numeric_conjugate_values(f, y, policy, grid, fg):
    """Vectorised sup_x {x*y - f(x)} with grid refinement and golden polish."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    scores = y[:, None] * grid[None, :] - fg[None, :]
    idx = np.argmax(scores, axis=1)
    n = grid.size
    a = grid[np.maximum(idx - 1, 0)]
    b = grid[np.minimum(idx + 1, n - 1)]

    rows = np.arange(y.size)
    for _ in range(policy.refine_rounds):
        local = a[:, None] + (b - a)[:, None] * np.linspace(0.0, 1.0, policy.refine_points)[None, :]
        local_scores = y[:, None] * local - f.values(local)
        j = np.argmax(local_scores, axis=1)
        step = (b - a) / (policy.refine_points - 1)
        centre = local[rows, j]
        a = np.maximum(centre - step, a)
        b = np.minimum(centre + step, b)

    for _ in range(policy.polish_iterations):
        c = b - GOLDEN * (b - a)
        d = a + GOLDEN * (b - a)
        sc = y * c - f.values(c)
        sd = y * d - f.values(d)
        left = sc > sd
        right = sc < sd
        b = np.where(left, d, np.where(right, b, d))
        a = np.where(right, c, np.where(left, a, c))
    x_star = 0.5 * (a + b)
    best = y * x_star - f.values(x_star)
    # Keep the best of the polished point and the bracket ends.
    for cand in (a, b):
        sc = y * cand - f.values(cand)
        better = sc > best
        best = np.where(better, sc, best)
        x_star = np.where(better, cand, x_star)
    return best, x_star


def conjugate(f, grid_policy=None):
    """
    Legendre-Fenchel conjugate f*(y) = sup_x {x*y - f(x)}.

    Args:
        f: Proper convex ScalarConvexFunction
        grid_policy: GridPolicy for the numeric path (defaults from settings)

    Returns:
        ConjugateResult whose function is +inf outside [f'(-inf), f'(+inf)]
    """
    check_convexity(f)
    if f.closed_conjugate is not None:
        argmax = f.closed_argmax or (lambda y: np.full(np.shape(y), np.nan))
        return ConjugateResult(function=f.closed_conjugate, argmax_map=argmax, method="closed-form")

    policy = grid_policy or GridPolicy.from_settings()
    s_plus = slope_at_infinity(f, 1).value
    s_minus = slope_at_infinity(f, -1).value
    logger.debug("numeric conjugate of %s on slopes (%s, %s)", f.name, s_minus, s_plus)
    grid = _coarse_grid(f, policy)
    fg = f.values(grid)

    def conj_fn(y):
        y = np.asarray(y, dtype=float)
        flat = y.reshape(-1)
        out = np.full(flat.shape, INF)
        inside = (flat >= s_minus) & (flat <= s_plus)
        if np.any(inside):
            out[inside], _ = _numeric_conjugate_values(f, flat[inside], policy, grid, fg)
        return out.reshape(y.shape)

    def argmax_fn(y):
        y = np.asarray(y, dtype=float)
        flat = y.reshape(-1)
        out = np.full(flat.shape, np.nan)
        inside = (flat >= s_minus) & (flat <= s_plus)
        if np.any(inside):
            _, out[inside] = _numeric_conjugate_values(f, flat[inside], policy, grid, fg)
        return out.reshape(y.shape)

    # Endpoint values are limits; report them and flag the endpoints.
    boundary = tuple(s for s in (s_minus, s_plus) if math.isfinite(s))
    conj = ScalarConvexFunction(
        fn=conj_fn,
        dom_lo=s_minus,
        dom_hi=s_plus,
        slope_plus=f.dom_hi,
        slope_minus=f.dom_lo,
        derivative=argmax_fn,
        kind="sampled-interpolant",
        name=f"{f.name}*" if f.name else "conjugate",
    )
    return ConjugateResult(function=conj, argmax_map=argmax_fn, method="numeric", boundary=boundary)


# ------------------------------------------------------------------------------
# One-dimensional minimisation
# ------------------------------------------------------------------------------
def _call(h, x):
    v = float(h(x))
    return INF if math.isnan(v) else v


def _flat_extent(h, x_star, v_star, lo, hi, ftol):
    """Bisect for the ends of {h <= v_star + ftol} inside [lo, hi]."""
    def below(x):
        return _call(h, x) <= v_star + ftol

    left_in, left_out = x_star, lo
    if below(lo):
        left_in = lo
    else:
        for _ in range(80):
            mid = 0.5 * (left_in + left_out)
            if below(mid):
                left_in = mid
            else:
                left_out = mid
    right_in, right_out = x_star, hi
    if below(hi):
        right_in = hi
    else:
        for _ in range(80):
            mid = 0.5 * (right_in + right_out)
            if below(mid):
                right_in = mid
            else:
                right_out = mid
    return left_in, right_in


def minimize_1d(h, bracket, tol=None, lower_limit=-INF, upper_limit=INF, max_width=None):
    """
    Minimise a convex extended-real function of one variable.

    Golden-section search on a bracket that expands geometrically while the
    minimum sits on an edge. +inf is an ordinary (largest) value. When a flat
    optimal region is detected its midpoint is returned.

    Args:
        h: Scalar callable, convex on [lower_limit, upper_limit]
        bracket: Initial (lo, hi)
        tol: Width of the final interval of optimality
        lower_limit, upper_limit: Hard limits the bracket never crosses
        max_width: Expansion cap before UnboundedBelow is raised

    Returns:
        (argmin, ExtReal minimum)
    """
    tol = config.get_float("DIVBOUND_CLOSED_TOL") if tol is None else tol
    max_width = config.get_float("DIVBOUND_MAX_BRACKET_WIDTH") if max_width is None else max_width
    lo, hi = float(min(bracket)), float(max(bracket))
    span = max(hi - lo, 1.0)
    if lo > upper_limit:
        lo, hi = upper_limit - span, upper_limit
    if hi < lower_limit:
        lo, hi = lower_limit, lower_limit + span
    lo, hi = max(lo, lower_limit), min(hi, upper_limit)
    if lo == hi:
        lo, hi = max(lower_limit, lo - span), min(upper_limit, hi + span)
        if lo == hi:
            value = _call(h, lo)
            if math.isinf(value):
                raise AllInfinite(f"objective is +inf at the pinned point {lo:.6g}")
            return lo, ExtReal(value)

    probes = np.linspace(lo, hi, 9)
    vals = np.array([_call(h, p) for p in probes])
    if not np.any(np.isfinite(vals)):
        probes = np.linspace(lo, hi, 201)
        vals = np.array([_call(h, p) for p in probes])
        if not np.any(np.isfinite(vals)):
            raise AllInfinite(f"objective is +inf on [{lo:.6g}, {hi:.6g}]")

    def strictly_better(a, b):
        return a < b - 1e-15 * (1.0 + abs(b))

    # Expand while the best probe sits on a movable edge and still improves.
    # An edge kept from a previous expansion already lies left (or right) of
    # the minimiser, so it never moves again.
    lo_anchored = hi_anchored = False
    while True:
        i = int(np.argmin(vals))
        width = probes[-1] - probes[0]
        if (i == 0 and not lo_anchored and probes[0] > lower_limit
                and strictly_better(vals[0], vals[1])):
            new_lo = max(lower_limit, probes[0] - 2.0 * width)
            if probes[-1] - new_lo > max_width:
                raise UnboundedBelow(f"objective still decreasing below {probes[0]:.6g}")
            logger.debug("minimize_1d: expanding bracket down to %.6g", new_lo)
            probes = np.linspace(new_lo, probes[1], 9)
            vals = np.array([_call(h, p) for p in probes])
            hi_anchored = True
            continue
        if (i == len(probes) - 1 and not hi_anchored and probes[-1] < upper_limit
                and strictly_better(vals[-1], vals[-2])):
            new_hi = min(upper_limit, probes[-1] + 2.0 * width)
            if new_hi - probes[0] > max_width:
                raise UnboundedBelow(f"objective still decreasing above {probes[-1]:.6g}")
            logger.debug("minimize_1d: expanding bracket up to %.6g", new_hi)
            probes = np.linspace(probes[-2], new_hi, 9)
            vals = np.array([_call(h, p) for p in probes])
            lo_anchored = True
            continue
        break

    a = probes[max(i - 1, 0)]
    b = probes[min(i + 1, len(probes) - 1)]
    outer_lo, outer_hi = probes[0], probes[-1]
    flat_seen = math.isfinite(vals[i]) and int(np.sum(vals <= vals[i] + 1e-15 * (1.0 + abs(vals[i])))) > 1
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = _call(h, c), _call(h, d)
    while b - a > tol * max(1.0, abs(0.5 * (a + b))):
        if math.isinf(fc) and math.isinf(fd):
            a, b = c, d
        elif fc < fd:
            b = d
        elif fd < fc:
            a = c
        else:
            if b - a > FLAT_TIE_WIDTH * max(1.0, abs(0.5 * (a + b))):
                flat_seen = True
            a, b = c, d
        c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
        fc, fd = _call(h, c), _call(h, d)

    candidates = [(0.5 * (a + b), _call(h, 0.5 * (a + b))), (probes[i], vals[i])]
    x_star, v_star = min(candidates, key=lambda pair: pair[1])
    if flat_seen and math.isfinite(v_star):
        ftol = 1e-14 * (1.0 + abs(v_star))
        left, right = _flat_extent(h, x_star, v_star, outer_lo, outer_hi, ftol)
        mid = 0.5 * (left + right)
        mid_val = _call(h, mid)
        if mid_val <= v_star + ftol:
            x_star, v_star = mid, min(mid_val, v_star)
    return x_star, ExtReal(v_star)
