"""Total-variation specialisation.

Heights are measured on psi*: H(w) = inf_lambda max{psi*(lambda + w/2), psi*(lambda - w/2)}
and the tight bound in terms of TV is L(eps) = H*(eps/2). TV follows the
[-1, 1]-function convention, so eps ranges over [0, 2].
"""
import math
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import xlogy

from divbound.backend.services.bounds import BoundCurve, BoundSample
from divbound.backend.services.cgf import CgfQuery, cgf
from divbound.backend.utils.convex_core import minimize_1d
from divbound.backend.utils.csv_io import write_json, write_rows_csv
from divbound.backend.utils.errors import (
    AllInfinite,
    BadParameter,
    DegenerateInterval,
    NotTwiceDifferentiable,
    UnboundedBelow,
)
from divbound.backend.utils.extended_real import INF, ExtReal
from divbound.backend.utils.measures import PushforwardDist
from divbound.backend.utils.parallel import map_ordered
from divbound.backend.utils.text_utils import json_number

logger = logging.getLogger(__name__)

PINSKER_KINDS = ("crude", "optimal", "concave")
BISECT_ITERATIONS = 200
EQUAL_HEIGHT_TOL = 1e-10
PINSKER_RTOL = 1e-9


@dataclass(frozen=True)
class HeightSample:
    w: float
    h: ExtReal
    lambda_w: Optional[float]


@dataclass(frozen=True)
class HeightCurve:
    samples: Tuple[HeightSample, ...]
    spec_name: str

    @property
    def ws(self):
        return np.array([s.w for s in self.samples])

    @property
    def hs(self):
        return np.array([s.h.value for s in self.samples])


@dataclass(frozen=True)
class PinskerReport:
    kind: str
    holds: bool
    constant: float
    violating_z: Optional[float]
    verified_range: Tuple[float, float]

    def to_json(self):
        return {
            "kind": self.kind,
            "holds": self.holds,
            "constant": json_number(self.constant),
            "violating_z": json_number(self.violating_z),
            "verified_range": [json_number(v) for v in self.verified_range],
        }


@dataclass(frozen=True)
class HoeffdingBound:
    refined: float
    classical: float


# ------------------------------------------------------------------------------
# KL closed forms
# ------------------------------------------------------------------------------
def _log_sinh(u):
    return u + math.log(-math.expm1(-2.0 * u)) - math.log(2.0)


def kl_height(w):
    """H(w) = -1 + (w/2)coth(w/2) + log(2 sinh(w/2)/w) for KL."""
    u = 0.5 * abs(float(w))
    if u < 1e-2:
        u2 = u * u
        return u2 / 2.0 - u2 * u2 / 36.0 + u2 * u2 * u2 / 405.0
    return u / math.tanh(u) - 1.0 + _log_sinh(u) - math.log(u)


def kl_tv_curve_point(t):
    """(V(t), L(V(t))) on the KL Vajda curve, parametrised by t > 0."""
    t = float(t)
    if t <= 0:
        raise BadParameter("the parametrisation needs t > 0")
    coth = 1.0 / math.tanh(t)
    ratio = t / math.sinh(t)
    v = 2.0 * coth - ratio * ratio / t - 1.0 / t
    value = -_log_sinh(t) + math.log(t) + t * coth - ratio * ratio
    return v, value


def binary_kl(p, q):
    """KL((p, 1-p) || (q, 1-q))."""
    return float(xlogy(p, p / q) + xlogy(1.0 - p, (1.0 - p) / (1.0 - q)))


HEIGHT_FAST_PATHS = {"kl": kl_height}


# ------------------------------------------------------------------------------
# Sublevel sets and heights
# ------------------------------------------------------------------------------
def _psi(spec, x):
    return float(spec.psi_star.values(x))


def _bisect(pred, inside, outside, iterations=BISECT_ITERATIONS):
    """Shrink [inside, outside] around the switch of a monotone predicate; pred(inside) holds."""
    for _ in range(iterations):
        if abs(outside - inside) <= 1e-15 * max(1.0, abs(inside), abs(outside)):
            break
        mid = 0.5 * (inside + outside)
        if mid in (inside, outside):
            break
        if pred(mid):
            inside = mid
        else:
            outside = mid
    return inside, outside


def sublevel_width(spec, h):
    """Length of {psi* <= h}; psi* is inf-compact with minimum 0 at 0."""
    h = float(h)
    if h < 0 or math.isnan(h):
        raise BadParameter(f"height must be >= 0, got {h!r}")

    def below(x):
        return _psi(spec, x) <= h

    ends = []
    for direction in (1.0, -1.0):
        step = 1.0
        while below(direction * step):
            step *= 2.0
            if step > 1e300:
                return INF
        inside, _ = _bisect(lambda s: below(direction * s), 0.0, step)
        ends.append(direction * inside)
    return ends[0] - ends[1]


def _difference(spec, lam, w):
    upper = _psi(spec, lam + 0.5 * w)
    lower = _psi(spec, lam - 0.5 * w)
    if math.isinf(upper):
        return INF
    if math.isinf(lower):
        return -INF
    return upper - lower


def height(spec, w):
    """
    Height-for-width H(w) and the equal-height shift lambda_w.

    d(lambda) = psi*(lambda + w/2) - psi*(lambda - w/2) is nondecreasing and
    changes sign on [-w/2, w/2]; its zero set is bracketed by bisection and
    the midpoint returned. Without an exact zero (a jump at a closed domain
    end) the max of both branches is minimised directly and lambda_w is None.

    Returns:
        (ExtReal h, lambda_w or None)
    """
    w = float(w)
    if w < 0 or math.isnan(w):
        raise BadParameter(f"width must be >= 0, got {w!r}")
    if w == 0.0:
        return ExtReal(0.0), 0.0
    psi = spec.psi_star
    if w > psi.dom_hi - psi.dom_lo:
        return ExtReal.inf(), None

    lo, hi = -0.5 * w, 0.5 * w

    def negative(lam):
        return _difference(spec, lam, w) < 0

    def not_positive(lam):
        return _difference(spec, lam, w) <= 0

    if not negative(lo):
        left, right_probe = lo, lo
    else:
        left, right_probe = _bisect(negative, lo, hi)
    if _difference(spec, right_probe, w) > 0:
        right = right_probe
    elif not_positive(hi):
        right = hi
    else:
        right, _ = _bisect(not_positive, right_probe, hi)

    lam = 0.5 * (left + right)
    up, down = _psi(spec, lam + 0.5 * w), _psi(spec, lam - 0.5 * w)
    top = max(up, down)
    if math.isfinite(top) and abs(up - down) <= EQUAL_HEIGHT_TOL * (1.0 + top):
        return ExtReal(top), lam

    logger.debug("height: no equal-height shift at w=%g, minimising the max", w)

    def worst(x):
        return max(_psi(spec, x + 0.5 * w), _psi(spec, x - 0.5 * w))

    upper = psi.dom_hi - 0.5 * w if math.isfinite(psi.dom_hi) else INF
    try:
        _, value = minimize_1d(worst, (lo, hi), upper_limit=upper)
    except AllInfinite:
        return ExtReal.inf(), None
    return value, None


def _height_value(spec, w, use_fast_path=True):
    fast = HEIGHT_FAST_PATHS.get(spec.name) if use_fast_path else None
    if fast is not None:
        return fast(w)
    return height(spec, w)[0].value


def height_curve(spec, ws, max_workers=None):
    ws = [float(w) for w in ws]

    def one(w):
        h, lam = height(spec, w)
        return HeightSample(w=w, h=h, lambda_w=lam)

    return HeightCurve(samples=tuple(map_ordered(one, ws, max_workers=max_workers)), spec_name=spec.label)


def height_derivative(spec, w):
    """
    H'(w) = p*q / (q - p) with p, q the psi*' values at lambda_w +- w/2.

    Falls back to a central difference when lambda_w or psi*' is unavailable.
    """
    w = float(w)
    if spec.name == "kl":
        u = 0.5 * w
        if u < 1e-2:
            return 0.5 * (u - u ** 3 / 9.0 + 2.0 * u ** 5 / 135.0)
        return 0.5 * (2.0 / math.tanh(u) - u / math.sinh(u) ** 2 - 1.0 / u)
    h, lam = height(spec, w)
    deriv = spec.psi_star.derivative
    if lam is not None and deriv is not None and h.is_finite:
        p = float(deriv(np.asarray(lam + 0.5 * w)))
        q = float(deriv(np.asarray(lam - 0.5 * w)))
        if math.isfinite(p) and math.isfinite(q) and q != p:
            return p * q / (q - p)
    step = 1e-5 * max(1.0, w)
    left = max(w - step, 0.0)
    return (_height_value(spec, w + step) - _height_value(spec, left)) / (w + step - left)


def vajda_parametric(spec, w):
    """Point (eps, L(eps)) = (2H'(w), w H'(w) - H(w)) of the Vajda curve."""
    d = height_derivative(spec, w)
    return 2.0 * d, float(w) * d - _height_value(spec, w)


# ------------------------------------------------------------------------------
# Vajda bound
# ------------------------------------------------------------------------------
VAJDA_COARSE_W = np.concatenate([[0.0], np.geomspace(1e-2, 1e3, 26)])


def vajda_bound(spec, eps, use_fast_path=True):
    """
    L(eps) = sup_{w >= 0} {w eps / 2 - H(w)}, the tight lower bound of D by TV.

    Args:
        spec: PhiSpec
        eps: TV value in the [-1, 1]-function convention, eps >= 0

    Returns:
        ExtReal (+inf when the supremum is unbounded)
    """
    eps = float(eps)
    if eps < 0 or math.isnan(eps):
        raise BadParameter(f"eps must be >= 0, got {eps!r}")
    if eps == 0.0:
        return ExtReal(0.0)

    def objective(w):
        return _height_value(spec, w, use_fast_path) - 0.5 * w * eps

    ws = VAJDA_COARSE_W
    vals = np.array([objective(w) for w in ws])
    i = int(np.argmin(vals))
    try:
        if i == len(ws) - 1:
            _, val = minimize_1d(objective, (ws[i - 1], ws[i]), lower_limit=ws[i - 1])
        else:
            lo, hi = ws[max(i - 1, 0)], ws[i + 1]
            _, val = minimize_1d(objective, (lo, hi), lower_limit=lo, upper_limit=hi)
    except UnboundedBelow:
        return ExtReal.inf()
    best = min(val.value, float(vals[i]))
    return ExtReal(max(-best, 0.0))


def vajda_curve(spec, eps_grid, max_workers=None):
    eps_grid = [float(e) for e in eps_grid]
    values = map_ordered(lambda e: vajda_bound(spec, e), eps_grid, max_workers=max_workers)
    samples = tuple(BoundSample(eps=e, value=v) for e, v in zip(eps_grid, values))
    return BoundCurve(samples=samples, provenance="conjugate-of-cgf", spec_name=spec.label)


def binary_cgf(spec, t):
    """sup over p in [0, 1] of K for nu = (1-p) delta_{-1} + p delta_{1}, g = identity."""
    t = float(t)

    def negated(p):
        dist = PushforwardDist(((-1.0, 1.0 - p), (1.0, p)))
        value = cgf(CgfQuery(spec, dist, range_override=(-1.0, 1.0)), t)[0]
        return -value.value

    _, val = minimize_1d(negated, (0.0, 1.0), lower_limit=0.0, upper_limit=1.0)
    return ExtReal(-val.value)


# ------------------------------------------------------------------------------
# Pinsker-type checks
# ------------------------------------------------------------------------------
def _second_difference(f, x, h):
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def _third_difference(f, x, h):
    return (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h ** 3)


def _richardson(diff, f, x, h, order):
    coarse, fine = diff(f, x, h), diff(f, x, 0.5 * h)
    return (2.0 ** order * fine - coarse) / (2.0 ** order - 1.0)


def _numeric_derivative(spec, x, which):
    """Central differences with Richardson extrapolation; raises when unstable."""
    phi = spec.phi

    def f(v):
        return float(phi.values(v))

    h = 1e-4 * max(1.0, abs(x)) if which == 2 else 1e-3 * max(1.0, abs(x))
    diff = _second_difference if which == 2 else _third_difference
    estimate = _richardson(diff, f, x, h, 2)
    check = _richardson(diff, f, x, 4.0 * h, 2)
    if not (math.isfinite(estimate) and math.isfinite(check)):
        raise NotTwiceDifferentiable(f"{spec.label}: derivative {which} is not finite at {x:g}")
    if abs(estimate - check) > 1e-3 * max(1.0, abs(estimate)):
        raise NotTwiceDifferentiable(f"{spec.label}: unstable derivative {which} at {x:g}")
    return estimate


def _derivative(spec, x, which):
    closed = spec.second_derivative if which == 2 else spec.third_derivative
    if closed is not None:
        with np.errstate(all="ignore"):
            return np.asarray(closed(np.asarray(x, dtype=float)), dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.array([_numeric_derivative(spec, v, which) for v in x])


def _diverges_at_slope(spec):
    slope = spec.slope_inf.value
    if not math.isfinite(slope):
        return True
    near, far = _psi(spec, slope - 1e-12), _psi(spec, slope - 1e-6)
    return math.isinf(near) or near - far > 1.0


def pinsker_check(spec, kind, z_grid=None):
    """
    Check a sufficient condition for D >= c TV^2 on a z-grid (x = 1 + z).

    crude: phi'' monotone, c = phi''(1)/8.
    optimal: 27 c2 / (3 - z c3/c2)^3 <= phi''(1 + z), c = phi''(1)/2.
    concave: 1/phi'' concave and psi* diverging at phi'(inf), c = phi''(1)/2.

    The verdict covers only the sampled range, reported as verified_range.
    """
    if kind not in PINSKER_KINDS:
        raise BadParameter(f"unknown Pinsker kind {kind!r}; expected one of {', '.join(PINSKER_KINDS)}")
    z = np.linspace(-0.99, 20.0, 2100) if z_grid is None else np.asarray(z_grid, dtype=float)
    z = np.sort(z[1.0 + z > 0])
    x = 1.0 + z

    c2 = float(np.ravel(_derivative(spec, 1.0, 2))[0])
    if not math.isfinite(c2) or c2 <= 0:
        raise NotTwiceDifferentiable(f"{spec.label}: phi''(1) = {c2!r}")
    d2 = np.ravel(_derivative(spec, x, 2))
    verified = (float(z[0]), float(z[-1])) if z.size else (0.0, 0.0)

    violating = None
    if kind == "crude":
        constant = c2 / 8.0
        steps = np.diff(d2)
        slack = PINSKER_RTOL * np.maximum(1.0, np.abs(d2[1:]))
        rising = d2[-1] >= d2[0]
        bad = steps < -slack if rising else steps > slack
        bad |= ~np.isfinite(steps)
        if np.any(bad):
            violating = float(z[int(np.argmax(bad)) + 1])
    elif kind == "optimal":
        constant = c2 / 2.0
        c3 = float(np.ravel(_derivative(spec, 1.0, 3))[0])
        if not math.isfinite(c3):
            raise NotTwiceDifferentiable(f"{spec.label}: phi'''(1) = {c3!r}")
        den = 3.0 - z * c3 / c2
        with np.errstate(all="ignore"):
            lhs = 27.0 * c2 / den ** 3
        # A nonpositive denominator leaves nothing to check
        bad = (den > 0) & ~(lhs <= d2 + PINSKER_RTOL * np.maximum(np.abs(d2), np.abs(lhs)))
        if np.any(bad):
            violating = float(z[int(np.argmax(bad))])
    else:
        constant = c2 / 2.0
        with np.errstate(all="ignore"):
            r = 1.0 / d2
        bad = ~(np.isfinite(r) & (d2 > 0))
        if z.size >= 3:
            theta = (x[2:] - x[1:-1]) / (x[2:] - x[:-2])
            chord = theta * r[:-2] + (1.0 - theta) * r[2:]
            dent = r[1:-1] < chord - PINSKER_RTOL * np.maximum(1.0, np.abs(chord))
            bad[1:-1] |= dent
        if np.any(bad):
            violating = float(z[int(np.argmax(bad))])
        elif not _diverges_at_slope(spec):
            violating = float(z[-1])
            logger.info("pinsker_check %s: psi* stays bounded at phi'(inf)", spec.label)

    holds = violating is None
    logger.debug("pinsker_check %s kind=%s holds=%s", spec.label, kind, holds)
    return PinskerReport(kind=kind, holds=holds, constant=constant, violating_z=violating, verified_range=verified)


# ------------------------------------------------------------------------------
# Hoeffding
# ------------------------------------------------------------------------------
def hoeffding_bound(m, M, t):
    """
    Refined Hoeffding lemma: log E exp(t g) <= H_KL((M - m)|t|) for centred g in [m, M].

    Returns:
        HoeffdingBound(refined, classical) with classical = (M - m)^2 t^2 / 8
    """
    m, M, t = float(m), float(M), float(t)
    if not m < M:
        raise DegenerateInterval(f"need m < M, got m={m:g}, M={M:g}")
    span = M - m
    return HoeffdingBound(refined=kl_height(span * abs(t)), classical=span * span * t * t / 8.0)


# ------------------------------------------------------------------------------
# Output
# ------------------------------------------------------------------------------
def write_height_csv(path, curve):
    rows = [(s.w, s.h, s.lambda_w) for s in curve.samples]
    write_rows_csv(path, ["w", "H", "lambda_w"], rows)


def write_vajda_csv(path, curve):
    rows = [(s.eps, s.value) for s in curve.samples]
    write_rows_csv(path, ["eps", "L"], rows)


def write_pinsker_json(path, report):
    write_json(path, report.to_json())
