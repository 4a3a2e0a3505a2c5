"""Catalog of phi generators, normalisation, Csiszar duality and phi-divergences.

Every PhiSpec holds the normalised generator restricted to [0, inf), its
conjugate phi*, psi*(y) = phi*(y) - y, the slope phi'(inf) and phi(0).
Closed-form conjugates are registered for kl, reverse_kl, alpha, chi2,
squared_hellinger, jensen_shannon, triangular and total_variation; the other
generators go through the numeric conjugate.
"""
import math
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional

import numpy as np
from scipy.special import logsumexp, xlogy

from divbound.backend.utils.convex_core import ScalarConvexFunction, conjugate, minimize_1d
from divbound.backend.utils.errors import (
    BadParameter,
    InfeasibleConstraint,
    InputFormatError,
    InvalidMeasure,
    MismatchedUniverse,
    NegativeNu,
    NonConvexInput,
    NotZeroAtOne,
    UnknownName,
)
from divbound.backend.utils.extended_real import INF, ExtReal, Interval
from divbound.backend.utils.measures import PROBABILITY_TOL, integrate
from divbound.backend.utils.phi_catalog import AVAILABLE_DIVERGENCES, PARAMETRIC

logger = logging.getLogger(__name__)

SELF_DUAL = ("total_variation", "squared_hellinger", "jensen_shannon", "triangular", "jeffreys")
LOG2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class PhiSpec:
    name: str
    params: Mapping[str, float]
    phi: ScalarConvexFunction
    phi_star: ScalarConvexFunction
    psi_star: ScalarConvexFunction
    slope_inf: ExtReal
    phi_at_zero: ExtReal
    closed_forms: Mapping[str, Callable] = field(default_factory=dict)
    second_derivative: Optional[Callable] = None
    third_derivative: Optional[Callable] = None
    conjugate_method: str = "closed-form"
    normalized: bool = True
    custom: Optional[Mapping] = None
    dual_source: Optional["PhiSpec"] = None

    @property
    def label(self):
        if "alpha" in self.params:
            return f"{self.name}({self.params['alpha']:g})"
        return self.name


@dataclass(frozen=True)
class DivergenceValue:
    value: ExtReal
    continuous_part: float
    singular_plus: float
    singular_minus: float


# ------------------------------------------------------------------------------
# Normalisation
# ------------------------------------------------------------------------------
def normalize(phi_raw, tol=1e-10):
    """
    Shift phi by c(x - 1) so that 0 is a subgradient at 1.

    Args:
        phi_raw: Proper convex generator with phi_raw(1) = 0, 1 interior
        tol: Tolerance on |phi_raw(1)|

    Returns:
        The normalised ScalarConvexFunction
    """
    at_one = float(phi_raw.values(1.0))
    if not math.isfinite(at_one) or abs(at_one) > tol:
        raise NotZeroAtOne(f"{phi_raw.name or 'generator'}(1) = {at_one!r}, expected 0")
    if not (phi_raw.dom_lo < 1.0 < phi_raw.dom_hi):
        raise BadParameter("1 must be interior to the generator's domain")
    c = -phi_raw.subgrad(1.0).midpoint
    if c == 0:
        return phi_raw

    def fn(x):
        return phi_raw.values(x) + c * (x - 1.0)

    derivative = None
    if phi_raw.derivative is not None:
        def derivative(x):
            return phi_raw.derivative(x) + c

    subgradient_fn = None
    if phi_raw.subgradient_fn is not None:
        def subgradient_fn(x):
            sg = phi_raw.subgradient_fn(x)
            return Interval(sg.lo + c, sg.hi + c)

    return ScalarConvexFunction(
        fn=fn,
        dom_lo=phi_raw.dom_lo,
        dom_hi=phi_raw.dom_hi,
        lo_closed=phi_raw.lo_closed,
        hi_closed=phi_raw.hi_closed,
        slope_plus=None if phi_raw.slope_plus is None else phi_raw.slope_plus + c,
        slope_minus=None if phi_raw.slope_minus is None else phi_raw.slope_minus + c,
        derivative=derivative,
        kind=phi_raw.kind,
        name=phi_raw.name,
        subgradient_fn=subgradient_fn,
    )


# ------------------------------------------------------------------------------
# Spec assembly
# ------------------------------------------------------------------------------
def _generator(fn, name, open_at_zero=False, derivative=None, subgradient_fn=None, slope=None):
    return ScalarConvexFunction(
        fn=fn,
        dom_lo=0.0,
        dom_hi=INF,
        lo_closed=not open_at_zero,
        slope_plus=slope,
        slope_minus=-INF,
        derivative=derivative,
        name=name,
        subgradient_fn=subgradient_fn,
    )


def _assemble(name, params, phi, slope, phi0, star_fn=None, star_hi=INF, star_hi_closed=True,
              argmax=None, d2=None, d3=None, closed_forms=None, custom=None, dual_source=None):
    """Bundle phi, phi*, psi* into a PhiSpec (numeric conjugate when star_fn is None)."""
    if star_fn is not None:
        phi_star = ScalarConvexFunction(
            fn=star_fn,
            dom_hi=star_hi,
            hi_closed=star_hi_closed,
            slope_plus=INF,
            slope_minus=0.0,
            derivative=argmax,
            name=f"{name}*",
        )
        phi = replace(phi, closed_conjugate=phi_star, closed_argmax=argmax)
        method = "closed-form"
    else:
        result = conjugate(phi)
        phi_star = result.function
        argmax = result.argmax_map
        method = "numeric"

    def psi_fn(y):
        return phi_star.values(y) - y

    def psi_derivative(y):
        with np.errstate(all="ignore"):
            return np.asarray(argmax(np.asarray(y, dtype=float)), dtype=float) - 1.0

    psi_star = ScalarConvexFunction(
        fn=psi_fn,
        dom_lo=phi_star.dom_lo,
        dom_hi=phi_star.dom_hi,
        lo_closed=phi_star.lo_closed,
        hi_closed=phi_star.hi_closed,
        slope_plus=INF,
        slope_minus=-1.0,
        derivative=psi_derivative,
        kind=phi_star.kind,
        name=f"psi*_{name}",
    )
    return PhiSpec(
        name=name,
        params=dict(params),
        phi=phi,
        phi_star=phi_star,
        psi_star=psi_star,
        slope_inf=ExtReal(slope),
        phi_at_zero=ExtReal(phi0),
        closed_forms=closed_forms or {},
        second_derivative=d2,
        third_derivative=d3,
        conjugate_method=method,
        custom=custom,
        dual_source=dual_source,
    )


def _log_mgf(x, w):
    """log sum_i w_i exp(x_i), ignoring zero weights."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    live = w > 0
    return float(logsumexp(x[live], b=w[live]))


def _kl():
    raw = _generator(lambda x: xlogy(x, x), "kl", derivative=lambda x: np.log(x) + 1.0)
    return _assemble(
        "kl", {}, normalize(raw), slope=INF, phi0=1.0,
        star_fn=np.expm1,
        argmax=np.exp,
        d2=lambda x: 1.0 / x,
        d3=lambda x: -1.0 / x ** 2,
        closed_forms={"log_mgf": _log_mgf},
    )


def _reverse_kl():
    raw = _generator(lambda x: -np.log(x), "reverse_kl", open_at_zero=True, derivative=lambda x: -1.0 / x)
    return _assemble(
        "reverse_kl", {}, normalize(raw), slope=1.0, phi0=INF,
        star_fn=lambda y: np.where(y < 1.0, -np.log1p(-np.minimum(y, 1.0)), INF),
        star_hi=1.0, star_hi_closed=False,
        argmax=lambda y: np.where(y < 1.0, 1.0 / (1.0 - y), INF),
        d2=lambda x: 1.0 / x ** 2,
        d3=lambda x: -2.0 / x ** 3,
    )


def _alpha(a):
    if a == 1.0:
        return _kl()
    if a == 0.0:
        return _reverse_kl()
    scale = a * (a - 1.0)
    raw = _generator(
        lambda x: (np.power(x, a) - 1.0) / scale,
        "alpha",
        open_at_zero=a < 0,
        derivative=lambda x: np.power(x, a - 1.0) / (a - 1.0),
    )
    power = a / (a - 1.0)

    def star(y):
        y = np.asarray(y, dtype=float)
        u = 1.0 + (a - 1.0) * y
        safe = np.where(u > 0, (a - 1.0) * y, 0.0)
        inner = np.expm1(power * np.log1p(safe)) / a
        if a > 1.0:
            return np.where(u > 0, inner, -1.0 / a)
        if a > 0.0:
            return np.where(u > 0, inner, INF)
        return np.where(u > 0, inner, np.where(u > -1e-12, -1.0 / a, INF))

    def argmax(y):
        y = np.asarray(y, dtype=float)
        u = 1.0 + (a - 1.0) * y
        pos = np.power(np.where(u > 0, u, 1.0), 1.0 / (a - 1.0))
        if a > 1.0:
            return np.where(u > 0, pos, 0.0)
        return np.where(u > 0, pos, INF)

    if a > 1.0:
        slope, star_hi, star_closed = INF, INF, True
    else:
        slope, star_hi, star_closed = 1.0 / (1.0 - a), 1.0 / (1.0 - a), a < 0
    return _assemble(
        "alpha", {"alpha": a}, normalize(raw), slope=slope, phi0=(1.0 / a if a > 0 else INF),
        star_fn=star, star_hi=star_hi, star_hi_closed=star_closed,
        argmax=argmax,
        d2=lambda x: np.power(x, a - 2.0),
        d3=lambda x: (a - 2.0) * np.power(x, a - 3.0),
    )


def _chi2():
    raw = _generator(lambda x: (x - 1.0) ** 2, "chi2", derivative=lambda x: 2.0 * (x - 1.0))
    return _assemble(
        "chi2", {}, normalize(raw), slope=INF, phi0=1.0,
        star_fn=lambda y: np.where(y >= -2.0, y + 0.25 * y * y, -1.0),
        argmax=lambda y: np.maximum(1.0 + 0.5 * np.asarray(y, dtype=float), 0.0),
        d2=lambda x: np.full(np.shape(x), 2.0),
        d3=lambda x: np.zeros(np.shape(x)),
    )


def _squared_hellinger():
    raw = _generator(
        lambda x: (np.sqrt(x) - 1.0) ** 2, "squared_hellinger",
        derivative=lambda x: 1.0 - 1.0 / np.sqrt(x),
    )
    return _assemble(
        "squared_hellinger", {}, normalize(raw), slope=1.0, phi0=1.0,
        star_fn=lambda y: np.where(y < 1.0, y / (1.0 - y), INF),
        star_hi=1.0, star_hi_closed=False,
        argmax=lambda y: np.where(y < 1.0, 1.0 / (1.0 - y) ** 2, INF),
        d2=lambda x: 0.5 * np.power(x, -1.5),
        d3=lambda x: -0.75 * np.power(x, -2.5),
    )


def _jensen_shannon():
    raw = _generator(
        lambda x: xlogy(x, x) - (1.0 + x) * np.log((1.0 + x) / 2.0),
        "jensen_shannon",
        derivative=lambda x: np.log(2.0 * x / (1.0 + x)),
    )
    return _assemble(
        "jensen_shannon", {}, normalize(raw), slope=LOG2, phi0=LOG2,
        star_fn=lambda y: np.where(y < LOG2, -np.log1p(-np.expm1(np.minimum(y, LOG2))), INF),
        star_hi=LOG2, star_hi_closed=False,
        argmax=lambda y: np.where(y < LOG2, np.exp(y) / (2.0 - np.exp(np.minimum(y, LOG2))), INF),
        d2=lambda x: 1.0 / (x * (1.0 + x)),
        d3=lambda x: -(2.0 * x + 1.0) / (x * (1.0 + x)) ** 2,
    )


def _triangular():
    raw = _generator(
        lambda x: (x - 1.0) ** 2 / (x + 1.0), "triangular",
        derivative=lambda x: (x - 1.0) * (x + 3.0) / (x + 1.0) ** 2,
    )

    def star(y):
        y = np.asarray(y, dtype=float)
        root = np.sqrt(np.maximum(1.0 - y, 0.0))
        mid = 4.0 - y - 4.0 * root
        return np.where(y < -3.0, -1.0, np.where(y <= 1.0, mid, INF))

    def argmax(y):
        y = np.asarray(y, dtype=float)
        root = np.sqrt(np.maximum(1.0 - y, 0.0))
        mid = 2.0 / np.where(root > 0, root, 1.0) - 1.0
        return np.where(y < -3.0, 0.0, np.where(y < 1.0, mid, INF))

    return _assemble(
        "triangular", {}, normalize(raw), slope=1.0, phi0=1.0,
        star_fn=star, star_hi=1.0, star_hi_closed=True,
        argmax=argmax,
        d2=lambda x: 8.0 / (x + 1.0) ** 3,
        d3=lambda x: -24.0 / (x + 1.0) ** 4,
    )


def _abs_subgradient(x):
    if x < 1.0:
        return Interval(-1.0, -1.0)
    if x > 1.0:
        return Interval(1.0, 1.0)
    return Interval(-1.0, 1.0)


def _total_variation(name="total_variation", params=None):
    raw = _generator(lambda x: np.abs(x - 1.0), name, subgradient_fn=_abs_subgradient, slope=1.0)
    return _assemble(
        name, params or {}, normalize(raw), slope=1.0, phi0=1.0,
        star_fn=lambda y: np.where(y < -1.0, -1.0, np.where(y <= 1.0, y, INF)),
        star_hi=1.0, star_hi_closed=True,
        argmax=lambda y: np.where(y < -1.0, 0.0, np.where(y <= 1.0, 1.0, INF)),
    )


def _jeffreys():
    raw = _generator(
        lambda x: (x - 1.0) * np.log(x), "jeffreys", open_at_zero=True,
        derivative=lambda x: np.log(x) + (x - 1.0) / x, slope=INF,
    )
    return _assemble(
        "jeffreys", {}, normalize(raw), slope=INF, phi0=INF,
        d2=lambda x: 1.0 / x + 1.0 / x ** 2,
        d3=lambda x: -1.0 / x ** 2 - 2.0 / x ** 3,
    )


def _chi_alpha(a):
    if a == 1.0:
        return _total_variation(name="chi_alpha", params={"alpha": 1.0})
    raw = _generator(
        lambda x: np.power(np.abs(x - 1.0), a), "chi_alpha",
        derivative=lambda x: a * np.sign(x - 1.0) * np.power(np.abs(x - 1.0), a - 1.0),
        slope=INF,
    )

    def d2(x):
        x = np.asarray(x, dtype=float)
        return a * (a - 1.0) * np.power(np.abs(x - 1.0), a - 2.0)

    def d3(x):
        x = np.asarray(x, dtype=float)
        body = a * (a - 1.0) * (a - 2.0) * np.sign(x - 1.0) * np.power(np.abs(x - 1.0), a - 3.0)
        at_one = 0.0 if (a == 2.0 or a >= 3.0) else np.nan
        return np.where(x == 1.0, at_one, body)

    return _assemble("chi_alpha", {"alpha": a}, normalize(raw), slope=INF, phi0=1.0, d2=d2, d3=d3)


# ------------------------------------------------------------------------------
# Public constructors
# ------------------------------------------------------------------------------
def make_divergence(name, alpha=None):
    """
    Build a normalised, [0, inf)-restricted PhiSpec from the catalog.

    Args:
        name: Catalog id (see phi_catalog.AVAILABLE_DIVERGENCES)
        alpha: Parameter of the alpha and chi_alpha families

    Returns:
        PhiSpec
    """
    if name not in AVAILABLE_DIVERGENCES:
        raise UnknownName(f"unknown divergence {name!r}; expected one of {', '.join(sorted(AVAILABLE_DIVERGENCES))}")
    if name in PARAMETRIC:
        if alpha is None or not math.isfinite(float(alpha)):
            raise BadParameter(f"{name} requires a finite alpha")
        alpha = float(alpha)
        if name == "alpha":
            return _alpha(alpha)
        if alpha < 1.0:
            raise BadParameter(f"chi_alpha is defined for alpha >= 1, got {alpha:g}")
        return _chi_alpha(alpha)
    if alpha is not None:
        logger.debug("ignoring alpha=%s for non-parametric divergence %s", alpha, name)
    builders = {
        "kl": _kl,
        "reverse_kl": _reverse_kl,
        "chi2": _chi2,
        "squared_hellinger": _squared_hellinger,
        "jensen_shannon": _jensen_shannon,
        "triangular": _triangular,
        "total_variation": _total_variation,
        "jeffreys": _jeffreys,
    }
    return builders[name]()


def custom_divergence(breakpoints, values, left_slope, right_slope, quadratic=0.0, name="custom"):
    """
    Piecewise-linear-plus-quadratic generator.

    phi(x) = linear interpolation of (breakpoints, values), extended with
    left_slope / right_slope outside the breakpoints, plus quadratic*(x-1)^2.
    """
    try:
        bp = np.asarray(breakpoints, dtype=float)
        vals = np.asarray(values, dtype=float)
        left_slope, right_slope, quadratic = float(left_slope), float(right_slope), float(quadratic)
    except (TypeError, ValueError):
        raise InputFormatError("custom generator fields must be numeric") from None
    if bp.ndim != 1 or bp.size < 1 or bp.shape != vals.shape:
        raise InputFormatError("breakpoints and values must be equal-length lists")
    if not (np.all(np.isfinite(bp)) and np.all(np.isfinite(vals))) or np.any(np.diff(bp) <= 0):
        raise InputFormatError("breakpoints must be finite and strictly increasing")
    if quadratic < 0:
        raise NonConvexInput("quadratic coefficient must be nonnegative")
    slopes = np.concatenate([[left_slope], np.diff(vals) / np.diff(bp), [right_slope]])
    if np.any(np.diff(slopes) < -1e-12):
        raise NonConvexInput("piecewise-linear slopes must be nondecreasing")

    def fn(x):
        x = np.asarray(x, dtype=float)
        lin = np.interp(x, bp, vals)
        lin = np.where(x < bp[0], vals[0] + left_slope * (x - bp[0]), lin)
        lin = np.where(x > bp[-1], vals[-1] + right_slope * (x - bp[-1]), lin)
        return lin + quadratic * (x - 1.0) ** 2

    def subgradient_fn(x):
        k = int(np.searchsorted(bp, x, side="left"))
        if k < bp.size and bp[k] == x:
            return Interval(slopes[k], slopes[k + 1])
        s = slopes[int(np.searchsorted(bp, x, side="right"))]
        return Interval(s, s)

    raw = _generator(fn, name, subgradient_fn=subgradient_fn, slope=right_slope if quadratic == 0 else INF)
    phi = normalize(raw)
    slope = phi.slope_plus
    phi0 = float(phi.values(0.0))
    schema = {
        "breakpoints": bp.tolist(),
        "values": vals.tolist(),
        "left_slope": left_slope,
        "right_slope": right_slope,
        "quadratic": quadratic,
    }
    return _assemble(name, {}, phi, slope=slope, phi0=phi0, custom=schema)


def csiszar_dual(spec):
    """
    Spec of phi_dagger(x) = x * phi(1/x), with phi_dagger(0) = phi'(inf).

    Named duals are returned from the catalog; other generators get a numeric
    dual that remembers its source so dualising twice returns the original.
    """
    if spec.dual_source is not None:
        return spec.dual_source
    if spec.custom is None:
        if spec.name == "kl":
            return make_divergence("reverse_kl")
        if spec.name == "reverse_kl":
            return make_divergence("kl")
        if spec.name == "alpha":
            return make_divergence("alpha", 1.0 - spec.params["alpha"])
        if spec.name in SELF_DUAL or (spec.name == "chi_alpha" and spec.params.get("alpha") == 1.0):
            return spec

    phi = spec.phi
    slope = spec.slope_inf.value
    phi0 = spec.phi_at_zero.value

    def fn(x):
        x = np.asarray(x, dtype=float)
        inv = 1.0 / np.where(x > 0, x, 1.0)
        body = x * phi.values(inv)
        return np.where(x > 0, body, np.where(x == 0, slope, INF))

    derivative = None
    if phi.derivative is not None:
        def derivative(x):
            return phi.values(1.0 / x) - phi.derivative(1.0 / x) / x

    d2 = d3 = None
    if spec.second_derivative is not None:
        def d2(x):
            return spec.second_derivative(1.0 / x) / x ** 3

        if spec.third_derivative is not None:
            def d3(x):
                return -spec.third_derivative(1.0 / x) / x ** 5 - 3.0 * spec.second_derivative(1.0 / x) / x ** 4

    name = f"{spec.name}_dual"
    raw = _generator(fn, name, open_at_zero=not math.isfinite(slope), derivative=derivative, slope=phi0)
    return _assemble(name, spec.params, normalize(raw), slope=phi0, phi0=slope, d2=d2, d3=d3,
                     dual_source=spec)


# ------------------------------------------------------------------------------
# Divergences and conjugates on finite measures
# ------------------------------------------------------------------------------
def divergence(mu, nu, spec):
    """
    D(mu || nu) = sum nu_i phi(mu_i / nu_i) + mu_s+ phi'(inf) - mu_s- phi'(-inf).

    An atom of mu is nu-singular iff its nu-weight is exactly 0. Negative
    singular mass costs +inf because phi is restricted to [0, inf).
    """
    if mu.universe_id != nu.universe_id:
        raise MismatchedUniverse(f"universes differ: {mu.universe_id!r} vs {nu.universe_id!r}")
    nu_w = nu.as_dict()
    if any(w < 0 for w in nu_w.values()):
        raise NegativeNu("reference measure nu has a negative weight")
    mu_w = mu.as_dict()

    ids = [pid for pid, w in nu.atoms if w > 0]
    nu_arr = np.array([nu_w[pid] for pid in ids])
    mu_arr = np.array([mu_w.get(pid, 0.0) for pid in ids])
    continuous = float(np.sum(nu_arr * spec.phi.values(mu_arr / nu_arr))) if ids else 0.0

    plus_mass = sum(w for pid, w in mu.atoms if nu_w.get(pid, 0.0) == 0 and w > 0)
    minus_mass = sum(-w for pid, w in mu.atoms if nu_w.get(pid, 0.0) == 0 and w < 0)
    singular_plus = ExtReal(plus_mass) * spec.slope_inf
    # phi'(-inf) = -inf for generators restricted to [0, inf)
    singular_minus = ExtReal(minus_mass) * ExtReal.neg_inf()
    value = ExtReal(continuous) + singular_plus - singular_minus
    return DivergenceValue(
        value=value,
        continuous_part=continuous,
        singular_plus=singular_plus.value,
        singular_minus=singular_minus.value,
    )


def _check_probability(measure, label):
    if any(w < 0 for _, w in measure.atoms) or abs(measure.total_mass - 1.0) > PROBABILITY_TOL:
        raise InvalidMeasure(f"{label} must be a probability measure")


def restricted_conjugate(spec, nu, g, range_override=None, tol=None):
    """
    Conjugate of the probability-restricted divergence at g.

    inf over lambda of <nu, phi*(g + lambda)> - lambda subject to
    lambda + esssup g <= phi'(inf); esssup is the max over nu's support
    unless range_override = (lo, hi) is given.

    Returns:
        (value, lambda_opt)
    """
    _check_probability(nu, "nu")
    ids = [pid for pid, w in nu.atoms if w > 0]
    w = np.array([nu.weight_of(pid) for pid in ids])
    x = np.array([g.value_of(pid) for pid in ids])
    hi = float(np.max(x)) if range_override is None else float(range_override[1])
    slope = spec.slope_inf.value

    if "log_mgf" in spec.closed_forms:
        value = spec.closed_forms["log_mgf"](x, w)
        return value, -value

    upper = INF
    if math.isfinite(slope):
        if math.isinf(hi):
            raise InfeasibleConstraint("phi'(inf) is finite but g is unbounded above on the range")
        upper = slope - hi
    mean = float(np.dot(w, x))
    half = 4.0 * (float(np.max(x)) - float(np.min(x))) + 1.0

    def objective(lam):
        return float(np.dot(w, spec.phi_star.values(x + lam))) - lam

    lam, val = minimize_1d(objective, (-mean - half, -mean + half), tol=tol, upper_limit=upper)
    return val.value, lam


def variational_gap(spec, mu, nu, g):
    """D(mu || nu) - [mu(g) - restricted_conjugate(spec, nu, g)], nonnegative up to tolerance."""
    _check_probability(mu, "mu")
    _check_probability(nu, "nu")
    d = divergence(mu, nu, spec).value
    conj, _ = restricted_conjugate(spec, nu, g)
    return (d - (integrate(mu, g) - conj)).value


# ------------------------------------------------------------------------------
# JSON descriptors
# ------------------------------------------------------------------------------
def spec_to_json(spec):
    """Serialise as {name, params, normalized} (plus 'custom' for custom generators)."""
    payload = {"name": spec.name, "params": dict(spec.params), "normalized": spec.normalized}
    if spec.custom is not None:
        payload["custom"] = dict(spec.custom)
    return payload


def spec_from_json(payload):
    if not isinstance(payload, dict):
        raise InputFormatError("divergence descriptor must be a JSON object")
    if "custom" in payload or {"breakpoints", "values"} <= set(payload):
        body = payload.get("custom", payload)
        missing = {"breakpoints", "values", "left_slope", "right_slope"} - set(body)
        if missing:
            raise InputFormatError(f"custom generator is missing {', '.join(sorted(missing))}")
        return custom_divergence(
            body["breakpoints"], body["values"], body["left_slope"], body["right_slope"],
            body.get("quadratic", 0.0), name=payload.get("name", "custom"),
        )
    if "name" not in payload:
        raise InputFormatError("divergence descriptor needs a 'name'")
    params = payload.get("params") or {}
    name = payload["name"]
    if name.endswith("_dual") and name[:-5] in AVAILABLE_DIVERGENCES:
        return csiszar_dual(make_divergence(name[:-5], params.get("alpha")))
    return make_divergence(name, params.get("alpha"))
