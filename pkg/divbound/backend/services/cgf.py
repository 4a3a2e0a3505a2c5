"""(phi, nu)-cumulant generating function.

K(t) = inf over lambda of sum_i w_i psi*(t x_i + lambda), subject to
lambda + esssup(t g) <= phi'(inf). Infeasibility is reported as +inf.
"""
import math
import hashlib
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from divbound.backend.utils.convex_core import minimize_1d
from divbound.backend.utils.csv_io import write_rows_csv
from divbound.backend.utils.errors import AllInfinite, PreconditionError
from divbound.backend.utils.extended_real import INF, ExtReal, ext_dot
from divbound.backend.utils.parallel import map_ordered

logger = logging.getLogger(__name__)

HINTS = (
    "looks-strongly-subexponential",
    "looks-subexponential",
    "bounded-only-regime",
    "inconclusive",
)


@dataclass(frozen=True)
class CgfQuery:
    spec: object
    dist: object
    range_override: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.range_override is None:
            return
        lo, hi = (float(v) for v in self.range_override)
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise PreconditionError(f"invalid range override ({lo}, {hi})")
        if lo > self.dist.lo or hi < self.dist.hi:
            raise PreconditionError(
                f"range override ({lo:g}, {hi:g}) is tighter than the support "
                f"[{self.dist.lo:g}, {self.dist.hi:g}]"
            )
        object.__setattr__(self, "range_override", (lo, hi))

    @property
    def effective_range(self):
        if self.range_override is not None:
            return self.range_override
        return self.dist.lo, self.dist.hi


@dataclass(frozen=True)
class CgfSample:
    t: float
    k: ExtReal
    lambda_opt: Optional[float]

    @property
    def finite(self):
        return self.k.is_finite


@dataclass(frozen=True)
class CgfCurve:
    samples: Tuple[CgfSample, ...]
    spec_name: str
    dist_digest: str
    evaluate: Optional[Callable[[float], ExtReal]] = field(default=None, compare=False, repr=False)

    @property
    def ts(self):
        return np.array([s.t for s in self.samples])

    @property
    def ks(self):
        return np.array([s.k.value for s in self.samples])

    def finite_samples(self):
        return [s for s in self.samples if s.finite]

    def is_convex(self, tol=1e-8):
        pts = [(s.t, s.k.value) for s in self.finite_samples()]
        for (t0, k0), (t1, k1), (t2, k2) in zip(pts, pts[1:], pts[2:]):
            theta = (t2 - t1) / (t2 - t0)
            if k1 > theta * k0 + (1.0 - theta) * k2 + tol * (1.0 + abs(k1)):
                return False
        return True


@dataclass(frozen=True)
class ProbeReport:
    finite_ts: Tuple[float, ...]
    finite_interval: Tuple[float, float]
    classification_hint: str


def cgf(query, t, use_fast_path=True, tol=None):
    """
    Evaluate K(t) for a query.

    Args:
        query: CgfQuery
        t: Real argument
        use_fast_path: Use a registered closed form (KL log-MGF) when available

    Returns:
        (ExtReal k, lambda_opt or None)
    """
    t = float(t)
    if t == 0.0:
        return ExtReal(0.0), 0.0

    spec, dist = query.spec, query.dist
    xs, ws = dist.xs, dist.ws
    lo, hi = query.effective_range
    mean = dist.mean

    if use_fast_path and "log_mgf" in spec.closed_forms:
        k = spec.closed_forms["log_mgf"](t * (xs - mean), ws)
        return ExtReal(max(k, 0.0)), -(k + t * mean)

    slope = spec.slope_inf.value
    upper = INF
    if math.isfinite(slope):
        sup_tg = t * hi if t > 0 else t * lo
        if math.isinf(sup_tg):
            return ExtReal.inf(), None
        upper = slope - sup_tg

    centre = -t * mean
    half = 4.0 * abs(t) * (dist.hi - dist.lo) + 1.0
    psi = spec.psi_star

    def objective(lam):
        return ext_dot(ws, psi.values(t * xs + lam))

    try:
        lam, val = minimize_1d(objective, (centre - half, centre + half), tol=tol, upper_limit=upper)
    except AllInfinite:
        logger.debug("cgf: objective is +inf on the feasible set at t=%g", t)
        return ExtReal.inf(), None
    if val.is_pos_inf:
        return val, None
    return ExtReal(max(val.value, 0.0)), lam


def _curve_digest(dist, range_override):
    if range_override is None:
        return dist.digest
    text = f"{dist.digest}|{range_override[0]!r},{range_override[1]!r}"
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def cgf_curve(query, ts, max_workers=None, use_fast_path=True):
    """
    Sample K on a sorted grid containing 0.

    Samples are evaluated through map_ordered, so ordering follows ts.
    """
    ts = [float(t) for t in ts]
    if not ts or any(b <= a for a, b in zip(ts, ts[1:])):
        raise PreconditionError("t grid must be nonempty and strictly increasing")
    if 0.0 not in ts:
        raise PreconditionError("t grid must contain 0")

    def one(t):
        k, lam = cgf(query, t, use_fast_path=use_fast_path)
        return CgfSample(t=t, k=k, lambda_opt=lam)

    samples = tuple(map_ordered(one, ts, max_workers=max_workers))
    non_finite = sum(not s.finite for s in samples)
    if non_finite:
        logger.info("cgf_curve %s: %d of %d samples are +inf", query.spec.label, non_finite, len(samples))
    return CgfCurve(
        samples=samples,
        spec_name=query.spec.label,
        dist_digest=_curve_digest(query.dist, query.range_override),
        evaluate=lambda t: cgf(query, t, use_fast_path=use_fast_path)[0],
    )


def subexponential_probe(query, decades=12):
    """
    Probe finiteness of K on a symmetric geometric grid.

    Returns:
        ProbeReport with the finite ts, the largest symmetric interval of
        finiteness and a classification hint
    """
    magnitudes = np.geomspace(2.0 ** -4, 2.0 ** (decades - 5), decades)
    ts = np.concatenate([-magnitudes[::-1], magnitudes])
    finite = {float(t): cgf(query, float(t))[0].is_finite for t in ts}

    radius = 0.0
    for m in magnitudes:
        if finite[float(m)] and finite[float(-m)]:
            radius = float(m)
        else:
            break
    finite_ts = tuple(t for t in sorted(finite) if finite[t])

    lo, hi = query.effective_range
    if math.isfinite(query.spec.slope_inf.value) and (math.isinf(lo) or math.isinf(hi)):
        hint = "bounded-only-regime"
    elif all(finite.values()):
        hint = "looks-strongly-subexponential"
    elif radius > 0:
        hint = "looks-subexponential"
    else:
        hint = "inconclusive"
    logger.debug("subexponential_probe %s: radius %g, hint %s", query.spec.label, radius, hint)
    return ProbeReport(finite_ts=finite_ts, finite_interval=(-radius, radius), classification_hint=hint)


def write_cgf_csv(path, curve):
    rows = [
        (s.t, s.k, s.lambda_opt, s.finite)
        for s in curve.samples
    ]
    write_rows_csv(path, ["t", "K", "lambda_opt", "finite"], rows)
