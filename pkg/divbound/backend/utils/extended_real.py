"""Extended real numbers and closed intervals.

``ExtReal`` wraps a float that may be +inf or -inf but never NaN. Arithmetic
follows the convex-analysis conventions used throughout the package:
(+inf) + (-inf) = +inf and 0 * (+-inf) = 0.
"""
import math
from dataclasses import dataclass
from functools import total_ordering

import numpy as np

from divbound.backend.utils.errors import DivboundError

INF = math.inf


def ext_add(a, b):
    """Scalar addition with (+inf) + (-inf) = +inf."""
    if math.isinf(a) and math.isinf(b) and a != b:
        return INF
    return a + b


def ext_mul(a, b):
    """Scalar product with 0 * inf = 0."""
    if a == 0 or b == 0:
        return 0.0
    return a * b


def ext_dot(weights, values):
    """
    Weighted sum of extended-real values.

    Zero weights contribute nothing even against infinite values, and any
    positive weight on +inf makes the sum +inf.
    """
    weights = np.asarray(weights, dtype=float)
    values = np.asarray(values, dtype=float)
    live = weights != 0
    if not np.any(live):
        return 0.0
    terms = weights[live] * values[live]
    if np.any(terms == INF):
        return INF
    return float(np.sum(terms))


@total_ordering
@dataclass(frozen=True)
class ExtReal:
    value: float

    def __post_init__(self):
        value = float(self.value)
        if math.isnan(value):
            raise DivboundError("ExtReal cannot hold NaN")
        object.__setattr__(self, "value", value)

    @classmethod
    def of(cls, x):
        return x if isinstance(x, ExtReal) else cls(float(x))

    @classmethod
    def inf(cls):
        return cls(INF)

    @classmethod
    def neg_inf(cls):
        return cls(-INF)

    @property
    def is_finite(self):
        return math.isfinite(self.value)

    @property
    def is_pos_inf(self):
        return self.value == INF

    @property
    def is_neg_inf(self):
        return self.value == -INF

    def __add__(self, other):
        return ExtReal(ext_add(self.value, ExtReal.of(other).value))

    __radd__ = __add__

    def __neg__(self):
        return ExtReal(-self.value)

    def __sub__(self, other):
        return self + (-ExtReal.of(other))

    def __rsub__(self, other):
        return ExtReal.of(other) + (-self)

    def __mul__(self, other):
        return ExtReal(ext_mul(self.value, ExtReal.of(other).value))

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (ExtReal, int, float)):
            return self.value == ExtReal.of(other).value
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, (ExtReal, int, float)):
            return self.value < ExtReal.of(other).value
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    def __float__(self):
        return self.value

    def __str__(self):
        if self.is_pos_inf:
            return "inf"
        if self.is_neg_inf:
            return "-inf"
        return repr(self.value)


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] of extended reals (used for subgradients)."""
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise DivboundError(f"Invalid interval [{self.lo}, {self.hi}]")

    @property
    def midpoint(self):
        if math.isinf(self.lo) or math.isinf(self.hi):
            return ext_add(self.lo, self.hi) / 2 if self.lo != -self.hi else 0.0
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self):
        return self.hi - self.lo

    def contains(self, x, tol=0.0):
        return self.lo - tol <= x <= self.hi + tol
