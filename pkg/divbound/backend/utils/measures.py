"""Finite discrete measures, functions on their support, and pushforwards.

The universe of points is a tag: operations only need the atoms present.
"""
import math
import hashlib
import logging
from dataclasses import dataclass
from typing import Mapping, Tuple

import numpy as np
from scipy.special import roots_genlaguerre

from divbound.backend.utils.errors import (
    BadFamily,
    BadOrder,
    InvalidMeasure,
    MismatchedUniverse,
    MissingValue,
)

logger = logging.getLogger(__name__)

PROBABILITY_TOL = 1e-12
DIST_TOL = 1e-10

QUADRATURE_FAMILIES = ("gaussian", "gamma", "uniform")


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite signed measure given as (point_id, weight) atoms."""
    atoms: Tuple[Tuple[str, float], ...]
    universe_id: str = "default"
    probability: bool = False

    def __post_init__(self):
        atoms = tuple((str(pid), float(w)) for pid, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        ids = [pid for pid, _ in atoms]
        if len(set(ids)) != len(ids):
            raise InvalidMeasure("duplicate point ids in measure")
        for pid, w in atoms:
            if not math.isfinite(w):
                raise InvalidMeasure(f"weight of {pid!r} is not finite")
        if self.probability:
            if any(w < 0 for _, w in atoms):
                raise InvalidMeasure("probability measure has a negative weight")
            total = sum(w for _, w in atoms)
            if abs(total - 1.0) > PROBABILITY_TOL:
                raise InvalidMeasure(f"probability weights sum to {total!r}, not 1")

    @classmethod
    def from_dict(cls, weights, universe_id="default", probability=False):
        return cls(tuple(weights.items()), universe_id=universe_id, probability=probability)

    @classmethod
    def from_vector(cls, weights, ids=None, universe_id="default", probability=False):
        """Build a measure on ids p0, p1, ... (or the given ids)."""
        ids = ids if ids is not None else [f"p{i}" for i in range(len(weights))]
        return cls(tuple(zip(ids, weights)), universe_id=universe_id, probability=probability)

    def as_dict(self):
        return dict(self.atoms)

    @property
    def point_ids(self):
        return [pid for pid, _ in self.atoms]

    @property
    def support(self):
        return [pid for pid, w in self.atoms if w != 0]

    @property
    def total_mass(self):
        return float(sum(w for _, w in self.atoms))

    def weight_of(self, point_id):
        return self.as_dict().get(point_id, 0.0)


@dataclass(frozen=True)
class FunctionOnSupport:
    """Real-valued function g on point ids."""
    values: Mapping[str, float]

    def __post_init__(self):
        clean = {str(k): float(v) for k, v in dict(self.values).items()}
        for pid, v in clean.items():
            if not math.isfinite(v):
                raise InvalidMeasure(f"function value at {pid!r} is not finite")
        object.__setattr__(self, "values", clean)

    def __hash__(self):
        return hash(tuple(sorted(self.values.items())))

    @classmethod
    def from_vector(cls, values, ids=None):
        ids = ids if ids is not None else [f"p{i}" for i in range(len(values))]
        return cls(dict(zip(ids, values)))

    def value_of(self, point_id):
        try:
            return self.values[point_id]
        except KeyError:
            raise MissingValue(f"function has no value at point {point_id!r}") from None

    def negated(self):
        return FunctionOnSupport({k: -v for k, v in self.values.items()})


@dataclass(frozen=True)
class PushforwardDist:
    """Probability distribution on the real line with finitely many points."""
    points: Tuple[Tuple[float, float], ...]
    source: str = "discrete"

    def __post_init__(self):
        points = tuple((float(x), float(w)) for x, w in self.points)
        if not points:
            raise InvalidMeasure("distribution has no points")
        for x, w in points:
            if not (math.isfinite(x) and math.isfinite(w)):
                raise InvalidMeasure("distribution points and weights must be finite")
            if w < 0:
                raise InvalidMeasure(f"negative weight {w!r} at x={x!r}")
        total = sum(w for _, w in points)
        if abs(total - 1.0) > DIST_TOL:
            raise InvalidMeasure(f"distribution weights sum to {total!r}, not 1")
        object.__setattr__(self, "points", points)

    @classmethod
    def from_arrays(cls, xs, ws, source="discrete"):
        order = np.argsort(np.asarray(xs, dtype=float), kind="stable")
        xs = np.asarray(xs, dtype=float)[order]
        ws = np.asarray(ws, dtype=float)[order]
        return cls(tuple(zip(xs.tolist(), ws.tolist())), source=source)

    @classmethod
    def point_mass(cls, x):
        return cls(((float(x), 1.0),), source="discrete")

    @property
    def xs(self):
        return np.array([x for x, _ in self.points])

    @property
    def ws(self):
        return np.array([w for _, w in self.points])

    @property
    def support(self):
        return self.xs[self.ws > 0]

    @property
    def lo(self):
        return float(np.min(self.support))

    @property
    def hi(self):
        return float(np.max(self.support))

    @property
    def mean(self):
        return float(np.dot(self.ws, self.xs))

    @property
    def var(self):
        return float(np.dot(self.ws, (self.xs - self.mean) ** 2))

    @property
    def is_point_mass(self):
        return self.support.size == 1

    @property
    def digest(self):
        """sha256 over the points at round-trip precision."""
        text = "\n".join(f"{x!r},{w!r}" for x, w in self.points)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def mirrored(self):
        return PushforwardDist.from_arrays(-self.xs, self.ws, source=f"mirror({self.source})")

    def shifted(self, c):
        return PushforwardDist.from_arrays(self.xs + c, self.ws, source=self.source)

    def scaled(self, c):
        return PushforwardDist.from_arrays(self.xs * c, self.ws, source=self.source)


# ------------------------------------------------------------------------------
# Operations on measures
# ------------------------------------------------------------------------------
def integrate(measure, g):
    """<measure, g> over atoms with nonzero weight."""
    return float(sum(w * g.value_of(pid) for pid, w in measure.atoms if w != 0))


def pushforward(nu, g):
    """
    Image of nu under g, merging atoms whose values are exactly equal.

    Args:
        nu: DiscreteMeasure with unit total mass
        g: FunctionOnSupport defined on nu's support

    Returns:
        PushforwardDist sorted by value
    """
    merged = {}
    for pid, w in nu.atoms:
        if w == 0:
            continue
        x = g.value_of(pid)
        merged[x] = merged.get(x, 0.0) + w
    xs = sorted(merged)
    return PushforwardDist(tuple((x, merged[x]) for x in xs), source="discrete")


def mean_deviation(mu, nu, g):
    """<mu, g> - <nu, g>."""
    if mu.universe_id != nu.universe_id:
        raise MismatchedUniverse(f"universes differ: {mu.universe_id!r} vs {nu.universe_id!r}")
    return integrate(mu, g) - integrate(nu, g)


def merge_atoms(measure, mapping):
    """Push a measure through an explicit binning map point_id -> bin id."""
    merged = {}
    for pid, w in measure.atoms:
        if pid not in mapping:
            raise MissingValue(f"binning map has no entry for {pid!r}")
        key = str(mapping[pid])
        merged[key] = merged.get(key, 0.0) + w
    return DiscreteMeasure(
        tuple(merged.items()),
        universe_id=f"{measure.universe_id}+merged",
        probability=False,
    )


def mixture(m1, m2, theta):
    """theta * m1 + (1 - theta) * m2 on the union of atoms."""
    if m1.universe_id != m2.universe_id:
        raise MismatchedUniverse(f"universes differ: {m1.universe_id!r} vs {m2.universe_id!r}")
    d1, d2 = m1.as_dict(), m2.as_dict()
    ids = list(dict.fromkeys(list(d1) + list(d2)))
    atoms = tuple((pid, theta * d1.get(pid, 0.0) + (1.0 - theta) * d2.get(pid, 0.0)) for pid in ids)
    return DiscreteMeasure(atoms, universe_id=m1.universe_id, probability=False)


# ------------------------------------------------------------------------------
# Quadrature constructors
# ------------------------------------------------------------------------------
def quadrature_dist(family, params, order):
    """
    Gaussian quadrature approximation of a continuous distribution.

    Args:
        family: 'gaussian' (mean, sigma), 'gamma' (shape k, scale theta)
                or 'uniform' (a, b)
        params: Family parameters as a tuple
        order: Number of nodes (>= 2)

    Returns:
        PushforwardDist with normalised weights
    """
    if isinstance(order, bool) or int(order) != order or order < 2:
        raise BadOrder(f"quadrature order must be an integer >= 2, got {order!r}")
    order = int(order)
    if family not in QUADRATURE_FAMILIES:
        raise BadFamily(f"unknown family {family!r}; expected one of {', '.join(QUADRATURE_FAMILIES)}")
    try:
        p = tuple(float(v) for v in params)
    except (TypeError, ValueError):
        raise BadFamily(f"non-numeric parameters for {family}: {params!r}") from None
    if len(p) != 2 or not all(math.isfinite(v) for v in p):
        raise BadFamily(f"{family} takes two finite parameters, got {params!r}")

    if family == "gaussian":
        mu0, sigma = p
        if sigma <= 0:
            raise BadFamily("gaussian sigma must be positive")
        nodes, weights = np.polynomial.hermite.hermgauss(order)
        xs = mu0 + sigma * math.sqrt(2.0) * nodes
        ws = weights / math.sqrt(math.pi)
    elif family == "gamma":
        k, theta = p
        if k <= 0 or theta <= 0:
            raise BadFamily("gamma shape and scale must be positive")
        nodes, weights = roots_genlaguerre(order, k - 1.0)
        xs = theta * nodes
        ws = weights
    else:
        a, b = p
        if not a < b:
            raise BadFamily("uniform requires a < b")
        nodes, weights = np.polynomial.legendre.leggauss(order)
        xs = 0.5 * (a + b) + 0.5 * (b - a) * nodes
        ws = weights / 2.0

    ws = np.asarray(ws, dtype=float)
    ws = ws / ws.sum()
    logger.debug("quadrature %s%s order %d: %d nodes", family, p, order, len(xs))
    return PushforwardDist.from_arrays(xs, ws, source=f"quadrature({family},{order})")
