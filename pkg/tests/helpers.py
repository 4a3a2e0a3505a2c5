import numpy as np

from divbound.backend.utils.measures import DiscreteMeasure, PushforwardDist


def random_dist(rng, max_atoms=4, low=-2.0, high=2.0):
    """Random finite distribution with weights bounded away from zero."""
    n = int(rng.integers(2, max_atoms + 1))
    ws = 0.1 + rng.dirichlet(np.ones(n))
    ws = ws / ws.sum()
    xs = rng.uniform(low, high, size=n)
    return PushforwardDist.from_arrays(xs, ws)


def random_pair(rng, n):
    """Two probability measures with full support on p0..p{n-1}."""
    ids = [f"p{i}" for i in range(n)]
    mu = rng.dirichlet(np.ones(n)) + 0.01
    nu = rng.dirichlet(np.ones(n)) + 0.01
    mu, nu = mu / mu.sum(), nu / nu.sum()
    return (
        DiscreteMeasure.from_vector(mu.tolist(), ids=ids),
        DiscreteMeasure.from_vector(nu.tolist(), ids=ids),
        ids,
    )


def singular_pair(rng, n, mu_zero=(), nu_zero=()):
    """Like random_pair, with mu (or nu) weight removed from the listed indices."""
    ids = [f"p{i}" for i in range(n)]
    mu = rng.dirichlet(np.ones(n)) + 0.01
    nu = rng.dirichlet(np.ones(n)) + 0.01
    mu[list(mu_zero)] = 0.0
    nu[list(nu_zero)] = 0.0
    mu, nu = mu / mu.sum(), nu / nu.sum()
    return (
        DiscreteMeasure.from_dict(dict(zip(ids, mu.tolist()))),
        DiscreteMeasure.from_dict(dict(zip(ids, nu.tolist()))),
    )
