# Common phi-divergence generators (raw, before normalisation)
# Format: 'id': {'name', 'generator', 'family', 'finite_slope', 'finite_at_zero', 'notes'}

AVAILABLE_DIVERGENCES = {
    'alpha': {
        'name': 'alpha-divergence',
        'generator': '(x^a - 1) / (a(a - 1))',
        'family': 'power',
        'finite_slope': 'when a < 1',
        'finite_at_zero': 'when a > 0',
        'notes': 'dual of alpha(a) is alpha(1 - a)',
    },
    'kl': {
        'name': 'Kullback-Leibler',
        'generator': 'x log x',
        'family': 'power',
        'finite_slope': 'no',
        'finite_at_zero': 'yes',
        'notes': 'limit of alpha as a -> 1',
    },
    'reverse_kl': {
        'name': 'reverse Kullback-Leibler',
        'generator': '-log x',
        'family': 'power',
        'finite_slope': 'yes',
        'finite_at_zero': 'no',
        'notes': 'limit of alpha as a -> 0',
    },
    'squared_hellinger': {
        'name': 'squared Hellinger',
        'generator': '(sqrt(x) - 1)^2',
        'family': 'power',
        'finite_slope': 'yes',
        'finite_at_zero': 'yes',
        'notes': 'scaling of alpha = 1/2; self-dual',
    },
    'chi2': {
        'name': 'chi-squared',
        'generator': '(x - 1)^2',
        'family': 'power',
        'finite_slope': 'no',
        'finite_at_zero': 'yes',
        'notes': 'scaling of alpha = 2',
    },
    'jeffreys': {
        'name': 'Jeffreys',
        'generator': '(x - 1) log x',
        'family': 'symmetric',
        'finite_slope': 'no',
        'finite_at_zero': 'no',
        'notes': 'KL + reverse KL; self-dual',
    },
    'chi_alpha': {
        'name': 'chi^alpha-divergence',
        'generator': '|x - 1|^a',
        'family': 'absolute-power',
        'finite_slope': 'only at a = 1 (slope 1); +inf for a > 1',
        'finite_at_zero': 'yes',
        'notes': 'for a >= 1',
    },
    'total_variation': {
        'name': 'total variation',
        'generator': '|x - 1|',
        'family': 'absolute-power',
        'finite_slope': 'yes',
        'finite_at_zero': 'yes',
        'notes': 'chi^1-divergence; self-dual; values in [0, 2]',
    },
    'jensen_shannon': {
        'name': 'Jensen-Shannon',
        'generator': 'x log x - (1 + x) log((1 + x) / 2)',
        'family': 'symmetric',
        'finite_slope': 'yes',
        'finite_at_zero': 'yes',
        'notes': 'total divergence to the average; self-dual',
    },
    'triangular': {
        'name': 'triangular discrimination',
        'generator': '(x - 1)^2 / (x + 1)',
        'family': 'symmetric',
        'finite_slope': 'yes',
        'finite_at_zero': 'yes',
        'notes': 'Vincze-Le Cam distance; self-dual',
    },
}

# Catalog ids that take an alpha parameter
PARAMETRIC = ('alpha', 'chi_alpha')


def list_divergences():
    """Return catalog entries with their ids, sorted by id."""
    return [{**AVAILABLE_DIVERGENCES[k], 'id': k} for k in sorted(AVAILABLE_DIVERGENCES)]
