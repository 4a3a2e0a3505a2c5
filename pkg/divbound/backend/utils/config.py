import os
import logging
from dotenv import load_dotenv

# Load environment variables from a local .env, if any
load_dotenv()

logger = logging.getLogger(__name__)

DEFAULTS = {
    "DIVBOUND_THREADS": "1",
    "DIVBOUND_LOG_LEVEL": "WARNING",
    "DIVBOUND_CLOSED_TOL": "1e-10",
    "DIVBOUND_SAMPLED_TOL": "1e-6",
    "DIVBOUND_REFINE_ROUNDS": "3",
    "DIVBOUND_MAX_BRACKET_WIDTH": "1e8",
}


def get_str(key, default=None):
    """
    Read a setting from the environment, falling back to the documented default.

    Args:
        key: Setting name, e.g. ``DIVBOUND_THREADS``
        default: Value used when neither the environment nor DEFAULTS define it

    Returns:
        The raw string value
    """
    value = os.environ.get(key)
    if value is None or value.strip() == "":
        return DEFAULTS.get(key, default)
    return value.strip()


def get_int(key, default=None):
    raw = get_str(key, default)
    try:
        return int(raw)
    except (TypeError, ValueError):
        logger.warning("Ignoring non-integer %s=%r, using %s", key, raw, DEFAULTS.get(key))
        return int(DEFAULTS[key])


def get_float(key, default=None):
    raw = get_str(key, default)
    try:
        return float(raw)
    except (TypeError, ValueError):
        logger.warning("Ignoring non-numeric %s=%r, using %s", key, raw, DEFAULTS.get(key))
        return float(DEFAULTS[key])


def thread_count():
    """Worker cap for curve sweeps (never below 1)."""
    return max(1, get_int("DIVBOUND_THREADS"))


def log_level():
    return get_str("DIVBOUND_LOG_LEVEL").upper()
