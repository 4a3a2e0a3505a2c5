import math
import re

import numpy as np

from divbound.backend.utils.errors import DivboundError, InputFormatError
from divbound.backend.utils.extended_real import ExtReal
from divbound.backend.utils.measures import PushforwardDist, quadrature_dist

DEFAULT_ORDERS = {"gaussian": 40, "gamma": 40, "legendre": 20}


def format_number(value):
    """
    Render a value for CSV/JSON output.

    Args:
        value: float, int, bool, ExtReal, str or None

    Returns:
        12 significant digits, 'inf'/'-inf' for infinities, '' for None
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, str):
        return value
    if isinstance(value, ExtReal):
        value = value.value
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if value == 0:
        return "0"
    return f"{value:.12g}"


def json_number(value):
    """JSON-safe number: finite floats stay numeric, infinities become 'inf'."""
    if isinstance(value, ExtReal):
        value = value.value
    if value is None:
        return None
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return float(f"{value:.12g}")


def _parse_value(token, where):
    token = token.strip().lower()
    if token in ("inf", "+inf"):
        return math.inf
    if token == "-inf":
        return -math.inf
    try:
        value = float(token)
    except ValueError:
        raise InputFormatError(f"{where}: {token!r} is not a number") from None
    if math.isnan(value):
        raise InputFormatError(f"{where}: NaN is not allowed")
    return value


def parse_grid(text):
    """
    Parse a grid 'lo:hi:step' (inclusive, hi snapped to the last full step)
    or a comma-separated sorted list.
    """
    text = (text or "").strip()
    if not text:
        raise InputFormatError("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputFormatError(f"grid {text!r} must look like lo:hi:step")
        lo, hi, step = (_parse_value(p, f"grid {text!r}") for p in parts)
        if not all(math.isfinite(v) for v in (lo, hi, step)):
            raise InputFormatError(f"grid {text!r} must be finite")
        if step <= 0 or hi < lo:
            raise InputFormatError(f"grid {text!r} needs step > 0 and hi >= lo")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        values = [float(f"{round(lo + i * step, 12):.12g}") for i in range(count)]
        return [0.0 if v == 0 else v for v in values]

    values = [_parse_value(tok, f"grid {text!r}") for tok in text.split(",") if tok.strip()]
    if not values or not all(math.isfinite(v) for v in values):
        raise InputFormatError(f"grid {text!r} must hold finite numbers")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise InputFormatError(f"grid {text!r} must be strictly increasing")
    return values


def parse_range_override(text):
    """Parse 'lo,hi' where either end may be inf."""
    parts = [p for p in (text or "").split(",")]
    if len(parts) != 2:
        raise InputFormatError(f"range override {text!r} must look like lo,hi")
    lo, hi = (_parse_value(p, "range override") for p in parts)
    if lo > hi:
        raise InputFormatError(f"range override {text!r} has lo > hi")
    return lo, hi


def _numbers(body, where):
    return [_parse_value(tok, where) for tok in body.split(",") if tok.strip()]


def parse_inline_dist(text):
    """
    Parse an inline distribution.

    Forms: uniform:x1,x2,...  weighted:x1@w1,x2@w2,...
           gaussian:mu,sigma[,order]  gamma:k,theta[,order]  legendre:a,b[,order]
    """
    match = re.fullmatch(r"\s*([a-z_-]+)\s*:(.*)", text or "")
    if not match:
        raise InputFormatError(f"distribution {text!r} must look like family:params")
    family, body = match.group(1), match.group(2)
    where = f"distribution {text!r}"
    try:
        if family == "uniform":
            xs = _numbers(body, where)
            if not xs:
                raise InputFormatError(f"{where}: no points")
            xs = sorted(set(xs))
            return PushforwardDist.from_arrays(xs, np.full(len(xs), 1.0 / len(xs)), source="discrete")
        if family == "weighted":
            xs, ws = [], []
            for tok in body.split(","):
                if "@" not in tok:
                    raise InputFormatError(f"{where}: expected x@w, got {tok!r}")
                x, w = tok.split("@", 1)
                xs.append(_parse_value(x, where))
                ws.append(_parse_value(w, where))
            return PushforwardDist.from_arrays(xs, ws, source="discrete")
        if family in DEFAULT_ORDERS:
            nums = _numbers(body, where)
            if len(nums) not in (2, 3):
                raise InputFormatError(f"{where}: expected two parameters and an optional order")
            order = nums[2] if len(nums) == 3 else DEFAULT_ORDERS[family]
            quad_family = "uniform" if family == "legendre" else family
            return quadrature_dist(quad_family, nums[:2], order)
    except InputFormatError:
        raise
    except DivboundError as e:
        raise InputFormatError(f"{where}: {e}") from e
    raise InputFormatError(f"{where}: unknown family {family!r}")
