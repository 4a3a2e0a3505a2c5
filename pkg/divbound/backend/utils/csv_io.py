import csv
import json
import math
import logging
from pathlib import Path

from divbound.backend.utils.errors import DivboundError, InputFormatError
from divbound.backend.utils.measures import DiscreteMeasure, FunctionOnSupport, PushforwardDist
from divbound.backend.utils.text_utils import format_number

logger = logging.getLogger(__name__)


def _parse_float(raw, where):
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise InputFormatError(f"{where}: {raw!r} is not a number") from None
    if math.isnan(value):
        raise InputFormatError(f"{where}: NaN is not allowed")
    return value


def _read_rows(path, columns):
    path = Path(path)
    if not path.is_file():
        raise InputFormatError(f"file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        if header != list(columns):
            raise InputFormatError(f"{path}: expected header {','.join(columns)}, got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if None in row or any(row.get(c) is None for c in columns):
                raise InputFormatError(f"{path}:{lineno}: wrong number of columns")
            rows.append((lineno, {k.strip(): (v or "").strip() for k, v in row.items()}))
    if not rows:
        raise InputFormatError(f"{path}: no data rows")
    return path, rows


def read_measure_csv(path, universe_id="default", probability=True):
    """Read a measure from columns point_id, weight."""
    path, rows = _read_rows(path, ("point_id", "weight"))
    atoms = []
    for lineno, row in rows:
        weight = _parse_float(row["weight"], f"{path}:{lineno}")
        if math.isinf(weight):
            raise InputFormatError(f"{path}:{lineno}: infinite weight")
        if probability and weight < 0:
            raise InputFormatError(f"{path}:{lineno}: negative probability weight {weight!r}")
        atoms.append((row["point_id"], weight))
    try:
        return DiscreteMeasure(tuple(atoms), universe_id=universe_id, probability=probability)
    except DivboundError as e:
        raise InputFormatError(f"{path}: {e}") from e


def read_function_csv(path):
    """Read g from columns point_id, value."""
    path, rows = _read_rows(path, ("point_id", "value"))
    values = {}
    for lineno, row in rows:
        if row["point_id"] in values:
            raise InputFormatError(f"{path}:{lineno}: duplicate point_id {row['point_id']!r}")
        value = _parse_float(row["value"], f"{path}:{lineno}")
        if math.isinf(value):
            raise InputFormatError(f"{path}:{lineno}: infinite function value")
        values[row["point_id"]] = value
    return FunctionOnSupport(values)


def read_dist_csv(path):
    """Read a pushforward distribution from columns x, weight."""
    path, rows = _read_rows(path, ("x", "weight"))
    points = []
    for lineno, row in rows:
        x = _parse_float(row["x"], f"{path}:{lineno}")
        w = _parse_float(row["weight"], f"{path}:{lineno}")
        if w < 0:
            raise InputFormatError(f"{path}:{lineno}: negative weight {w!r}")
        points.append((x, w))
    try:
        return PushforwardDist(tuple(points), source=f"csv({path.name})")
    except DivboundError as e:
        raise InputFormatError(f"{path}: {e}") from e


def write_dist_csv(path, dist):
    """Write x, weight at round-trip precision so the digest survives re-ingestion."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "weight"])
        for x, w in dist.points:
            writer.writerow([repr(x), repr(w)])
    logger.info("wrote distribution with %d points to %s", len(dist.points), path)


def write_rows_csv(path, header, rows):
    """Write rows with numbers at 12 significant digits (+inf as 'inf')."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
    logger.info("wrote %d rows to %s", len(rows), path)


def write_json(path, payload):
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    logger.info("wrote %s", path)


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise InputFormatError(f"file not found: {path}")
    try:
        with path.open(encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise InputFormatError(f"{path}: invalid JSON ({e})") from e
