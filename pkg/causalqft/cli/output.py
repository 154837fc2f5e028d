"""CSV series and JSON reports. Identical inputs give byte-identical files."""

import csv
import json
import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def plain(value):
    """JSON-ready copy: complex as [re, im], nan and inf as null, numpy as Python."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [plain(value.real), plain(value.imag)]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_csv(path, header, rows):
    count = 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
            count += 1
    logger.info("wrote %d rows to %s", count, path)


def write_json(path, data):
    with open(path, "w") as f:
        f.write(json.dumps(plain(data), sort_keys=True, indent=2))
        f.write("\n")
    logger.info("wrote report %s", path)
