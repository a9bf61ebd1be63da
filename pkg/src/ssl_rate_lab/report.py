"""CSV result tables and JSON run manifests.

Every CSV row carries the hash of the manifest that produced it. Floats are
written with ``repr`` so files are locale-independent and round-trip exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .exact import DEFAULT_NODE_CAP, WEIGHT_TOL
from .numerics import TRUNCATION_MIN_N, TRUNCATION_SD, WINDOW_LOG_MARGIN

BASE_COLUMNS = ("family", "learner", "ell", "u", "risk", "lower_bound", "bound_name")


def truncation_settings() -> dict:
    return {"sd": TRUNCATION_SD, "min_n": TRUNCATION_MIN_N, "log_margin": WINDOW_LOG_MARGIN,
            "weight_tol": WEIGHT_TOL, "default_node_cap": DEFAULT_NODE_CAP}


def build_manifest(command: str, config: dict) -> dict:
    """Everything needed to rerun ``command`` bit-identically."""
    return {
        "command": command,
        "config": config,
        "truncation": truncation_settings(),
        "versions": {"ssl_rate_lab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
    }


def manifest_hash(manifest: dict) -> str:
    blob = json.dumps(manifest, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, rows: list[dict], columns, mhash: str) -> Path:
    """Write ``rows`` with the given leading columns, any extra keys after them, then ``manifest_hash``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = list(columns)
    for row in rows:
        cols += [k for k in row if k not in cols]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        w.writerow(cols + ["manifest_hash"])
        for row in rows:
            w.writerow([format_value(row.get(c)) for c in cols] + [mhash])
    return path


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = dict(manifest, manifest_hash=manifest_hash(manifest))
    path.write_text(json.dumps(body, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def read_manifest(path) -> dict:
    body = json.loads(Path(path).read_text(encoding="utf-8"))
    body.pop("manifest_hash", None)
    return body
