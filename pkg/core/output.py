"""Plot-ready serialisation of :class:`SampledCurve` objects.

CSV layout::

    # key: <json value>        (one line per metadata entry)
    x,V,psi1,...               (header)
    -14.78...,1.96...,...      (rows, 17 significant digits)

The JSON layout mirrors it: ``{"metadata": {...}, "columns": {...}}``.
Complex metadata values are stored as ``[re, im]`` pairs.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import sys
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import numpy as np

from core.models import SampledCurve, VerificationReport

logger = logging.getLogger(__name__)

FLOAT_FORMAT = ".17g"


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Enum):
        return value.value
    return value


def _fmt(value: float) -> str:
    return format(float(value), FLOAT_FORMAT)


def render_csv(curve: SampledCurve) -> str:
    curve.row_count()
    buffer = io.StringIO()
    for key, value in curve.metadata.items():
        buffer.write(f"# {key}: {json.dumps(_jsonable(value))}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    names = curve.column_names
    writer.writerow(names)
    columns = [np.asarray(curve.columns[n], dtype=float) for n in names]
    for row in zip(*columns):
        writer.writerow([_fmt(v) for v in row])
    return buffer.getvalue()


def render_json(curve: SampledCurve) -> str:
    curve.row_count()
    payload = {
        "metadata": _jsonable(curve.metadata),
        "columns": {
            name: [float(v) for v in np.asarray(col, dtype=float)]
            for name, col in curve.columns.items()
        },
    }
    return json.dumps(payload, indent=2)


def write_curve(curve: SampledCurve, path: Optional[str] = None, fmt: str = "csv") -> None:
    """Write *curve* to *path*, or to stdout when *path* is ``None``."""
    text = render_json(curve) if fmt == "json" else render_csv(curve)
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    logger.info("Wrote %d rows to %s", curve.row_count(), target)


def parse_csv(text: str) -> SampledCurve:
    metadata: dict[str, Any] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, raw = line[1:].strip().partition(":")
            metadata[key.strip()] = json.loads(raw.strip())
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        return SampledCurve(columns={}, metadata=metadata)
    names, data = rows[0], rows[1:]
    columns = {
        name: np.array([float(r[i]) for r in data], dtype=float)
        for i, name in enumerate(names)
    }
    return SampledCurve(columns=columns, metadata=metadata)


def parse_json(text: str) -> SampledCurve:
    payload = json.loads(text)
    columns = {k: np.array(v, dtype=float) for k, v in payload.get("columns", {}).items()}
    return SampledCurve(columns=columns, metadata=payload.get("metadata", {}))


def read_curve(path: str) -> SampledCurve:
    """Load a curve written by :func:`write_curve`; format from the suffix."""
    text = Path(path).read_text(encoding="utf-8")
    if Path(path).suffix.lower() == ".json":
        return parse_json(text)
    return parse_csv(text)


def render_report_json(report: VerificationReport) -> str:
    """Verification report as JSON: the summary plus one entry per check."""
    payload = {
        "summary": report.summary(),
        "checks": [
            {
                "suite": c.suite,
                "name": c.name,
                "tolerance": c.tolerance,
                "measured": c.measured if np.isfinite(c.measured) else None,
                "passed": c.passed,
            }
            for c in report.checks
        ],
    }
    return json.dumps(payload, indent=2)
