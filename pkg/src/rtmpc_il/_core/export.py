"""Export of episodes, datasets, results and tube artifacts.

Supports two output formats:
- csv: long-format rows (one per step, dataset entry or result point)
- json: structured documents with all fields
"""

import csv as _csv
import io as _io
import json as _json
from pathlib import Path as _Path
from typing import Any, List, Tuple, Union

import numpy as _np

from .errors import CheckpointSchemaError, InvalidParameterError
from .linmodel import BoxSet, LtiModel
from .riccati import LqrSolution
from .tube import TubeApprox

__all__ = [
    "save",
    "export_csv",
    "export_json",
    "to_rows",
    "save_tube_artifact",
    "load_tube_artifact",
    "SUPPORTED_FORMATS",
    "TUBE_SCHEMA",
]

SUPPORTED_FORMATS = ["csv", "json"]

TUBE_SCHEMA = "rtmpc_il.tube"
TUBE_SCHEMA_VERSION = 1


def _jsonable(obj: Any):
    if isinstance(obj, _np.ndarray):
        return obj.tolist()
    if isinstance(obj, _np.generic):
        return obj.item()
    if isinstance(obj, (set, tuple)):
        return list(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def to_rows(data) -> List[dict]:
    """Rows of anything with a ``rows()`` method, or a list of dicts."""
    if hasattr(data, "rows"):
        return data.rows()
    if isinstance(data, dict):
        return [data]
    if isinstance(data, list) and all(isinstance(r, dict) for r in data):
        return data
    raise TypeError(f"Cannot export {type(data).__name__} as CSV rows")


def export_csv(rows: List[dict]) -> str:
    """Rows to CSV text; the header is the union of keys in first-seen order."""
    fields: List[str] = []
    for row in rows:
        fields.extend(k for k in row if k not in fields)
    buffer = _io.StringIO()
    writer = _csv.DictWriter(buffer, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _jsonable(v) if isinstance(v, _np.generic) else v for k, v in row.items()})
    return buffer.getvalue()


def export_json(data, indent: int = 1) -> str:
    """Object (via ``to_dict``/``summary``) or plain data to JSON text."""
    if hasattr(data, "summary") and not hasattr(data, "to_dict"):
        data = data.summary()
    elif hasattr(data, "to_dict"):
        data = data.to_dict()
    return _json.dumps(data, indent=indent, sort_keys=True, default=_jsonable)


def save(data, path: Union[str, _Path], format: str = "json") -> str:
    """Save an episode, dataset, result table or plain rows to a file.

    Args:
        data: Object with ``rows()``/``to_dict()``/``summary()``, or dicts
        path: Output file path
        format: ``csv`` or ``json``

    Returns:
        Path to saved file

    Raises:
        ValueError: If format is not supported
    """
    if format not in SUPPORTED_FORMATS:
        raise ValueError(
            f"Unsupported format: {format}. "
            f"Supported formats: {', '.join(SUPPORTED_FORMATS)}"
        )
    path = _Path(path)
    content = export_csv(to_rows(data)) if format == "csv" else export_json(data)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content, encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------------------
# Tube artifact
# ---------------------------------------------------------------------------


def save_tube_artifact(
    path: Union[str, _Path],
    tube: TubeApprox,
    lqr: LqrSolution,
    model: LtiModel,
    disturbance: BoxSet,
    metadata: dict = None,
) -> _Path:
    """Write tube, LQR solution and the model they belong to."""
    doc = {
        "schema": TUBE_SCHEMA,
        "version": TUBE_SCHEMA_VERSION,
        "tube": tube.to_dict(),
        "lqr": lqr.to_dict(),
        "model": model.to_dict(),
        "disturbance": disturbance.to_dict(),
        "metadata": metadata or {},
    }
    path = _Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_json.dumps(doc, indent=1, sort_keys=True, default=_jsonable), encoding="utf-8")
    return path


def load_tube_artifact(path: Union[str, _Path]) -> Tuple[TubeApprox, LqrSolution, LtiModel, dict]:
    """Read an artifact written by :func:`save_tube_artifact`.

    Returns:
        (tube, lqr, model, metadata)

    Raises:
        CheckpointSchemaError: unreadable file or unknown schema
    """
    path = _Path(path)
    try:
        doc = _json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise CheckpointSchemaError(f"Cannot read tube artifact {path}: {e}") from e
    if not isinstance(doc, dict) or doc.get("schema") != TUBE_SCHEMA:
        raise CheckpointSchemaError(f"{path} is not a tube artifact")
    if doc.get("version") != TUBE_SCHEMA_VERSION:
        raise CheckpointSchemaError(f"Unsupported tube artifact version {doc.get('version')}")
    try:
        tube = TubeApprox.from_dict(doc["tube"])
        lqr = LqrSolution.from_dict(doc["lqr"])
        model = LtiModel.from_dict(doc["model"])
    except (KeyError, TypeError, InvalidParameterError) as e:
        raise CheckpointSchemaError(f"Corrupt tube artifact {path}: {e}") from e
    return tube, lqr, model, doc.get("metadata", {})


# EOF
