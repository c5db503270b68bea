"""JSON matrix files and CSV measurement records.

Matrix file layout::

    {"kind": "chi", "d": 2, "shape": [4, 4],
     "entries": [[re, im], ...],            # flat, row-major
     "metadata": {...}}

Kraus files use ``kind = "kraus"`` and shape ``[K, d, d]``. Floats are written
with ``repr`` so values round-trip exactly.
"""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .tomography import MeasurementRecord

RECORD_HEADER = ("prep_index", "basis", "outcome", "probability", "shots")


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return value


def matrix_document(kind: str, array, metadata: dict | None = None) -> dict:
    a = np.asarray(array, dtype=complex)
    flat = a.reshape(-1)
    d = a.shape[-1]
    return {
        "kind": kind,
        "d": int(d),
        "shape": list(a.shape),
        "entries": [[float(z.real), float(z.imag)] for z in flat],
        "metadata": _jsonable(metadata or {}),
    }


def dumps_matrix(kind: str, array, metadata: dict | None = None) -> str:
    return json.dumps(matrix_document(kind, array, metadata), indent=1) + "\n"


def write_matrix(path, kind: str, array, metadata: dict | None = None) -> None:
    Path(path).write_text(dumps_matrix(kind, array, metadata))


def parse_matrix(doc: dict) -> tuple[str, np.ndarray, dict]:
    for key in ("kind", "shape", "entries"):
        if key not in doc:
            raise ValueError(f"matrix document lacks {key!r}")
    entries = np.asarray(doc["entries"], dtype=float)
    shape = tuple(int(s) for s in doc["shape"])
    if entries.ndim != 2 or entries.shape[1] != 2 or entries.shape[0] != int(np.prod(shape)):
        raise ValueError("entries do not match the declared shape")
    values = (entries[:, 0] + 1j * entries[:, 1]).reshape(shape)
    return doc["kind"], values, doc.get("metadata", {})


def read_matrix(path) -> tuple[str, np.ndarray, dict]:
    return parse_matrix(json.loads(Path(path).read_text()))


def write_records(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_HEADER)
        for r in records:
            w.writerow([r.prep_index, r.basis, r.outcome, repr(r.probability), "" if r.shots is None else r.shots])


def read_records(path) -> list[MeasurementRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        MeasurementRecord(
            int(row["prep_index"]),
            int(row["basis"]),
            int(row["outcome"]),
            float(row["probability"]),
            int(row["shots"]) if row["shots"] else None,
        )
        for row in rows
    ]
