"""Binary, CSV and JSON serialization for fields and reports.

The binary container is little-endian: the magic ``b"CLAB"``, a ``u32``
format version, a ``u32`` dimension, one ``u32`` point count per axis, the
per-axis ``lo`` then ``hi`` bounds as ``f64``, then the node values as
``f64`` in row-major order.
"""

from __future__ import annotations

import io
import json
import math
import struct
from pathlib import Path

import numpy as np

from .errors import ConelabError
from .field import GridDomain, ScalarField

__all__ = ["MAGIC", "VERSION", "write_field", "read_field", "field_to_bytes",
           "field_from_bytes", "write_csv", "csv_text", "field_csv", "field_csv_text",
           "dump_json", "json_text", "to_jsonable"]

MAGIC = b"CLAB"
VERSION = 1


def field_to_bytes(u):
    dom = u.domain
    head = MAGIC + struct.pack("<II", VERSION, dom.dim)
    head += struct.pack(f"<{dom.dim}I", *dom.n_pts)
    head += struct.pack(f"<{dom.dim}d", *dom.lo) + struct.pack(f"<{dom.dim}d", *dom.hi)
    return head + np.ascontiguousarray(u.values, dtype="<f8").tobytes()


def field_from_bytes(buf):
    buf = bytes(buf)
    if buf[:4] != MAGIC or len(buf) < 12:
        raise ConelabError("not a CLAB container")
    version, dim = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise ConelabError(f"unsupported container version {version}")
    if dim not in (1, 2) or len(buf) < 12 + 20 * dim:
        raise ConelabError("truncated or malformed container header")
    off = 12
    n_pts = struct.unpack_from(f"<{dim}I", buf, off)
    off += 4 * dim
    lo = struct.unpack_from(f"<{dim}d", buf, off)
    off += 8 * dim
    hi = struct.unpack_from(f"<{dim}d", buf, off)
    off += 8 * dim
    count = int(np.prod(n_pts))
    if off + 8 * count != len(buf):
        raise ConelabError("container length does not match its header")
    vals = np.frombuffer(buf, dtype="<f8", count=count, offset=off).copy()
    return ScalarField(GridDomain(lo, hi, n_pts), vals.reshape(n_pts))


def write_field(path, u):
    Path(path).write_bytes(field_to_bytes(u))


def read_field(path):
    return field_from_bytes(Path(path).read_bytes())


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def csv_text(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(path, header, rows):
    Path(path).write_text(csv_text(header, rows))


def field_csv_text(domain, columns):
    """One row per node: coordinates ``x1[,x2]`` then the named columns."""
    coords = domain.coords().reshape(-1, domain.dim)
    names = [f"x{i + 1}" for i in range(domain.dim)] + list(columns)
    cols = [np.asarray(v).reshape(-1) for v in columns.values()]
    rows = (list(c) + [col[k] for col in cols] for k, c in enumerate(coords))
    return csv_text(names, rows)


def field_csv(path, domain, columns):
    Path(path).write_text(field_csv_text(domain, columns))


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def json_text(obj):
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def dump_json(path, obj):
    Path(path).write_text(json_text(obj))
