"""Deterministic binary checkpoints for named float64 arrays.

Layout: magic ``QFCK``, a little-endian u32 format version, a u32 header
length, a canonical-JSON header (sorted keys, no whitespace) declaring
array names and shapes plus free-form metadata, then the raw
little-endian float64 array bodies in header order.  Writing the same
arrays and metadata twice yields byte-identical files, which archive
formats with embedded timestamps do not.
"""

from __future__ import annotations

import json
import struct

import numpy as np

_MAGIC = b"QFCK"
_VERSION = 1


def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    """Write named arrays and JSON-serializable metadata to ``path``."""
    names = sorted(arrays)
    header = {
        "arrays": [{"name": n, "shape": list(np.asarray(arrays[n]).shape)}
                   for n in names],
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(blob)))
        fh.write(blob)
        for n in names:
            arr = np.ascontiguousarray(arrays[n], dtype="<f8")
            fh.write(arr.tobytes())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    """Read a checkpoint back as (arrays, meta)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError("not a checkpoint file: bad magic %r" % magic)
        version, hlen = struct.unpack("<II", fh.read(8))
        if version != _VERSION:
            raise ValueError("unsupported checkpoint version %d" % version)
        header = json.loads(fh.read(hlen).decode("utf-8"))
        arrays = {}
        for spec in header["arrays"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            body = fh.read(8 * count)
            if len(body) != 8 * count:
                raise ValueError("truncated checkpoint body for %r" % spec["name"])
            arrays[spec["name"]] = np.frombuffer(body, dtype="<f8").reshape(shape).copy()
        trailing = fh.read(1)
        if trailing:
            raise ValueError("trailing bytes after checkpoint body")
    return arrays, header.get("meta", {})
