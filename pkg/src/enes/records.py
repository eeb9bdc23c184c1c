"""Versioned flat binary records and atomic file writes.

Layout: 6-byte magic, 1 format-version byte, 4-byte little-endian header length,
a UTF-8 JSON header, then each array's raw little-endian bytes in header order.
No timestamps are stored, so equal contents give equal bytes.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"ENESRC"
FORMAT_VERSION = 1


class RecordError(ValueError):
    pass


def atomic_write_bytes(path, data: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def encode_record(kind: str, meta: dict, arrays: dict[str, np.ndarray]) -> bytes:
    specs = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        dtype = arr.dtype.newbyteorder("<")
        specs.append({"name": name, "dtype": dtype.str, "shape": list(arr.shape)})
        blobs.append(np.ascontiguousarray(arr, dtype=dtype).tobytes())
    header = json.dumps({"kind": kind, "meta": meta, "arrays": specs}, sort_keys=True).encode()
    return MAGIC + bytes([FORMAT_VERSION]) + struct.pack("<I", len(header)) + header + b"".join(blobs)


def decode_record(data: bytes, kind: str) -> tuple[dict, dict[str, np.ndarray]]:
    if len(data) < 11 or data[:6] != MAGIC:
        raise RecordError("not an enes record file")
    if data[6] != FORMAT_VERSION:
        raise RecordError(f"unsupported format version {data[6]} (expected {FORMAT_VERSION})")
    (hlen,) = struct.unpack("<I", data[7:11])
    if len(data) < 11 + hlen:
        raise RecordError("truncated record header")
    try:
        header = json.loads(data[11 : 11 + hlen])
    except ValueError as exc:
        raise RecordError(f"corrupt record header: {exc}") from exc
    if header.get("kind") != kind:
        raise RecordError(f"expected a {kind!r} record, found {header.get('kind')!r}")
    arrays = {}
    pos = 11 + hlen
    for spec in header["arrays"]:
        dtype = np.dtype(spec["dtype"])
        shape = tuple(spec["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if pos + nbytes > len(data):
            raise RecordError(f"truncated record: array {spec['name']!r} is incomplete")
        arrays[spec["name"]] = np.frombuffer(data[pos : pos + nbytes], dtype=dtype).reshape(shape).copy()
        pos += nbytes
    if pos != len(data):
        raise RecordError(f"trailing bytes in record ({len(data) - pos})")
    return header["meta"], arrays


def write_record(path, kind: str, meta: dict, arrays: dict[str, np.ndarray]):
    atomic_write_bytes(path, encode_record(kind, meta, arrays))


def read_record(path, kind: str) -> tuple[dict, dict[str, np.ndarray]]:
    return decode_record(Path(path).read_bytes(), kind)
