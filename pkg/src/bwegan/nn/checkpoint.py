"""Checkpoint container: a JSON header followed by raw little-endian arrays.

Layout (all integers little-endian)::

    offset  size  field
    0       8     magic b"BWECKPT\\0"
    8       4     format version (uint32, currently 1)
    12      8     header length H in bytes (uint64)
    20      H     UTF-8 JSON header
    20+H    ...   data blob

The header is ``{"format_version": 1, "metadata": {...}, "tensors": [...]}``
where each tensor entry is ``{"name", "dtype", "shape", "offset", "nbytes"}``.
``dtype`` is a numpy little-endian code such as ``"<f4"`` or ``"<f8"``;
``offset`` is relative to the start of the data blob and is 8-byte aligned.
Arrays are stored in C order. Keys are written sorted so identical content
produces identical bytes.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

MAGIC = b"BWECKPT\0"
FORMAT_VERSION = 1


class CheckpointError(Exception):
    pass


def save_checkpoint(path, arrays: dict[str, np.ndarray], metadata: dict | None = None) -> None:
    entries = []
    blobs = []
    offset = 0
    for name in sorted(arrays):
        arr = np.asarray(arrays[name])
        arr = np.ascontiguousarray(arr.astype(arr.dtype.newbyteorder("<"), copy=False))
        raw = arr.tobytes()
        entries.append(
            {
                "name": name,
                "dtype": arr.dtype.str,
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        pad = (-len(raw)) % 8
        blobs.append(raw + b"\0" * pad)
        offset += len(raw) + pad
    header = json.dumps(
        {"format_version": FORMAT_VERSION, "metadata": metadata or {}, "tensors": entries},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    tmp = os.fspath(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", FORMAT_VERSION, len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)
    os.replace(tmp, path)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAGIC:
        raise CheckpointError(f"{path}: bad magic")
    version, hlen = struct.unpack("<IQ", data[8:20])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    header = json.loads(data[20 : 20 + hlen].decode("utf-8"))
    base = 20 + hlen
    arrays = {}
    for entry in header["tensors"]:
        start = base + entry["offset"]
        raw = data[start : start + entry["nbytes"]]
        if len(raw) != entry["nbytes"]:
            raise CheckpointError(f"{path}: truncated tensor {entry['name']}")
        arrays[entry["name"]] = np.frombuffer(raw, dtype=entry["dtype"]).reshape(entry["shape"]).copy()
    return arrays, header["metadata"]
