"""Versioned binary container for model files.

Byte layout, in order:

* 8-byte magic ``b"HISTTAG\\0"``
* format version, unsigned 32-bit little-endian (currently 1)
* header length in bytes, unsigned 32-bit little-endian
* header: UTF-8 JSON object with two fixed keys: ``meta`` (free-form,
  JSON-safe model configuration such as dims, direction, vocabulary code
  points) and ``tensors`` (ordered list of ``[name, shape]`` entries)
* tensor payloads: little-endian 32-bit floats, row-major, concatenated in
  the declared order with no padding

Tensors live in float64 in memory but are stored as float32.  Because every
float32 converts to float64 and back without loss, save → load → save is
byte-identical.
"""

import hashlib
import json
import struct
from typing import Mapping, Sequence

import numpy as np

from .errors import ModelFormatError

MAGIC = b"HISTTAG\0"
FORMAT_VERSION = 1
_HEAD = struct.Struct("<II")


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def save_tensors(path, meta: Mapping, tensors: Sequence[tuple[str, np.ndarray]]) -> None:
    """Write a container file with the given metadata and named tensors."""
    manifest = []
    for name, array in tensors:
        manifest.append([name, list(array.shape)])
    header = json.dumps({"meta": dict(meta), "tensors": manifest},
                        ensure_ascii=False, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEAD.pack(FORMAT_VERSION, len(header)))
        fh.write(header)
        for _, array in tensors:
            fh.write(np.ascontiguousarray(array, dtype="<f4").tobytes())


def load_tensors(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read a container file; returns (meta, name → float64 array)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MAGIC) + _HEAD.size:
        raise ModelFormatError(f"{path}: file too short for a model container")
    if data[:len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"{path}: bad magic, not a model file")
    version, header_len = _HEAD.unpack_from(data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format version {version}, expected {FORMAT_VERSION}")
    body_start = len(MAGIC) + _HEAD.size
    header_end = body_start + header_len
    if len(data) < header_end:
        raise ModelFormatError(f"{path}: truncated header")
    try:
        header = json.loads(data[body_start:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: unreadable header: {exc}") from exc
    if not isinstance(header, dict) or "meta" not in header or "tensors" not in header:
        raise ModelFormatError(f"{path}: header missing meta/tensors keys")

    tensors: dict[str, np.ndarray] = {}
    offset = header_end
    for entry in header["tensors"]:
        try:
            name, shape = entry
            shape = tuple(int(d) for d in shape)
        except (TypeError, ValueError) as exc:
            raise ModelFormatError(f"{path}: malformed tensor entry {entry!r}") from exc
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * 4
        if offset + nbytes > len(data):
            raise ModelFormatError(
                f"{path}: truncated payload for tensor {name!r}")
        flat = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
        tensors[name] = flat.reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(data):
        raise ModelFormatError(
            f"{path}: {len(data) - offset} trailing bytes after declared tensors")
    return header["meta"], tensors
