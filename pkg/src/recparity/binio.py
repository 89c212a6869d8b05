"""Versioned flat binary container: magic + version + JSON header + raw
float64 array payloads. Loaders reject mismatched magic or version."""

from __future__ import annotations

import json
import struct

import numpy as np


def write_flat(path, magic: bytes, version: int, header: dict,
               arrays: list) -> None:
    header = dict(header)
    header["__shapes__"] = [list(np.shape(a)) for a in arrays]
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<II", version, len(blob)))
        fh.write(blob)
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype=np.float64).tobytes())


def read_flat(path, magic: bytes, version: int):
    with open(path, "rb") as fh:
        got_magic = fh.read(len(magic))
        if got_magic != magic:
            raise ValueError(f"{path}: not a {magic!r} file")
        got_version, blob_len = struct.unpack("<II", fh.read(8))
        if got_version != version:
            raise ValueError(
                f"{path}: unsupported version {got_version}, expected {version}"
            )
        header = json.loads(fh.read(blob_len).decode("utf-8"))
        arrays = []
        for shape in header.pop("__shapes__"):
            n = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(8 * n), dtype=np.float64, count=n)
            arrays.append(data.reshape(shape).copy())
    return header, arrays
