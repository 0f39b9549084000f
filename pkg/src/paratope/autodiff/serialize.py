"""Flat binary container for model weights.

Layout (all integers little-endian):

    magic   4 bytes  b"PTWT"
    version u16      currently 1
    kind    u16 length + utf-8 bytes (model kind tag, e.g. "fast")
    count   u32      number of arrays
    entry   u16 name length + utf-8 name
            u8  ndim, then ndim * u32 dims
            float32 little-endian values, row-major

Running statistics are stored alongside trainable weights; the loader
returns plain float32 numpy arrays keyed by name.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import WeightsFormatError

MAGIC = b"PTWT"
VERSION = 1


def save_arrays(path, kind: str, arrays: dict[str, np.ndarray]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    kind_b = kind.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", VERSION))
        fh.write(struct.pack("<H", len(kind_b)))
        fh.write(kind_b)
        fh.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            name_b = name.encode("utf-8")
            arr = np.ascontiguousarray(arr, dtype="<f4")
            fh.write(struct.pack("<H", len(name_b)))
            fh.write(name_b)
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(arr.tobytes())


def load_arrays(path) -> tuple[str, dict[str, np.ndarray]]:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != MAGIC:
        raise WeightsFormatError(f"{path}: not a weights container (bad magic)")
    offset = 4

    def unpack(fmt):
        nonlocal offset
        size = struct.calcsize(fmt)
        values = struct.unpack_from(fmt, raw, offset)
        offset += size
        return values

    (version,) = unpack("<H")
    if version != VERSION:
        raise WeightsFormatError(f"{path}: unsupported weights version {version}")
    (kind_len,) = unpack("<H")
    kind = raw[offset:offset + kind_len].decode("utf-8")
    offset += kind_len
    (count,) = unpack("<I")
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = unpack("<H")
        name = raw[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = unpack("<B")
        shape = unpack(f"<{ndim}I") if ndim else ()
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f4", count=n, offset=offset).reshape(shape)
        offset += 4 * n
        arrays[name] = arr.copy()
    return kind, arrays
