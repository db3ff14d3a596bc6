"""Binary parameter container.

Layout: the magic ``b"MANN1"`` followed by one record per parameter until
end of file. A record is ``u16 name_length | name (utf-8) | u8 dtype tag |
u8 rank | u32 dims[rank] | values``, all little-endian.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path
from typing import BinaryIO, Mapping, Union

import numpy as np

MAGIC = b"MANN1"
_TAGS = {1: np.dtype("<f4"), 2: np.dtype("<f8"), 3: np.dtype("<i8")}
_TAG_OF = {np.dtype(v).newbyteorder("="): k for k, v in _TAGS.items()}


class FormatError(ValueError):
    pass


def dump_parameters(arrays: Mapping[str, np.ndarray], fh: BinaryIO) -> None:
    fh.write(MAGIC)
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        tag = _TAG_OF.get(arr.dtype.newbyteorder("="))
        if tag is None:
            raise TypeError(f"unsupported dtype {arr.dtype} for {name}")
        encoded = name.encode("utf-8")
        fh.write(struct.pack("<H", len(encoded)))
        fh.write(encoded)
        fh.write(struct.pack("<BB", tag, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(np.ascontiguousarray(arr, dtype=_TAGS[tag]).tobytes())


def load_parameters(fh: BinaryIO) -> dict[str, np.ndarray]:
    if fh.read(len(MAGIC)) != MAGIC:
        raise FormatError("not a MANN1 parameter file")
    out: dict[str, np.ndarray] = {}
    while True:
        head = fh.read(2)
        if not head:
            return out
        if len(head) < 2:
            raise FormatError("truncated record header")
        (n,) = struct.unpack("<H", head)
        name = fh.read(n).decode("utf-8")
        tag, rank = struct.unpack("<BB", fh.read(2))
        if tag not in _TAGS:
            raise FormatError(f"unknown dtype tag {tag}")
        dims = struct.unpack(f"<{rank}I", fh.read(4 * rank))
        dtype = _TAGS[tag]
        count = int(np.prod(dims)) if rank else 1
        raw = fh.read(count * dtype.itemsize)
        if len(raw) != count * dtype.itemsize:
            raise FormatError(f"truncated values for {name}")
        out[name] = np.frombuffer(raw, dtype=dtype).reshape(dims).astype(dtype.newbyteorder("="))


def save(arrays: Mapping[str, np.ndarray], path: Union[str, Path]) -> None:
    buf = io.BytesIO()
    dump_parameters(arrays, buf)
    Path(path).write_bytes(buf.getvalue())


def load(path: Union[str, Path]) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        return load_parameters(fh)
