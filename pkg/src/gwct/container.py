"""Binary TLV tensor container used by weight files and style-model files.

One parser serves two formats that differ only in magic:

  GWCTW1  codec weight files (float32 tensors only)
  GWCTM1  style-model files

Layout (all integers little-endian, documented bit-exactly in
docs/formats.md):

  magic                 6 ASCII bytes
  per entry, repeated to EOF:
    name_len            uint16
    name                UTF-8 bytes
    dtype               1 byte: b'f' float32, b'd' float64, b'q' int64,
                        b'r' raw bytes
    ndim                uint8 (1 for raw bytes, dims = [byte count])
    dims                ndim x uint32
    payload             row-major, little-endian
    crc32               uint32 over the payload bytes
"""

from __future__ import annotations

import struct
import zlib
from collections import OrderedDict

import numpy as np

from .errors import FormatError, IntegrityError

WEIGHTS_MAGIC = b"GWCTW1"
MODEL_MAGIC = b"GWCTM1"

_DTYPES = {b"f": np.dtype("<f4"), b"d": np.dtype("<f8"), b"q": np.dtype("<i8")}
_DTYPE_CODES = {v: k for k, v in _DTYPES.items()}
_MAX_NDIM = 8


def _dtype_code(arr: np.ndarray) -> bytes:
    code = _DTYPE_CODES.get(arr.dtype.newbyteorder("<"))
    if code is None:
        raise FormatError(f"unsupported tensor dtype {arr.dtype}")
    return code


def write_container(path, magic: bytes, entries) -> None:
    """Write named tensors (or raw ``bytes``) to ``path``.

    ``entries`` is an iterable of (name, value) pairs; names must be unique.
    """
    seen = set()
    with open(path, "wb") as fh:
        fh.write(magic)
        for name, value in entries:
            if name in seen:
                raise FormatError(f"duplicate entry name {name!r}")
            seen.add(name)
            name_b = name.encode("utf-8")
            fh.write(struct.pack("<H", len(name_b)))
            fh.write(name_b)
            if isinstance(value, (bytes, bytearray)):
                payload = bytes(value)
                fh.write(b"r")
                fh.write(struct.pack("<B", 1))
                fh.write(struct.pack("<I", len(payload)))
            else:
                # np.ascontiguousarray would promote 0-d arrays to 1-d.
                arr = np.asarray(value, order="C")
                if arr.ndim > _MAX_NDIM:
                    raise FormatError(f"tensor rank {arr.ndim} exceeds {_MAX_NDIM}")
                code = _dtype_code(arr)
                payload = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
                fh.write(code)
                fh.write(struct.pack("<B", arr.ndim))
                for dim in arr.shape:
                    fh.write(struct.pack("<I", dim))
            fh.write(payload)
            fh.write(struct.pack("<I", zlib.crc32(payload)))


class _Reader:
    def __init__(self, blob: bytes, path):
        self.blob = blob
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise FormatError(f"{self.path}: truncated file")
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))[0]


def read_container(path, magic: bytes):
    """Read a container written by :func:`write_container`.

    Returns
    -------
    (entries, checksums)
        ``entries`` maps name to ndarray or bytes in file order;
        ``checksums`` maps name to the stored CRC32.

    Raises
    ------
    FormatError
        Wrong magic, truncation, or malformed structure.
    IntegrityError
        Stored checksum does not match the payload.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    rd = _Reader(blob, path)
    got = rd.take(len(magic))
    if got != magic:
        raise FormatError(f"{path}: bad magic {got!r}, expected {magic!r}")
    entries: "OrderedDict[str, np.ndarray | bytes]" = OrderedDict()
    checksums: dict[str, int] = {}
    while rd.pos < len(blob):
        name_len = rd.unpack("<H")
        name = rd.take(name_len).decode("utf-8")
        if name in entries:
            raise FormatError(f"{path}: duplicate entry name {name!r}")
        code = rd.take(1)
        ndim = rd.unpack("<B")
        if ndim > _MAX_NDIM:
            raise FormatError(f"{path}: entry {name!r} has rank {ndim}")
        dims = tuple(rd.unpack("<I") for _ in range(ndim))
        if code == b"r":
            if ndim != 1:
                raise FormatError(f"{path}: raw entry {name!r} must have rank 1")
            payload = rd.take(dims[0])
            value: np.ndarray | bytes = payload
        elif code in _DTYPES:
            dtype = _DTYPES[code]
            n_items = 1
            for dim in dims:
                n_items *= dim
            payload = rd.take(n_items * dtype.itemsize)
            value = np.frombuffer(payload, dtype=dtype).reshape(dims).copy()
        else:
            raise FormatError(f"{path}: entry {name!r} has unknown dtype {code!r}")
        stored = rd.unpack("<I")
        actual = zlib.crc32(payload)
        if stored != actual:
            raise IntegrityError(
                f"{path}: checksum mismatch for {name!r} "
                f"(stored {stored:#010x}, computed {actual:#010x})"
            )
        entries[name] = value
        checksums[name] = stored
    return entries, checksums
