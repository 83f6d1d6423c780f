"""Writer for the binary tensor container consumed by the stylization codec.

Byte layout (all integers little-endian): 6-byte magic ``GWCTW1``, then per
entry: name_len uint16, UTF-8 name, dtype byte (``f`` = float32), ndim
uint8, ndim x uint32 dims, row-major payload, uint32 CRC32 of the payload.
"""

import struct
import zlib

import numpy as np

WEIGHTS_MAGIC = b"GWCTW1"


def write_weight_file(path, tensors):
    """Write float32 ``tensors`` (name -> array mapping), sorted by name.

    Sorting makes the output a pure function of the tensor values, so
    re-exports of identical checkpoints hash identically.
    """
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        for name in sorted(tensors):
            arr = np.asarray(tensors[name], dtype="<f4", order="C")
            name_b = name.encode("utf-8")
            payload = arr.tobytes()
            fh.write(struct.pack("<H", len(name_b)))
            fh.write(name_b)
            fh.write(b"f")
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(payload)
            fh.write(struct.pack("<I", zlib.crc32(payload)))
