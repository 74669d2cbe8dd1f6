"""Binary tensor container used for checkpoints and raw-tensor sidecars.

Layout: magic (4 bytes), version u32 LE, tensor count u32 LE, then per tensor
name length u16 + UTF-8 name, rank u8, dims as u32 LE, payload as little-endian
IEEE-754 f32; the file ends with a CRC-32 of all preceding bytes.
"""

import struct
import zlib

import numpy as np

from .errors import DataError

VERSION = 1

MAGIC_MODEL = b"LPAE"
MAGIC_EMBED = b"LPSR"
MAGIC_TENSOR = b"LPTN"


def write_tensors(path, tensors, magic):
    """tensors: ordered dict/list of (name, array). Arrays stored as f32."""
    if isinstance(tensors, dict):
        tensors = list(tensors.items())
    buf = bytearray()
    buf += magic
    buf += struct.pack("<II", VERSION, len(tensors))
    for name, arr in tensors:
        arr = np.asarray(arr, dtype="<f4")
        nm = name.encode("utf-8")
        buf += struct.pack("<H", len(nm)) + nm
        buf += struct.pack("<B", arr.ndim)
        for d in arr.shape:
            buf += struct.pack("<I", d)
        buf += arr.tobytes(order="C")
    buf += struct.pack("<I", zlib.crc32(bytes(buf)) & 0xFFFFFFFF)
    with open(path, "wb") as f:
        f.write(bytes(buf))


def read_tensors(path, magic):
    """Returns an ordered dict name -> float64 array. Verifies magic and CRC."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 16:
        raise DataError(f"{path}: truncated container")
    body, crc = raw[:-4], struct.unpack("<I", raw[-4:])[0]
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise DataError(f"{path}: CRC mismatch, file corrupted")
    if body[:4] != magic:
        raise DataError(
            f"{path}: bad magic {body[:4]!r}, expected {magic!r}")
    version, count = struct.unpack_from("<II", body, 4)
    if version != VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    off = 12
    out = {}
    try:
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", body, off)
            off += 2
            name = body[off:off + nlen].decode("utf-8")
            off += nlen
            (rank,) = struct.unpack_from("<B", body, off)
            off += 1
            dims = struct.unpack_from(f"<{rank}I", body, off)
            off += 4 * rank
            n = int(np.prod(dims, dtype=np.int64)) if rank else 1
            arr = np.frombuffer(body, dtype="<f4", count=n, offset=off)
            off += 4 * n
            out[name] = arr.reshape(dims).astype(np.float64)
    except (struct.error, ValueError) as exc:
        raise DataError(f"{path}: malformed container ({exc})") from exc
    if off != len(body):
        raise DataError(f"{path}: trailing bytes in container")
    return out
