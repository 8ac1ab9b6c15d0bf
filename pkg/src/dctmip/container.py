"""Self-describing binary container for checkpoints.

Layout (all integers little-endian):

    magic   4 bytes  b"NDGC"
    version u32      currently 1
    count   u32      number of entries
    entry*  count times:
        name_len u16, name utf-8 bytes
        dtype    u8   (1=float32, 2=float64, 3=int64, 4=uint8)
        rank     u8   (0 for scalars)
        extents  rank x u64
        payload  raw row-major little-endian array bytes

Round-trips are bit-exact: payload bytes are written and read verbatim.
Strings are stored as uint8 entries holding utf-8 bytes.
"""

import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError

MAGIC = b"NDGC"
FORMAT_VERSION = 1

_DTYPE_TAGS = {
    np.dtype("<f4"): 1,
    np.dtype("<f8"): 2,
    np.dtype("<i8"): 3,
    np.dtype("u1"): 4,
}
_TAG_DTYPES = {tag: dt for dt, tag in _DTYPE_TAGS.items()}


def write_container(path, entries: dict) -> None:
    """Write named arrays to ``path``. Values are coerced to supported dtypes."""
    blobs = []
    for name, value in entries.items():
        arr = np.asarray(value)
        if arr.ndim:  # ascontiguousarray would promote scalars to rank 1
            arr = np.ascontiguousarray(arr)
        if np.issubdtype(arr.dtype, np.floating):
            target = np.dtype("<f4") if arr.dtype.itemsize <= 4 else np.dtype("<f8")
        elif arr.dtype == np.dtype("u1") or np.issubdtype(arr.dtype, np.bool_):
            target = np.dtype("u1")
        elif np.issubdtype(arr.dtype, np.integer):
            target = np.dtype("<i8")
        else:
            raise CheckpointError(f"entry {name!r} has unsupported dtype {arr.dtype}")
        arr = arr.astype(target, copy=False)
        name_bytes = name.encode("utf-8")
        header = struct.pack("<H", len(name_bytes)) + name_bytes
        header += struct.pack("<BB", _DTYPE_TAGS[target], arr.ndim)
        header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
        blobs.append(header + arr.tobytes())

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(blobs)))
        for blob in blobs:
            fh.write(blob)


def read_container(path) -> dict:
    """Read a container written by ``write_container``; returns name -> ndarray."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint container (bad magic)")
    version, count = struct.unpack_from("<II", data, 4)
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: container version {version} unsupported (expected {FORMAT_VERSION})"
        )
    offset = 12
    entries = {}
    for _ in range(count):
        try:
            (name_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            name = data[offset : offset + name_len].decode("utf-8")
            offset += name_len
            tag, rank = struct.unpack_from("<BB", data, offset)
            offset += 2
            shape = struct.unpack_from(f"<{rank}Q", data, offset)
            offset += 8 * rank
        except struct.error as exc:
            raise CheckpointError(f"{path}: truncated container ({exc})") from exc
        if tag not in _TAG_DTYPES:
            raise CheckpointError(f"{path}: entry {name!r} has unknown dtype tag {tag}")
        dtype = _TAG_DTYPES[tag]
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize if rank else dtype.itemsize
        payload = data[offset : offset + nbytes]
        if len(payload) != nbytes:
            raise CheckpointError(f"{path}: entry {name!r} payload truncated")
        offset += nbytes
        entries[name] = np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
    return entries


def scalar(value, dtype="<f8") -> np.ndarray:
    return np.asarray(value, dtype=dtype)


def string_entry(text: str) -> np.ndarray:
    return np.frombuffer(text.encode("utf-8"), dtype="u1").copy()


def entry_string(arr: np.ndarray) -> str:
    return bytes(np.asarray(arr, dtype="u1")).decode("utf-8")
