"""Binary checkpoint container: bit-exact round-trips and version handling."""

import struct

import numpy as np
import pytest

from dctmip import container
from dctmip.errors import CheckpointError


def test_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    entries = {
        "vec32": rng.normal(size=17).astype(np.float32),
        "mat64": rng.normal(size=(3, 5)),
        "cube": rng.normal(size=(2, 3, 4)).astype(np.float32),
        "ints": rng.integers(-(2**40), 2**40, size=6),
        "bytes": rng.integers(0, 256, size=11).astype(np.uint8),
        "scalar": container.scalar(3.5),
        "name": container.string_entry("multiplicative"),
    }
    path = tmp_path / "ckpt.ndgc"
    container.write_container(path, entries)
    loaded = container.read_container(path)
    assert set(loaded) == set(entries)
    for key, original in entries.items():
        got = loaded[key]
        assert got.shape == np.asarray(original).shape
        # bit-exact: compare raw payload bytes
        assert got.tobytes() == np.ascontiguousarray(original).tobytes(), key
    assert container.entry_string(loaded["name"]) == "multiplicative"


def test_roundtrip_preserves_nan_payload_bits(tmp_path):
    # the container is byte-transparent even for values the library itself
    # would reject at a higher level
    weird = np.array([np.nan, np.inf, -0.0, 1e-300])
    path = tmp_path / "w.ndgc"
    container.write_container(path, {"w": weird})
    assert container.read_container(path)["w"].tobytes() == weird.tobytes()


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "junk.ndgc"
    path.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(CheckpointError, match="magic"):
        container.read_container(path)


def test_unsupported_version_rejected(tmp_path):
    path = tmp_path / "v9.ndgc"
    path.write_bytes(container.MAGIC + struct.pack("<II", 9, 0))
    with pytest.raises(CheckpointError, match="version 9"):
        container.read_container(path)


def test_truncated_payload_rejected(tmp_path):
    path = tmp_path / "t.ndgc"
    container.write_container(path, {"x": np.arange(10.0)})
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(CheckpointError, match="truncated"):
        container.read_container(path)


def test_bool_scalars_roundtrip(tmp_path):
    path = tmp_path / "b.ndgc"
    container.write_container(path, {"flag": container.scalar(True, "u1")})
    assert bool(container.read_container(path)["flag"]) is True
