import numpy as np
import pytest

from stabdis import io, mps


def test_mps_roundtrip(tmp_path):
    s = mps.canonicalize(mps.random_mps(6, 3, seed=1))
    p = io.save_mps(tmp_path / "s.npz", s, {"note": "x"})
    back, meta, _ = io.load_container(p, "mps")
    assert meta["note"] == "x"
    assert all(np.array_equal(a, b) for a, b in zip(s.tensors, back.tensors))
    assert back.center == s.center


def test_kind_mismatch(tmp_path):
    p = io.save_mps(tmp_path / "s.npz", mps.random_mps(4, 2, seed=1))
    with pytest.raises(io.FormatError):
        io.load_container(p, "camps")


def test_float_format():
    assert io.fmt(0.1) == "0.10000000000000001"
    assert float(io.fmt(np.pi)) == np.pi
