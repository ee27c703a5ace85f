import struct

import numpy as np
import pytest

from hqtn_ser.io import (
    FormatError,
    VersionError,
    load_checkpoint,
    read_feature_cache,
    save_checkpoint,
    write_feature_cache,
)
from hqtn_ser.model import forward, init_hybrid
from hqtn_ser.pca import fit_pca


def test_cache_layout(tmp_path):
    p = write_feature_cache(tmp_path / "f.bin", np.array([[1.5, -2.0]]), [3], [7], n_classes=5)
    raw = p.read_bytes()
    assert raw[:4] == b"HQTN"
    assert struct.unpack_from("<HIHH", raw, 4) == (1, 1, 2, 5)
    assert struct.unpack_from("<Hi2f", raw, 14) == (3, 7, 1.5, -2.0)
    assert len(raw) == 14 + 2 + 4 + 8


def test_cache_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 32)).astype(np.float32)
    y = rng.integers(0, 4, size=20)
    write_feature_cache(tmp_path / "f.bin", X, y)
    Xb, yb, sb, C = read_feature_cache(tmp_path / "f.bin")
    np.testing.assert_array_equal(Xb, X)
    np.testing.assert_array_equal(yb, y)
    assert np.all(sb == -1) and C == int(y.max()) + 1


def test_cache_errors(tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(FormatError):
        read_feature_cache(bad)
    p = write_feature_cache(tmp_path / "v.bin", np.zeros((1, 2)), [0])
    raw = bytearray(p.read_bytes())
    raw[4:6] = struct.pack("<H", 9)
    p.write_bytes(bytes(raw))
    with pytest.raises(VersionError):
        read_feature_cache(p)
    p = write_feature_cache(tmp_path / "t.bin", np.zeros((2, 2)), [0, 1])
    p.write_bytes(p.read_bytes()[:-3])
    with pytest.raises(FormatError):
        read_feature_cache(p)


@pytest.mark.parametrize("mode", ["hybrid", "classical_only", "quantum_only"])
def test_checkpoint_round_trip(tmp_path, mode):
    rng = np.random.default_rng(1)
    params = init_hybrid(32, 5, n_qubits=4, n_layers=2, mode=mode)
    pca = fit_pca(rng.normal(size=(40, 64)), 32)
    path = save_checkpoint(tmp_path / "m.ckpt", params, pca, {"seed": 42, "dataset": "synthetic"})
    back, pca_b, cfg = load_checkpoint(path)
    assert cfg == {"seed": 42, "dataset": "synthetic"} and back.mode == mode
    for name, arr in params.arrays().items():
        assert arr.tobytes() == back.arrays()[name].tobytes()
    assert pca_b.components.tobytes() == pca.components.tobytes()
    X = rng.normal(size=(3, 32))
    np.testing.assert_array_equal(forward(params, X)[0], forward(back, X)[0])


def test_checkpoint_errors(tmp_path):
    p = save_checkpoint(tmp_path / "m.ckpt", init_hybrid(32, 5))
    raw = bytearray(p.read_bytes())
    raw[4:6] = struct.pack("<H", 2)
    (tmp_path / "v.ckpt").write_bytes(bytes(raw))
    with pytest.raises(VersionError):
        load_checkpoint(tmp_path / "v.ckpt")
    (tmp_path / "x.ckpt").write_bytes(b"HQTN" + bytes(10))
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "x.ckpt")
    (tmp_path / "t.ckpt").write_bytes(p.read_bytes()[:-5])
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "t.ckpt")
