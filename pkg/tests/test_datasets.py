import gzip
import struct

import numpy as np
import pytest

from proofkit.datasets import (
    DatasetError,
    convert_idx,
    load_dataset,
    parse_eran,
    read_idx,
    save_dataset_csv,
)
from proofkit.model import forward


def test_csv_roundtrip(tmp_path, rng):
    images = rng.uniform(0, 1, (4, 6))
    labels = np.array([0, 3, 1, 2])
    p = tmp_path / "d.csv"
    save_dataset_csv(p, images, labels)
    ds = load_dataset(p)
    assert np.array_equal(ds.images, images) and ds.labels.tolist() == [0, 3, 1, 2]
    assert len(ds) == 4 and ds.dim == 6


def test_csv_comments_and_errors(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("# header\n\n1,0.5,0.25\n")
    assert load_dataset(p).images.tolist() == [[0.5, 0.25]]
    p.write_text("1,0.5,x\n")
    with pytest.raises(DatasetError, match=":1:"):
        load_dataset(p)
    p.write_text("1,0.5\n0,0.1,0.2\n")
    with pytest.raises(DatasetError):
        load_dataset(p)
    p.write_text("1,1.5\n")
    with pytest.raises(DatasetError):
        load_dataset(p)
    p.write_text("")
    assert len(load_dataset(p)) == 0


def test_npz(tmp_path):
    p = tmp_path / "d.npz"
    np.savez(p, images=np.full((2, 3), 0.5), labels=np.array([1, 0]))
    ds = load_dataset(p)
    assert ds.images.shape == (2, 3) and ds.labels.tolist() == [1, 0]


def write_idx(path, arr):
    head = bytes([0, 0, 8, arr.ndim]) + struct.pack(">" + "I" * arr.ndim, *arr.shape)
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wb") as fh:
        fh.write(head + arr.astype(np.uint8).tobytes())


def test_idx_conversion(tmp_path, rng):
    imgs = rng.integers(0, 256, (5, 2, 3))
    labels = np.array([9, 0, 1, 2, 3])
    write_idx(tmp_path / "i.idx.gz", imgs)
    write_idx(tmp_path / "l.idx", labels)
    assert np.array_equal(read_idx(tmp_path / "i.idx.gz"), imgs)
    n = convert_idx(tmp_path / "i.idx.gz", tmp_path / "l.idx", tmp_path / "o.csv", limit=3)
    ds = load_dataset(tmp_path / "o.csv")
    assert n == 3 and ds.labels.tolist() == [9, 0, 1]
    assert np.allclose(ds.images, imgs[:3].reshape(3, -1) / 255.0)
    (tmp_path / "bad").write_bytes(b"\x01\x02")
    with pytest.raises(DatasetError):
        read_idx(tmp_path / "bad")


ERAN = """Normalize mean=[0.5] std=[0.25]
ReLU
[[1.0, -1.0], [0.5, 0.5]]
[0.0, 0.1]
ReLU
[[1.0, 2.0], [-1.0, 0.0]]
[0.0, 0.0]
"""


def test_parse_eran_folds_normalization(caplog):
    net = parse_eran(ERAN, name="toy")
    assert net.dims == (2, 2, 2) and net.decision_layer.activation == "none"
    assert "dropping ReLU" in caplog.text
    x = np.array([0.3, 0.9])
    z = (x - 0.5) / 0.25
    h = np.maximum(np.array([[1.0, -1.0], [0.5, 0.5]]) @ z + [0.0, 0.1], 0)
    assert np.allclose(forward(net, x), np.array([[1.0, 2.0], [-1.0, 0.0]]) @ h)


def test_parse_eran_rejects_other_blocks():
    with pytest.raises(DatasetError, match="Conv2D"):
        parse_eran("Conv2D\nReLU, filters=2\n")
    with pytest.raises(DatasetError):
        parse_eran("ReLU\n[[1.0]]\n")
    with pytest.raises(DatasetError):
        parse_eran("")
