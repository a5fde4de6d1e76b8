import hashlib
import struct
from pathlib import Path

import numpy as np
import pytest

from ntkdyn.datasets import (
    IMAGE_MAGIC,
    LABEL_MAGIC,
    load_mnist,
    make_circle_dataset,
    write_idx_images,
    write_idx_labels,
    write_synthetic_idx,
)
from ntkdyn.errors import ContractViolationError, FormatError
from ntkdyn.rng import RngStream


# ---------------------------------------------------------------- circle ----


def test_circle_points_and_labels():
    data = make_circle_dataset()
    assert data.n == 6
    assert np.allclose(data.X[0], [0.5, np.sqrt(3.0) / 2.0], atol=1e-15)
    assert np.allclose(data.X[5], [1.0, 0.0], atol=1e-12)
    assert data.y.tolist() == [0, 1, 0, 1, 0, 1]


def test_circle_points_are_unit_norm():
    data = make_circle_dataset()
    assert np.allclose(np.sum(data.X**2, axis=1), 1.0, atol=1e-14)


def test_circle_neighbors_disagree():
    y = make_circle_dataset().y
    assert np.all(y[1:] != y[:-1])
    assert y[0] != y[-1]


# ------------------------------------------------------------- idx files ----


def test_idx_round_trip(tmp_path):
    stream = RngStream(5, stream_id=3)
    pixels = np.floor(stream.uniform(3 * 784).reshape(3, 784) * 256).astype(np.uint8)
    digits = np.array([7, 0, 9])
    img, lab = tmp_path / "i.idx", tmp_path / "l.idx"
    write_idx_images(img, pixels)
    write_idx_labels(lab, digits)
    subset = load_mnist(img, lab, 3, RngStream(0))
    assert subset.n == 3
    # recover by matching digits: the subset is a permutation of the originals
    for k in range(3):
        src = int(np.where(digits == subset.digits[k])[0][0])
        assert np.allclose(subset.images[k], pixels[src] / 255.0, atol=1e-15)


def test_synthetic_idx_loads_with_expected_stats(synthetic_idx):
    subset = load_mnist(synthetic_idx["images"], synthetic_idx["labels"],
                        synthetic_idx["count"], RngStream(1))
    assert subset.images.shape == (60, 784)
    assert subset.images.min() >= 0.0 and subset.images.max() <= 1.0
    assert np.all((subset.digits >= 0) & (subset.digits <= 9))
    # sparse lit pixels at intensity >= 0.5 put squared norms near the
    # handwritten-digit scale
    sq = np.sum(subset.images**2, axis=1)
    assert 40.0 < sq.mean() < 160.0


def test_parity_mapping(synthetic_idx):
    subset = load_mnist(synthetic_idx["images"], synthetic_idx["labels"],
                        synthetic_idx["count"], RngStream(2))
    assert np.array_equal(subset.parity, subset.digits % 2)
    data = subset.sample_set()
    assert np.array_equal(data.y, subset.parity)
    if (subset.digits == 7).any():
        assert np.all(subset.parity[subset.digits == 7] == 1)
    if (subset.digits == 4).any():
        assert np.all(subset.parity[subset.digits == 4] == 0)


def test_subset_is_seeded_and_without_replacement(synthetic_idx):
    a = load_mnist(synthetic_idx["images"], synthetic_idx["labels"], 20, RngStream(3))
    b = load_mnist(synthetic_idx["images"], synthetic_idx["labels"], 20, RngStream(3))
    c = load_mnist(synthetic_idx["images"], synthetic_idx["labels"], 20, RngStream(4))
    assert np.array_equal(a.images, b.images)
    assert np.array_equal(a.digits, b.digits)
    assert not np.array_equal(a.digits, c.digits) or not np.allclose(a.images, c.images)
    # without replacement: no two rows identical (synthetic images collide
    # with negligible probability)
    assert len({r.tobytes() for r in a.images}) == 20


def test_digests_cover_both_files(synthetic_idx):
    subset = load_mnist(synthetic_idx["images"], synthetic_idx["labels"], 5, RngStream(0))
    for path in (synthetic_idx["images"], synthetic_idx["labels"]):
        expected = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        assert subset.digests[str(path)] == expected


def test_subset_size_bounds(synthetic_idx):
    with pytest.raises(ContractViolationError, match="61"):
        load_mnist(synthetic_idx["images"], synthetic_idx["labels"], 61, RngStream(0))
    with pytest.raises(ContractViolationError, match=">= 1"):
        load_mnist(synthetic_idx["images"], synthetic_idx["labels"], 0, RngStream(0))


# --------------------------------------------------------- format errors ----


def _write(path, data: bytes):
    path.write_bytes(data)
    return path


def test_bad_image_magic(tmp_path, synthetic_idx):
    img = _write(tmp_path / "bad.idx", struct.pack(">iiii", 0x00000802, 1, 28, 28) + b"\0" * 784)
    with pytest.raises(FormatError, match="magic"):
        load_mnist(img, synthetic_idx["labels"], 1, RngStream(0))


def test_bad_label_magic(tmp_path, synthetic_idx):
    lab = _write(tmp_path / "bad.idx", struct.pack(">ii", 0x00000999, 1) + b"\x03")
    with pytest.raises(FormatError, match="magic"):
        load_mnist(synthetic_idx["images"], lab, 1, RngStream(0))


def test_truncated_image_payload(tmp_path, synthetic_idx):
    img = _write(tmp_path / "trunc.idx",
                 struct.pack(">iiii", IMAGE_MAGIC, 2, 28, 28) + b"\0" * 784)
    with pytest.raises(FormatError, match="payload"):
        load_mnist(img, synthetic_idx["labels"], 1, RngStream(0))


def test_truncated_header(tmp_path, synthetic_idx):
    img = _write(tmp_path / "short.idx", struct.pack(">i", IMAGE_MAGIC) + b"\0\0")
    with pytest.raises(FormatError, match="dimensions"):
        load_mnist(img, synthetic_idx["labels"], 1, RngStream(0))


def test_wrong_image_side(tmp_path, synthetic_idx):
    img = _write(tmp_path / "dim.idx",
                 struct.pack(">iiii", IMAGE_MAGIC, 1, 27, 28) + b"\0" * (27 * 28))
    with pytest.raises(FormatError, match="27x28"):
        load_mnist(img, synthetic_idx["labels"], 1, RngStream(0))


def test_count_mismatch(tmp_path):
    img = tmp_path / "i.idx"
    lab = tmp_path / "l.idx"
    write_idx_images(img, np.zeros((3, 784), dtype=np.uint8))
    write_idx_labels(lab, np.array([1, 2]))
    with pytest.raises(FormatError, match="mismatch"):
        load_mnist(img, lab, 2, RngStream(0))


def test_label_value_out_of_range(tmp_path, synthetic_idx):
    lab = _write(tmp_path / "lab.idx", struct.pack(">ii", LABEL_MAGIC, 2) + bytes([3, 12]))
    img = tmp_path / "i.idx"
    write_idx_images(img, np.zeros((2, 784), dtype=np.uint8))
    with pytest.raises(FormatError, match="exceed 9"):
        load_mnist(img, lab, 1, RngStream(0))


def test_write_idx_labels_rejects_non_digits(tmp_path):
    with pytest.raises(ContractViolationError):
        write_idx_labels(tmp_path / "l.idx", np.array([4, 10]))
    with pytest.raises(ContractViolationError):
        write_idx_labels(tmp_path / "l.idx", np.array([-1]))


def test_write_synthetic_idx_deterministic(tmp_path):
    a_img, a_lab = tmp_path / "a_i.idx", tmp_path / "a_l.idx"
    b_img, b_lab = tmp_path / "b_i.idx", tmp_path / "b_l.idx"
    write_synthetic_idx(a_img, a_lab, 8, RngStream(11, stream_id=9))
    write_synthetic_idx(b_img, b_lab, 8, RngStream(11, stream_id=9))
    assert a_img.read_bytes() == b_img.read_bytes()
    assert a_lab.read_bytes() == b_lab.read_bytes()
    with pytest.raises(ContractViolationError):
        write_synthetic_idx(a_img, a_lab, 0, RngStream(0))
