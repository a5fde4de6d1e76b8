import struct
import subprocess
import sys

import numpy as np
import pytest


def run_experiment_cli(*args):
    """The producer side is exercised only through its CLI."""
    proc = subprocess.run([sys.executable, "-m", "ntkdyn.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


def write_idx_pair(images_path, labels_path, count, rng):
    # minimal hand-rolled IDX writer so this suite needs no producer imports
    side = 28
    lit = rng.random((count, side * side)) < 0.2
    pix = np.where(lit, rng.integers(128, 256, (count, side * side)), 0)
    images_path.write_bytes(struct.pack(">iiii", 0x00000803, count, side, side)
                            + pix.astype(np.uint8).tobytes())
    labels = rng.integers(0, 10, count).astype(np.uint8)
    labels_path.write_bytes(struct.pack(">ii", 0x00000801, count) + labels.tobytes())


@pytest.fixture(scope="session")
def artifacts(tmp_path_factory):
    """Reduced-scale CSVs of every schema, produced through the experiment CLI."""
    root = tmp_path_factory.mktemp("csv")
    run_experiment_cli("train-circle", "--width", "48", "--epochs", "200",
                       "--record-every", "20", "--out", str(root / "circle"))
    run_experiment_cli("width-sweep", "--widths", "50,100", "--sweep-seeds", "2",
                       "--grid-points", "12", "--out", str(root / "sweep"))
    images, labels = root / "images.idx", root / "labels.idx"
    write_idx_pair(images, labels, 30, np.random.default_rng(8))
    run_experiment_cli("mnist-parity", "--images", str(images),
                       "--labels", str(labels), "--n-train", "16",
                       "--width", "12", "--depth", "2", "--lr", "0.001",
                       "--epochs", "40", "--record-every", "4",
                       "--out", str(root / "mnist"))
    return {
        "trace": root / "circle" / "trace.csv",
        "gap": root / "circle" / "gap.csv",
        "certificate": root / "circle" / "certificate.csv",
        "slice": root / "sweep" / "sweep.csv",
        "sweep-summary": root / "sweep" / "sweep_summary.csv",
        "mnist_trace": root / "mnist" / "trace.csv",
    }
