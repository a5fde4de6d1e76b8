#!/usr/bin/env python3
"""Download the four MNIST IDX files and decompress them.

Needs network access; run it once from a connected machine, then point the
CLI at the resulting files:

    python3 scripts/fetch_mnist.py --out data/mnist
    ntkdyn mnist-parity --images data/mnist/train-images-idx3-ubyte \
        --labels data/mnist/train-labels-idx1-ubyte

The experiment code itself never touches the network; synthetic stand-in
files with matching pixel statistics can be produced with
ntkdyn.datasets.write_synthetic_idx when the real dataset is unavailable.
"""

import argparse
import gzip
import hashlib
import urllib.request
from pathlib import Path

MIRRORS = [
    "https://storage.googleapis.com/cvdf-datasets/mnist/",
    "https://ossci-datasets.s3.amazonaws.com/mnist/",
]

FILES = [
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
]


def fetch(name: str, out_dir: Path) -> Path:
    target = out_dir / name.removesuffix(".gz")
    if target.exists():
        print(f"{target} already present, skipping")
        return target
    last_error = None
    for mirror in MIRRORS:
        url = mirror + name
        try:
            print(f"fetching {url}")
            with urllib.request.urlopen(url, timeout=60) as resp:
                blob = resp.read()
            target.write_bytes(gzip.decompress(blob))
            digest = hashlib.sha256(target.read_bytes()).hexdigest()
            print(f"wrote {target} ({target.stat().st_size} bytes, sha256 {digest})")
            return target
        except OSError as exc:
            last_error = exc
            print(f"  failed: {exc}")
    raise SystemExit(f"could not fetch {name} from any mirror: {last_error}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/mnist")
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in FILES:
        fetch(name, out_dir)


if __name__ == "__main__":
    main()
