#!/usr/bin/env python3
"""Build the 2000/1000 MNIST subset used by the scaled experiments.

The 5000-sample MNIST extract bundled with the mlxtend wheel is fetched via
pip (no dataset download), shuffled with a fixed seed and written out as
standard IDX files.
"""
import argparse
import gzip
import io
import pathlib
import struct
import subprocess
import tempfile
import zipfile

import numpy as np


def write_idx_images(path, images):
    n = images.shape[0]
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, labels.shape[0]))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/mnist_subset")
    ap.add_argument("--train", type=int, default=2000)
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(["pip", "download", "mlxtend==0.24.0", "--no-deps", "-q", "-d", tmp],
                       check=True)
        wheel = next(pathlib.Path(tmp).glob("mlxtend-*.whl"))
        raw = zipfile.ZipFile(wheel).read("mlxtend/data/data/mnist_5k.csv.gz")
    table = np.loadtxt(io.BytesIO(gzip.decompress(raw)), delimiter=",")
    images, labels = table[:, :-1], table[:, -1].astype(np.int64)

    order = np.random.default_rng(args.seed).permutation(images.shape[0])
    train = order[: args.train]
    test = order[args.train : args.train + args.test]

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_idx_images(out / "train-images-idx3-ubyte", images[train])
    write_idx_labels(out / "train-labels-idx1-ubyte", labels[train])
    write_idx_images(out / "t10k-images-idx3-ubyte", images[test])
    write_idx_labels(out / "t10k-labels-idx1-ubyte", labels[test])
    print(f"wrote {len(train)} train / {len(test)} test samples to {out}")


if __name__ == "__main__":
    main()
