# Copyright 2026 The qvae Authors.
#
#    Licensed under the Apache License, Version 2.0 (the "License");
#    you may not use this file except in compliance with the License.
#    You may obtain a copy of the License at
#
#        http://www.apache.org/licenses/LICENSE-2.0
#
#    Unless required by applicable law or agreed to in writing, software
#    distributed under the License is distributed on an "AS IS" BASIS,
#    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#    See the License for the specific language governing permissions and
#    limitations under the License.
#
"""Converts an MNIST CSV (784 pixel columns then the label) to gzipped IDX files.

Rows are shuffled with a fixed seed (some CSV subsets are sorted by label),
then the last --test rows become t10k-* and the rest train-*. Useful when
only a CSV subset of MNIST is at hand.
"""

import argparse
import gzip
import pathlib
import struct

import numpy as np


def write_idx(path, array):
    magic = 0x0800 | array.ndim
    with gzip.open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        f.write(struct.pack(">" + "I" * array.ndim, *array.shape))
        f.write(array.astype(np.uint8).tobytes())


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv")
    parser.add_argument("out_dir")
    parser.add_argument("--test", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    table = np.loadtxt(args.csv, delimiter=",", dtype=np.int64)
    table = table[np.random.default_rng(args.seed).permutation(len(table))]
    images = table[:, :-1].reshape(-1, 28, 28)
    labels = table[:, -1]
    if not 0 < args.test < len(table):
        parser.error(f"--test must be in (0, {len(table)})")
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    split = len(table) - args.test
    write_idx(out / "train-images-idx3-ubyte.gz", images[:split])
    write_idx(out / "train-labels-idx1-ubyte.gz", labels[:split])
    write_idx(out / "t10k-images-idx3-ubyte.gz", images[split:])
    write_idx(out / "t10k-labels-idx1-ubyte.gz", labels[split:])
    print(f"wrote {split} training and {args.test} test images to {out}")


if __name__ == "__main__":
    main()
