#!/usr/bin/env python3
"""Convert the 5,000-digit MNIST subset bundled with mlxtend into IDX files.

The subset is 500 images per digit. Each digit is split 400 train / 100 test
after a seeded shuffle, and both splits are shuffled again so classes are
interleaved. Output files follow the standard IDX naming.

    python3 tools/mnist_subset_to_idx.py --out data/mnist-5k [--csv mnist_5k.csv.gz]

Without --csv the file is read from an installed mlxtend package, or from a
wheel downloaded with `pip download --no-deps mlxtend`.
"""
import argparse
import glob
import gzip
import os
import random
import struct
import zipfile

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_csv_gz(path):
    if path:
        with open(path, "rb") as f:
            return gzip.decompress(f.read()).decode()
    try:
        import mlxtend.data

        p = os.path.join(os.path.dirname(mlxtend.data.__file__), "data", "mnist_5k.csv.gz")
        with open(p, "rb") as f:
            return gzip.decompress(f.read()).decode()
    except ImportError:
        pass
    wheels = sorted(glob.glob("/tmp/**/mlxtend-*.whl", recursive=True))
    if not wheels:
        raise SystemExit("mlxtend not found; pass --csv or `pip download --no-deps mlxtend`")
    with zipfile.ZipFile(wheels[-1]) as z:
        return gzip.decompress(z.read(MEMBER)).decode()


def write_idx(prefix, rows):
    with open(prefix + "-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(rows), 28, 28))
        for pixels, _ in rows:
            f.write(bytes(pixels))
    with open(prefix + "-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(rows)))
        f.write(bytes(label for _, label in rows))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--csv")
    ap.add_argument("--seed", type=int, default=20210318)
    ap.add_argument("--test-per-class", type=int, default=100)
    args = ap.parse_args()

    by_class = {}
    for line in read_csv_gz(args.csv).splitlines():
        vals = line.split(",")
        pixels = [int(float(v)) for v in vals[:-1]]
        by_class.setdefault(int(vals[-1]), []).append((pixels, int(vals[-1])))

    rng = random.Random(args.seed)
    train, test = [], []
    for label in sorted(by_class):
        rows = by_class[label]
        rng.shuffle(rows)
        test += rows[: args.test_per_class]
        train += rows[args.test_per_class :]
    rng.shuffle(train)
    rng.shuffle(test)

    os.makedirs(args.out, exist_ok=True)
    write_idx(os.path.join(args.out, "train"), train)
    write_idx(os.path.join(args.out, "t10k"), test)
    print(f"train={len(train)} test={len(test)} -> {args.out}")


if __name__ == "__main__":
    main()
