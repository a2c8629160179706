#!/usr/bin/env python3
"""Write an IDX-format MNIST subset from the 5000-sample copy shipped in mlxtend.

The mlxtend wheel (BSD-3) bundles `mlxtend/data/data/mnist_5k.csv.gz`: 500
samples per digit, raw 0..255 pixels, label in the last column. This script
keeps the digits needed by the bundled configs and writes standard IDX files.

    python3 scripts/extract_mnist_subset.py [--digits 0,1,3,5] [--out data/mnist-subset]
"""
import argparse
import glob
import gzip
import os
import struct
import subprocess
import tempfile
import zipfile


def find_wheel(tmp):
    subprocess.run(
        ["pip", "download", "--no-deps", "--dest", tmp, "mlxtend==0.24.0"],
        check=True,
    )
    return glob.glob(os.path.join(tmp, "mlxtend-*.whl"))[0]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--digits", default="0,1,3,5")
    ap.add_argument("--out", default="data/mnist-subset")
    ap.add_argument("--wheel", default=None)
    args = ap.parse_args()
    keep = {int(d) for d in args.digits.split(",")}

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel or find_wheel(tmp)
        raw = zipfile.ZipFile(wheel).read("mlxtend/data/data/mnist_5k.csv.gz")
    rows = gzip.decompress(raw).decode().splitlines()

    images, labels = bytearray(), bytearray()
    count = 0
    for line in rows:
        vals = [int(float(v)) for v in line.split(",")]
        label = vals[-1]
        if label not in keep:
            continue
        images.extend(bytes(vals[:-1]))
        labels.append(label)
        count += 1

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "train-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 2051, count, 28, 28))
        f.write(images)
    with open(os.path.join(args.out, "train-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 2049, count))
        f.write(labels)
    print(f"wrote {count} samples to {args.out}")


if __name__ == "__main__":
    main()
