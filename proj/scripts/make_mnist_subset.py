#!/usr/bin/env python3
"""Write a desk-scale MNIST subset as IDX files.

Source: the `mnist` npm package (10,000 MNIST digits stored as pixel/255
rounded to three decimals). Pixels are restored to bytes with round(v * 255).

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/make_mnist_subset.py package/src/digits data/mnist
"""
import json
import random
import struct
import sys
from pathlib import Path

TRAIN = 5000
QUERY = 100
SIDE = 28


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), SIDE, SIDE))
        for img in images:
            f.write(bytes(img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    src, dst = Path(sys.argv[1]), Path(sys.argv[2])
    samples = []
    for digit in range(10):
        raw = json.loads((src / f"{digit}.json").read_text())["data"]
        per = SIDE * SIDE
        for i in range(len(raw) // per):
            px = [min(255, max(0, round(v * 255))) for v in raw[i * per:(i + 1) * per]]
            samples.append((px, digit))
    random.Random(20170801).shuffle(samples)
    train, query = samples[:TRAIN], samples[TRAIN:TRAIN + QUERY]
    dst.mkdir(parents=True, exist_ok=True)
    write_images(dst / "train-images-idx3-ubyte", [s[0] for s in train])
    write_labels(dst / "train-labels-idx1-ubyte", [s[1] for s in train])
    write_images(dst / "query-images-idx3-ubyte", [s[0] for s in query])
    write_labels(dst / "query-labels-idx1-ubyte", [s[1] for s in query])
    print(f"wrote {len(train)} train / {len(query)} query samples to {dst}")


if __name__ == "__main__":
    main()
