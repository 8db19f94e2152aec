#!/usr/bin/env python3
"""Convert the digit JSON files shipped in the npm `mnist` package to IDX.

The package stores 10000 MNIST digits grouped by class as floats rounded to
three decimals; round(v * 255) recovers the original pixel bytes exactly.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/mnist_npm_to_idx.py package/src/digits data/mnist
"""
import argparse
import json
import random
import struct
from pathlib import Path


def write_idx(path, magic, dims, payload):
    with open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(bytes(payload))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--eval-count", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20190601)
    args = ap.parse_args()

    samples = []
    for label in range(10):
        raw = json.loads(Path(args.digits_dir, f"{label}.json").read_text())["data"]
        assert len(raw) % 784 == 0
        for k in range(len(raw) // 784):
            pix = [int(round(v * 255)) for v in raw[k * 784:(k + 1) * 784]]
            samples.append((pix, label))

    random.Random(args.seed).shuffle(samples)
    splits = {"eval": samples[:args.eval_count], "train": samples[args.eval_count:]}
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, rows in splits.items():
        images = [b for pix, _ in rows for b in pix]
        labels = [lab for _, lab in rows]
        write_idx(out / f"{name}-images-idx3-ubyte", 2051, [len(rows), 28, 28], images)
        write_idx(out / f"{name}-labels-idx1-ubyte", 2049, [len(rows)], labels)
        print(f"{name}: {len(rows)} samples")


if __name__ == "__main__":
    main()
