#!/usr/bin/env python3
"""Rebuild MNIST IDX files from the 10,000 digits bundled in the npm `mnist` package.

Usage:
    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/mnist_from_npm.py package/dist/mnist.js data/mnist

The bundle stores pixels as round(p / 255, 3); round(v * 255) recovers the
original byte exactly because the quantisation step (0.001) is finer than 1/255.
"""
import re
import struct
import sys
from pathlib import Path


def main(bundle: str, out_dir: str) -> None:
    src = Path(bundle).read_text()
    blocks = re.findall(r'module\.exports=\{\s*"data":\s*\[([^\]]*)\]', src)
    if len(blocks) != 10:
        sys.exit(f"expected 10 digit blocks, found {len(blocks)}")
    images = bytearray()
    labels = bytearray()
    for digit, block in enumerate(blocks):
        vals = [float(v) for v in block.split(",")]
        if len(vals) % 784:
            sys.exit(f"digit {digit}: {len(vals)} values is not a multiple of 784")
        for v in vals:
            b = round(v * 255)
            if abs(b / 255 - v) > 0.0006:
                sys.exit(f"digit {digit}: value {v} is not a rounded byte")
            images.append(b)
        labels.extend([digit] * (len(vals) // 784))
    n = len(labels)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "mnist10k-images-idx3-ubyte").write_bytes(struct.pack(">IIII", 0x803, n, 28, 28) + images)
    (out / "mnist10k-labels-idx1-ubyte").write_bytes(struct.pack(">II", 0x801, n) + labels)
    print(f"wrote {n} samples to {out}")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
