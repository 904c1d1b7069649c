#!/usr/bin/env python3
"""Fetches MNIST and writes the 0-vs-8 subset as data/mnist/mnist_0v8.csv.

The core library never touches the network; this script is the only place
data acquisition happens. Output format matches the library's CSV reader:
first column is the label (+1 for digit 8, -1 for digit 0), followed by the
784 pixel intensities scaled to [0, 1]. 5000 samples are taken in dataset
order, so the file is reproducible.

Usage:  python3 scripts/fetch_mnist.py [--out-dir data/mnist] [--n 5000]
"""

import argparse
import gzip
import struct
import urllib.request
from pathlib import Path

MIRRORS = [
    "https://ossci-datasets.s3.amazonaws.com/mnist/",
    "https://storage.googleapis.com/cvdf-datasets/mnist/",
]
FILES = {
    "images": "train-images-idx3-ubyte.gz",
    "labels": "train-labels-idx1-ubyte.gz",
}


def download(name: str, cache: Path) -> bytes:
    target = cache / name
    if target.exists():
        return target.read_bytes()
    last_error = None
    for mirror in MIRRORS:
        url = mirror + name
        try:
            print(f"downloading {url}")
            with urllib.request.urlopen(url, timeout=60) as response:
                blob = response.read()
            target.write_bytes(blob)
            return blob
        except Exception as err:  # try the next mirror
            last_error = err
            print(f"  failed: {err}")
    raise SystemExit(f"could not download {name}: {last_error}")


def parse_images(blob: bytes):
    magic, count, rows, cols = struct.unpack(">IIII", blob[:16])
    assert magic == 2051, f"bad image magic {magic}"
    pixels = rows * cols
    body = blob[16:]
    return [body[i * pixels : (i + 1) * pixels] for i in range(count)]


def parse_labels(blob: bytes):
    magic, count = struct.unpack(">II", blob[:8])
    assert magic == 2049, f"bad label magic {magic}"
    return list(blob[8 : 8 + count])


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-dir", default="data/mnist", type=Path)
    parser.add_argument("--n", default=5000, type=int)
    args = parser.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    cache = args.out_dir / "cache"
    cache.mkdir(exist_ok=True)

    images = parse_images(gzip.decompress(download(FILES["images"], cache)))
    labels = parse_labels(gzip.decompress(download(FILES["labels"], cache)))

    out_path = args.out_dir / "mnist_0v8.csv"
    kept = {0: 0, 8: 0}
    written = 0
    with out_path.open("w") as out:
        for image, label in zip(images, labels):
            if label not in (0, 8):
                continue
            if written >= args.n:
                break
            sign = "1" if label == 8 else "-1"
            row = ",".join(repr(b / 255.0) for b in image)
            out.write(f"{sign},{row}\n")
            kept[label] += 1
            written += 1

    print(f"wrote {out_path}: {written} samples ({kept[0]} zeros, {kept[8]} eights)")


if __name__ == "__main__":
    main()
