#!/usr/bin/env python3
"""Reader for the PBOP1 operator container.

Layout: magic "PBOP1"; u64 matrix count; per matrix u64 name length, ASCII
name, u64 rows, u64 cols, row-major complex128 entries as little-endian
(re, im) float64 pairs; u64 metadata length; metadata "key=value" lines.

Usage:
  pbop_reader.py FILE             summary of matrices and metadata
  pbop_reader.py --digest FILE    one line per matrix: name rows cols fro
                                  (Frobenius norm, repr-exact), then meta count
"""
import struct
import sys


def _take(f, n, what):
    data = f.read(n)
    if len(data) != n:
        raise SystemExit(f"error: truncated while reading {what}")
    return data


def _u64(f, what):
    return struct.unpack("<Q", _take(f, 8, what))[0]


def read_pbop(path):
    matrices = []
    metadata = {}
    with open(path, "rb") as f:
        if _take(f, 5, "magic") != b"PBOP1":
            raise SystemExit("error: not a PBOP1 file")
        count = _u64(f, "matrix count")
        if count > 4096:
            raise SystemExit("error: implausible matrix count")
        for _ in range(count):
            name_len = _u64(f, "name length")
            name = _take(f, name_len, "name").decode("ascii")
            rows = _u64(f, f"rows of {name}")
            cols = _u64(f, f"cols of {name}")
            raw = _take(f, rows * cols * 16, f"entries of {name}")
            flat = struct.unpack(f"<{2 * rows * cols}d", raw)
            matrices.append((name, rows, cols, flat))
        meta_len = _u64(f, "metadata length")
        for line in _take(f, meta_len, "metadata").decode("ascii").splitlines():
            key, sep, value = line.partition("=")
            if sep and key:
                metadata[key] = value
    return matrices, metadata


def main(argv):
    digest = "--digest" in argv
    paths = [a for a in argv[1:] if not a.startswith("--")]
    if len(paths) != 1:
        print(__doc__, file=sys.stderr)
        return 2
    matrices, metadata = read_pbop(paths[0])
    if digest:
        for name, rows, cols, flat in matrices:
            fro = sum(x * x for x in flat) ** 0.5
            print(f"{name} {rows} {cols} {fro!r}")
        print(f"meta {len(metadata)}")
        return 0
    print(f"{paths[0]}: {len(matrices)} matrices, {len(metadata)} metadata entries")
    for name, rows, cols, flat in matrices:
        fro = sum(x * x for x in flat) ** 0.5
        print(f"  {name:8s} {rows} x {cols}   |.|_F = {fro:.12g}")
    for key in sorted(metadata):
        print(f"  {key} = {metadata[key]}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv))
