#!/usr/bin/env python3
"""Fetch the Cora node-classification benchmark and convert it to the
dataset CSV contract (rows: features...,label).

The source is the public gnn-benchmark npz bundle (node features stored
as a CSR matrix plus integer labels).  The core library never touches
the network; run this once and point [dataset] at the produced CSV:

    python scripts/fetch_cora.py --out data/cora.csv

An already-downloaded npz can be converted offline with --npz.
"""

import argparse
import sys
import urllib.request
from pathlib import Path

import numpy as np

CORA_URL = "https://github.com/shchur/gnn-benchmark/raw/master/data/npz/cora.npz"


def npz_to_csv(npz_path, out_path):
    with np.load(npz_path, allow_pickle=True) as bundle:
        data = bundle["attr_data"]
        indices = bundle["attr_indices"]
        indptr = bundle["attr_indptr"]
        shape = bundle["attr_shape"]
        labels = bundle["labels"]
    n, d = int(shape[0]), int(shape[1])
    if len(labels) != n:
        raise SystemExit(f"label count {len(labels)} != node count {n}")
    features = np.zeros((n, d))
    for row in range(n):
        lo, hi = indptr[row], indptr[row + 1]
        features[row, indices[lo:hi]] = data[lo:hi]
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        for row in range(n):
            vals = ",".join(f"{v:.17g}" for v in features[row])
            fh.write(f"{vals},{int(labels[row])}\n")
    print(f"wrote {n} samples x {d} features, {int(labels.max()) + 1} classes -> {out_path}")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/cora.csv", help="destination CSV")
    parser.add_argument("--npz", default=None, help="use a local npz instead of downloading")
    parser.add_argument("--url", default=CORA_URL)
    args = parser.parse_args(argv)

    if args.npz:
        npz_path = Path(args.npz)
    else:
        npz_path = Path(args.out).with_suffix(".npz")
        npz_path.parent.mkdir(parents=True, exist_ok=True)
        print(f"downloading {args.url}")
        urllib.request.urlretrieve(args.url, npz_path)
    npz_to_csv(npz_path, Path(args.out))
    return 0


if __name__ == "__main__":
    sys.exit(main())
