#!/usr/bin/env python3
"""Convert a Planetoid citation dataset (Cora, CiteSeer, PubMed) into the
directory layout read by `rhgcn train --data`.

Input is the raw `ind.<name>.*` files from the Planetoid repository. The
standard public split is used: the first |y| nodes train, the next 500
validate, and the nodes listed in `ind.<name>.test.index` test.
"""

import argparse
import json
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load_object(path):
    with open(path, "rb") as f:
        return pickle.load(f, encoding="latin1")


def convert(raw_dir, name, out_dir, normalize):
    raw = Path(raw_dir)
    parts = {k: load_object(raw / f"ind.{name}.{k}") for k in ("x", "y", "tx", "ty", "allx", "ally", "graph")}
    test_index = [int(line) for line in (raw / f"ind.{name}.test.index").read_text().split()]
    test_sorted = np.sort(test_index)

    tx, ty = parts["tx"], parts["ty"]
    if name == "citeseer":
        # CiteSeer has isolated test nodes missing from tx/ty; pad them with zero rows.
        full = range(test_sorted.min(), test_sorted.max() + 1)
        tx_ext = sp.lil_matrix((len(full), tx.shape[1]))
        tx_ext[test_sorted - test_sorted.min(), :] = tx
        tx = tx_ext
        ty_ext = np.zeros((len(full), ty.shape[1]))
        ty_ext[test_sorted - test_sorted.min(), :] = ty
        ty = ty_ext

    features = sp.vstack((parts["allx"], tx)).tolil()
    features[test_index, :] = features[test_sorted, :]
    labels = np.vstack((parts["ally"], ty))
    labels[test_index, :] = labels[test_sorted, :]

    features = features.toarray().astype(np.float64)
    if normalize:
        sums = features.sum(axis=1, keepdims=True)
        sums[sums == 0] = 1.0
        features = features / sums
    label_ids = labels.argmax(axis=1)

    n = features.shape[0]
    edges = set()
    for u, neighbours in parts["graph"].items():
        for v in neighbours:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))

    n_train = len(parts["y"])
    splits = {
        "train": list(range(n_train)),
        "val": list(range(n_train, n_train + 500)),
        "test": [int(i) for i in test_sorted],
    }

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.tsv", "w") as f:
        for u, v in sorted(edges):
            f.write(f"{u}\t{v}\n")
    np.savetxt(out / "features.csv", features, delimiter=",", fmt="%.17g")
    np.savetxt(out / "labels.csv", label_ids, fmt="%d")
    (out / "splits.json").write_text(json.dumps(splits) + "\n")
    print(f"{name}: {n} nodes, {len(edges)} edges, {features.shape[1]} features, "
          f"{labels.shape[1]} classes -> {out}")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("raw_dir", help="directory holding the ind.<name>.* files")
    parser.add_argument("out_dir", help="output dataset directory")
    parser.add_argument("--name", default="cora", choices=["cora", "citeseer", "pubmed"])
    parser.add_argument("--normalize", action="store_true", help="row-normalize the bag-of-words features")
    args = parser.parse_args(argv)
    convert(args.raw_dir, args.name, args.out_dir, args.normalize)
    return 0


if __name__ == "__main__":
    sys.exit(main())
