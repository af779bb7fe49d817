#!/usr/bin/env python3
"""Export the UCI Breast Cancer (Diagnostic) and UCI Wine datasets as plain CSV.

Uses the copies bundled with scikit-learn, so no network access is needed:

    python3 scripts/fetch_datasets.py [output_dir]

Each file gets a header row of feature names plus a trailing `target` column
holding the integer class label.
"""
import csv
import os
import sys

from sklearn.datasets import load_breast_cancer, load_wine


def export(bunch, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([n.replace(" ", "_") for n in bunch.feature_names] + ["target"])
        for row, label in zip(bunch.data, bunch.target):
            writer.writerow([repr(float(x)) for x in row] + [int(label)])
    print(f"wrote {path}: {bunch.data.shape[0]} rows x {bunch.data.shape[1]} features")


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data")
    os.makedirs(out, exist_ok=True)
    export(load_breast_cancer(), os.path.join(out, "breast_cancer.csv"))
    export(load_wine(), os.path.join(out, "wine.csv"))


if __name__ == "__main__":
    main()
