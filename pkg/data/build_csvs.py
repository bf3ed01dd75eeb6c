"""Regenerate the bundled UCI CSVs (label in the last column).

Iris, Wine and WDBC come from the copies shipped with scikit-learn; Sonar
from the KEEL repository export in the ``keel-ds`` wheel (path given as
the first argument).  Neither package is needed at run time.
"""
import os
import sys
import zipfile

import numpy as np
from sklearn import datasets

HERE = os.path.dirname(os.path.abspath(__file__))


def write(name, X, y):
    with open(os.path.join(HERE, f"{name}.csv"), "w") as fh:
        fh.write(",".join([f"y{j + 1}" for j in range(X.shape[1])] + ["label"]) + "\n")
        for row, lab in zip(X, y):
            fh.write(",".join(repr(float(v)) for v in row) + f",{lab}\n")


def sonar(wheel):
    with zipfile.ZipFile(wheel) as z:
        text = z.read("keel_ds/data/balanced/raw/sonar.dat").decode()
    rows = [ln.split(",") for ln in text.splitlines() if ln and not ln.startswith("@")]
    X = np.array([[float(v) for v in r[:-1]] for r in rows])
    return X, [r[-1].strip() for r in rows]


if __name__ == "__main__":
    for name, loader in (("iris", datasets.load_iris), ("wine", datasets.load_wine),
                         ("wdbc", datasets.load_breast_cancer)):
        d = loader()
        write(name, d.data, d.target)
    if len(sys.argv) > 1:
        write("sonar", *sonar(sys.argv[1]))
