"""CSV matrix and label files.

One matrix row per line, comma separated, no header unless asked. Values
are written with 17 significant digits so a write/read round trip
reproduces every float64 exactly.
"""

import numpy as np

from .errors import ValidationError
from .linalg import as_matrix

FMT = "%.17g"


def write_matrix(path, a, header=None):
    a = as_matrix(a)
    with open(path, "w", newline="\n") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        np.savetxt(fh, a, fmt=FMT, delimiter=",")


def read_matrix(path, skip_header=False):
    try:
        a = np.loadtxt(path, delimiter=",", skiprows=1 if skip_header else 0,
                       dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    return as_matrix(a, str(path))


def write_labels(path, labels):
    with open(path, "w", newline="\n") as fh:
        for v in np.asarray(labels, dtype=int):
            fh.write(f"{v}\n")


def read_labels(path):
    return np.loadtxt(path, dtype=int, ndmin=1)


def format_float(x):
    return FMT % x
