"""Problem family: which norm sits on C, how self-expression is imposed, and
which noise model the error term follows."""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ShapeError, ValidationError
from .linalg import as_matrix, l21_norm, nuclear_norm

NORMS = ("frobenius", "nuclear")
CONSTRAINTS = ("exact", "relaxed")
NOISES = ("none", "gaussian", "laplacian", "sample_specific")

_ALIASES = {
    "f": "frobenius", "fro": "frobenius", "fnr": "frobenius",
    "nuc": "nuclear", "nnr": "nuclear",
    "gauss": "gaussian", "lap": "laplacian", "l1": "laplacian",
    "l21": "sample_specific", "sample-specific": "sample_specific",
    "samplespecific": "sample_specific",
}


def _canon(value, allowed, what):
    v = _ALIASES.get(str(value).lower(), str(value).lower())
    if v not in allowed:
        raise ValidationError(f"unknown {what} {value!r}; expected one of {allowed}")
    return v


@dataclass(frozen=True)
class ObjectiveSpec:
    """One row of the FNR/NNR problem family.

    ``lam`` weights the corruption term and is required exactly when
    ``noise != "none"``; ``gamma`` weights the relaxed self-expression
    penalty and is required exactly when ``constraint == "relaxed"``.
    """

    norm: str = "frobenius"
    constraint: str = "exact"
    noise: str = "none"
    lam: float | None = None
    gamma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "norm", _canon(self.norm, NORMS, "norm"))
        object.__setattr__(self, "constraint", _canon(self.constraint, CONSTRAINTS, "constraint"))
        object.__setattr__(self, "noise", _canon(self.noise, NOISES, "noise model"))
        if self.noise == "none":
            if self.lam is not None:
                raise ValidationError("lambda is only meaningful with a noise model")
        elif self.lam is None or not self.lam > 0:
            raise ValidationError(f"noise={self.noise} requires lambda > 0")
        if self.constraint == "relaxed":
            if self.gamma is None or not self.gamma > 0:
                raise ValidationError("relaxed constraint requires gamma > 0")
        elif self.gamma is not None:
            raise ValidationError("gamma is only meaningful with the relaxed constraint")
        if self.lam is not None:
            object.__setattr__(self, "lam", float(self.lam))
        if self.gamma is not None:
            object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def closed_form(self):
        return self.noise in ("none", "gaussian")

    def with_norm(self, norm):
        return replace(self, norm=norm)

    def label(self):
        parts = [self.norm, self.constraint, self.noise]
        if self.lam is not None:
            parts.append(f"lambda={self.lam!r}")
        if self.gamma is not None:
            parts.append(f"gamma={self.gamma!r}")
        return "/".join(parts)


@dataclass(frozen=True)
class Representation:
    """Solved coefficient matrix plus the clean-dictionary split ``D = D0 + E``."""

    c: np.ndarray
    d0: np.ndarray
    e: np.ndarray
    k: int
    objective: float
    method: str
    spec: ObjectiveSpec
    diagnostics: dict = field(default_factory=dict)


def _c_term(norm, c):
    if norm == "nuclear":
        return nuclear_norm(c)
    return 0.5 * float(np.sum(c * c))


def _noise_term(noise, lam, e):
    if noise == "gaussian":
        return 0.5 * lam * float(np.sum(e * e))
    if noise == "laplacian":
        return lam * float(np.sum(np.abs(e)))
    if noise == "sample_specific":
        return lam * l21_norm(e)
    return 0.0


def objective_value(spec, d, c, d0=None, e=None):
    """Evaluate the objective of ``spec`` at the given variables.

    Noise-free exact rows use ``||C||_F`` or ``||C||_*``. Every other row
    uses ``0.5 ||C||_F^2`` or ``||C||_*`` plus the corruption term
    (``lam/2 ||E||_F^2``, ``lam ||E||_1`` or ``lam ||E||_{2,1}``) and, for
    relaxed rows, ``gamma/2 ||D0 - D0 C||_F^2`` (``D0 = D`` when noise-free).
    ``e`` defaults to ``d - d0``.
    """
    d = as_matrix(d, "D")
    c = as_matrix(c, "C")
    n = d.shape[1]
    if c.shape[0] != n:
        raise ShapeError(f"C has {c.shape[0]} rows but D has {n} columns")
    if spec.noise == "none":
        d0 = d
        e = np.zeros_like(d)
    else:
        if d0 is None and e is None:
            raise ValidationError("noisy objectives need d0 or e")
        if d0 is None:
            d0 = d - as_matrix(e, "E")
        d0 = as_matrix(d0, "D0")
        e = d - d0 if e is None else as_matrix(e, "E")
        if d0.shape != d.shape or e.shape != d.shape:
            raise ShapeError("D0 and E must have the shape of D")

    if spec.constraint == "exact" and spec.noise == "none":
        if spec.norm == "nuclear":
            return nuclear_norm(c)
        return float(np.linalg.norm(c, "fro"))

    value = _c_term(spec.norm, c) + _noise_term(spec.noise, spec.lam, e)
    if spec.constraint == "relaxed":
        if c.shape[1] != n:
            raise ShapeError("relaxed objectives need a square C")
        r = d0 - d0 @ c
        value += 0.5 * spec.gamma * float(np.sum(r * r))
    return value
