"""Dense linear-algebra substrate shared by every solver.

Matrices are plain ``float64`` numpy arrays. ``as_matrix`` is the single
entry point that validates shape and finiteness; everything downstream
assumes it has been applied.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError, ShapeError, SvdConvergenceError, ZeroMatrixError


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used across the package.

    Parameters
    ----------
    rank_tol : float
        Singular values ``<= rank_tol * sigma_1`` count as zero.
    recon_tol : float
        Relative Frobenius reconstruction tolerance for factorizations.
    equiv_tol : float
        Absolute tolerance for equivalence and feasibility checks.
    """

    rank_tol: float = 1e-10
    recon_tol: float = 1e-12
    equiv_tol: float = 1e-8

    def __post_init__(self):
        for name in ("rank_tol", "recon_tol", "equiv_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


DEFAULT_TOL = Tolerances()


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D float64 array (1-D input becomes a column)."""
    arr = np.array(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class SvdFactors:
    """SVD triple ``a = u @ diag(sigma) @ v.T``.

    For ``kind == "full"`` ``u`` is m x m and ``v`` is n x n while ``sigma``
    has ``min(m, n)`` entries; use :meth:`reconstruct` rather than
    multiplying the factors by hand. For ``kind == "skinny"`` only the
    triples above the rank threshold are kept.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    kind: str
    numerical_rank: int

    def reconstruct(self):
        p = self.sigma.size
        return (self.u[:, :p] * self.sigma) @ self.v[:, :p].T

    def truncate(self, k):
        """Leading ``k`` triples as a skinny factorization."""
        k = int(k)
        return SvdFactors(self.u[:, :k], self.sigma[:k], self.v[:, :k], "skinny",
                          min(k, self.numerical_rank))


def numerical_rank(sigma, rank_tol=DEFAULT_TOL.rank_tol):
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.size == 0 or sigma[0] <= 0:
        return 0
    return int(np.count_nonzero(sigma > rank_tol * sigma[0]))


def _fix_signs(u, v, p):
    # largest-magnitude entry of each column of u is made nonnegative; the
    # paired column of v flips with it
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    u = u * signs
    v = v.copy()
    v[:, :p] *= signs[:p]
    if v.shape[1] > p:
        tail = v[:, p:]
        tidx = np.argmax(np.abs(tail), axis=0)
        tsigns = np.sign(tail[tidx, np.arange(tail.shape[1])])
        tsigns[tsigns == 0] = 1.0
        v[:, p:] = tail * tsigns
    return u, v


def svd(a, kind="skinny", tol=DEFAULT_TOL):
    """Singular value decomposition with a reproducible sign convention.

    Parameters
    ----------
    a : array_like, shape (m, n)
    kind : {"skinny", "full"}
        ``"skinny"`` keeps only ``sigma_i > tol.rank_tol * sigma_1``.
    tol : Tolerances

    Returns
    -------
    SvdFactors
    """
    if kind not in ("skinny", "full"):
        raise ValueError(f"unknown SVD kind {kind!r}")
    a = as_matrix(a)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=(kind == "full"))
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(str(exc)) from exc
    v = vt.T
    rank = numerical_rank(s, tol.rank_tol)
    if kind == "skinny":
        u, s, v = u[:, :rank], s[:rank], v[:, :rank]
    u, v = _fix_signs(u, v, s.size)
    return SvdFactors(u, s, v, kind, rank)


def require_nonzero(a, name="D"):
    if not np.any(a):
        raise ZeroMatrixError(f"{name} must be nonzero")


def pinv(a, tol=DEFAULT_TOL):
    """Moore-Penrose pseudo-inverse ``V_r diag(1/sigma_r) U_r^T``."""
    a = as_matrix(a)
    require_nonzero(a, "matrix")
    f = svd(a, "skinny", tol)
    return (f.v / f.sigma) @ f.u.T


def soft_threshold(x, eps):
    """Elementwise shrinkage ``sign(x) * max(|x| - eps, 0)``.

    Works on scalars and arrays alike.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    out = np.sign(x) * np.maximum(np.abs(x) - eps, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def column_shrink(x, eps):
    """Scale each column by ``(||x_j|| - eps) / ||x_j||``; columns with norm <= eps vanish."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=0)
    scale = np.zeros_like(norms)
    keep = norms > eps
    scale[keep] = (norms[keep] - eps) / norms[keep]
    return x * scale


def nuclear_norm(a):
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def l21_norm(a):
    return float(np.sum(np.linalg.norm(a, axis=0)))


def spectral_norm(a):
    return float(np.linalg.norm(a, 2))
