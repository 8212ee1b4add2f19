"""Synthetic union-of-subspaces data and the clustering harness."""

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans
from sklearn.metrics import normalized_mutual_info_score

from .errors import ShapeError, ValidationError
from .linalg import as_matrix


@dataclass(frozen=True)
class NoNoise:
    pass


@dataclass(frozen=True)
class Gaussian:
    stddev: float


@dataclass(frozen=True)
class Laplacian:
    """Laplace(0, scale) noise on a ``density`` fraction of the entries."""

    scale: float
    density: float = 1.0


@dataclass(frozen=True)
class SparseSpikes:
    """``round(fraction * m * n)`` entries set off by +-``magnitude``."""

    fraction: float
    magnitude: float


@dataclass(frozen=True)
class OutlierColumns:
    """``round(fraction * n)`` columns receive a random vector of norm ``magnitude``."""

    fraction: float
    magnitude: float


@dataclass(frozen=True)
class SyntheticSpec:
    ambient_dim: int
    subspaces: tuple  # of (dim, point_count)
    noise: object = field(default_factory=NoNoise)
    seed: int = 0
    signal_scale: float = 1.0  # norm of every clean column

    def __post_init__(self):
        object.__setattr__(self, "subspaces", tuple(tuple(int(v) for v in s) for s in self.subspaces))
        if self.ambient_dim < 1 or not self.subspaces:
            raise ValidationError("need a positive ambient dimension and at least one subspace")
        for dim, count in self.subspaces:
            if not 1 <= dim < self.ambient_dim:
                raise ValidationError(f"subspace dim {dim} must be in [1, {self.ambient_dim})")
            if count < 1:
                raise ValidationError("every subspace needs at least one point")
        if not self.signal_scale > 0:
            raise ValidationError("signal_scale must be positive")
        frac = getattr(self.noise, "fraction", None)
        if frac is not None and not 0 <= frac < 1:
            raise ValidationError("fraction must lie in [0, 1)")

    @property
    def n_points(self):
        return sum(c for _, c in self.subspaces)


@dataclass(frozen=True)
class Instance:
    data: np.ndarray
    labels: np.ndarray
    clean: np.ndarray
    noise: np.ndarray
    corrupted: np.ndarray  # indices of corrupted columns (outliers) or entries (spikes)


def make_instance(spec):
    """Draw a corrupted union-of-subspaces instance, bit-deterministic in ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    m = spec.ambient_dim
    blocks, labels = [], []
    for j, (dim, count) in enumerate(spec.subspaces):
        basis, _ = np.linalg.qr(rng.standard_normal((m, dim)))
        x = basis @ rng.standard_normal((dim, count))
        x *= spec.signal_scale / np.linalg.norm(x, axis=0)
        blocks.append(x)
        labels.extend([j] * count)
    clean = np.hstack(blocks)
    n = clean.shape[1]
    noise = np.zeros_like(clean)
    corrupted = np.array([], dtype=int)
    model = spec.noise
    if isinstance(model, Gaussian):
        noise = model.stddev * rng.standard_normal((m, n))
    elif isinstance(model, Laplacian):
        noise = rng.laplace(0.0, model.scale, (m, n))
        if model.density < 1:
            mask = rng.random((m, n)) < model.density
            noise *= mask
            corrupted = np.flatnonzero(mask)
    elif isinstance(model, SparseSpikes):
        count = int(round(model.fraction * m * n))
        corrupted = np.sort(rng.choice(m * n, count, replace=False))
        noise.flat[corrupted] = model.magnitude * rng.choice([-1.0, 1.0], count)
    elif isinstance(model, OutlierColumns):
        count = int(round(model.fraction * n))
        corrupted = np.sort(rng.choice(n, count, replace=False))
        g = rng.standard_normal((m, count))
        noise[:, corrupted] = model.magnitude * g / np.linalg.norm(g, axis=0)
    elif not isinstance(model, NoNoise):
        raise ValidationError(f"unknown noise model {model!r}")
    return Instance(clean + noise, np.asarray(labels), clean, noise, corrupted)


def generate(spec):
    """Return ``(data, true_labels)`` for ``spec``."""
    inst = make_instance(spec)
    return inst.data, inst.labels


def affinity(c, zero_diagonal=False):
    """Symmetric affinity ``(|C| + |C^T|) / 2``."""
    c = as_matrix(c, "C")
    if c.shape[0] != c.shape[1]:
        raise ShapeError("affinity needs a square coefficient matrix")
    w = 0.5 * (np.abs(c) + np.abs(c.T))
    if zero_diagonal:
        np.fill_diagonal(w, 0.0)
    return w


def cross_block_max(w, labels):
    """Largest ``|w_ij|`` over pairs with different labels."""
    labels = np.asarray(labels)
    mask = labels[:, None] != labels[None, :]
    return float(np.abs(w[mask]).max()) if mask.any() else 0.0


def clustering_accuracy(true, pred):
    """Best-permutation accuracy: exhaustive up to 6 clusters, Hungarian beyond."""
    true = np.asarray(true)
    pred = np.asarray(pred)
    tl, ti = np.unique(true, return_inverse=True)
    pl, pi = np.unique(pred, return_inverse=True)
    size = max(tl.size, pl.size)
    counts = np.zeros((size, size), dtype=int)
    np.add.at(counts, (pi, ti), 1)
    if size <= 6:
        best = max(sum(counts[i, p[i]] for i in range(size))
                   for p in itertools.permutations(range(size)))
    else:
        rows, cols = linear_sum_assignment(-counts)
        best = counts[rows, cols].sum()
    return float(best) / true.size


@dataclass(frozen=True)
class ClusterResult:
    labels: np.ndarray
    accuracy: float | None = None
    nmi: float | None = None


def spectral_embedding(w, k, eps=1e-12):
    """Bottom ``k`` eigenvectors of ``I - D^{-1/2} W D^{-1/2}``, rows normalized."""
    w = as_matrix(w, "W")
    deg = w.sum(axis=1) + eps
    inv = 1.0 / np.sqrt(deg)
    lap = np.eye(w.shape[0]) - inv[:, None] * w * inv[None, :]
    _, vecs = np.linalg.eigh(0.5 * (lap + lap.T))
    emb = vecs[:, :k]
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return emb / norms


def spectral_cluster(w, k, seed=0, true_labels=None, n_init=20):
    """Normalized spectral clustering with seeded k-means (``n_init`` restarts)."""
    if k < 1:
        raise ValidationError("k must be at least 1")
    w = as_matrix(w, "W")
    if w.shape[0] != w.shape[1] or np.any(w < 0) or not np.allclose(w, w.T):
        raise ValidationError("W must be square, symmetric and nonnegative")
    emb = spectral_embedding(w, k)
    labels = KMeans(n_clusters=k, n_init=n_init, random_state=seed).fit_predict(emb)
    if true_labels is None:
        return ClusterResult(labels)
    return ClusterResult(labels, clustering_accuracy(true_labels, labels),
                         float(normalized_mutual_info_score(true_labels, labels)))


def same_partition(a, b):
    return clustering_accuracy(a, b) == 1.0
