"""Independent checkers for the closed forms.

Nothing here calls the SVD-based solvers: the ridge oracle is a linear
solve, the nuclear-norm oracle is plain proximal gradient, the rank oracle
is a literal loop, and stationarity is checked against analytic gradients
and central finite differences of the objective.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import as_matrix, spectral_norm
from .problem import objective_value


@dataclass(frozen=True)
class OracleReport:
    name: str
    max_deviation: float
    objective_gap: float
    tolerance: float
    passed: bool

    def row(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{self.name} = {self.max_deviation:.6e} "
                f"(gap {self.objective_gap:.6e}, tol {self.tolerance:g}) {status}")


def ridge_form(d, beta):
    """``(D^T D + beta I)^{-1} D^T D`` by a linear solve."""
    d = as_matrix(d, "D")
    if not beta > 0:
        raise ValidationError("ridge weight must be positive")
    g = d.T @ d
    return np.linalg.solve(g + beta * np.eye(g.shape[0]), g)


def ridge_solution(d, gamma):
    """Minimizer of ``0.5 ||C||_F^2 + gamma/2 ||D - D C||_F^2`` by a linear solve.

    Dividing the normal equations by ``gamma`` gives the ridge form with
    weight ``beta = 1 / gamma``; ``ridge_form(d, gamma)`` instead solves the
    problem with penalty weight ``1 / gamma``.
    """
    if not gamma > 0:
        raise ValidationError("gamma must be positive")
    return ridge_form(d, 1.0 / gamma)


def _svt(a, t):
    u, s, vt = np.linalg.svd(a)
    s = np.maximum(s - t, 0.0)
    return (u * s) @ vt


def proximal_nuclear(d, gamma, steps=5000, gtol=1e-9):
    """Proximal gradient for ``||C||_* + gamma/2 ||D - D C||_F^2``.

    Fixed step ``1 / (gamma ||D||_2^2)``, starting from ``C = 0``. Stops
    after ``steps`` iterations or once the gradient-map norm drops below
    ``gtol``.

    Returns
    -------
    c : ndarray
    n_steps : int
    """
    d = as_matrix(d, "D")
    if not gamma > 0:
        raise ValidationError("gamma must be positive")
    g = d.T @ d
    n = g.shape[0]
    lip = gamma * spectral_norm(d) ** 2
    if lip == 0:
        return np.zeros((n, n)), 0
    t = 1.0 / lip
    c = np.zeros((n, n))
    eye = np.eye(n)
    for it in range(1, steps + 1):
        grad = gamma * g @ (c - eye)
        nc = _svt(c - t * grad, t)
        gmap = np.linalg.norm(nc - c) / t
        c = nc
        if gmap <= gtol:
            return c, it
    return c, steps


def brute_force_k(sigma, weight):
    """Literal enumeration of ``r + weight * sum_{i>r} sigma_i^2``.

    The tail is summed left to right for each ``r``; ties go to the
    smallest ``r``.
    """
    sigma = [float(s) for s in sigma]
    p = len(sigma)
    costs = []
    for r in range(p + 1):
        tail = 0.0
        for s in sigma[r:]:
            tail += s * s
        costs.append(r + weight * tail)
    finite = [abs(c) for c in costs if np.isfinite(c)]
    slack = 16 * np.finfo(float).eps * (max(finite) if finite else 0.0)
    best = min(costs)
    for r, cost in enumerate(costs):
        if cost <= best + slack:
            return r
    return p


def truncation_objectives(spec, d):
    """Objective of every truncation ``D0 = U_r S_r V_r^T``, ``C = V_r V_r^T``.

    Used to confirm that the hard-threshold rank beats every other ``r``
    on the exact Gaussian rows.
    """
    d = as_matrix(d, "D")
    u, s, vt = np.linalg.svd(d, full_matrices=False)
    out = []
    for r in range(s.size + 1):
        d0 = (u[:, :r] * s[:r]) @ vt[:r]
        c = vt[:r].T @ vt[:r]
        out.append(objective_value(spec, d, c, d0))
    return np.array(out)


# --- stationarity --------------------------------------------------------------

def grad_c_frobenius(d0, c, gamma):
    """Gradient in ``C`` of ``0.5 ||C||_F^2 + gamma/2 ||D0 - D0 C||_F^2``."""
    return c - gamma * d0.T @ d0 @ (np.eye(c.shape[0]) - c)


def grad_d0(d, d0, c, lam, gamma):
    """Gradient in ``D0`` of ``lam/2 ||D - D0||^2 + gamma/2 ||D0 - D0 C||^2``."""
    r = np.eye(c.shape[0]) - c
    return -lam * (d - d0) + gamma * d0 @ r @ r.T


def nuclear_subgradient_residual(d0, c, gamma, rank_tol=1e-10):
    """Distance from ``-grad`` of the smooth term to the subdifferential of ``||C||_*``.

    ``C`` is symmetric PSD here. With ``Q`` spanning its range and ``P``
    the complementary projector, ``M = gamma D0^T D0 (I - C)`` must satisfy
    ``Q^T M Q = I``, ``Q^T M P = 0``, ``P M Q = 0`` and ``||P M P||_2 <= 1``.
    """
    n = c.shape[0]
    m = gamma * d0.T @ d0 @ (np.eye(n) - c)
    w, vecs = np.linalg.eigh(0.5 * (c + c.T))
    keep = w > rank_tol * max(1.0, abs(w).max())
    q = vecs[:, keep]
    p = np.eye(n) - q @ q.T
    parts = [0.0]
    if q.shape[1]:
        parts.append(np.abs(q.T @ m @ q - np.eye(q.shape[1])).max())
        parts.append(np.abs(q.T @ m @ p).max())
        parts.append(np.abs(p @ m @ q).max())
    parts.append(max(0.0, spectral_norm(p @ m @ p) - 1.0))
    return float(max(parts))


def _fd_check(fun, x, grad, rng, n_coords=50, h=1e-6):
    flat = x.ravel()
    idx = np.arange(flat.size)
    # every coordinate up to 20x20, a random subset beyond
    if max(x.shape) > 20:
        idx = rng.choice(flat.size, min(n_coords, flat.size), replace=False)
    scale = max(1.0, float(np.abs(grad).max()))
    worst = 0.0
    for i in idx:
        xp = flat.copy()
        xm = flat.copy()
        xp[i] += h
        xm[i] -= h
        fd = (fun(xp.reshape(x.shape)) - fun(xm.reshape(x.shape))) / (2 * h)
        worst = max(worst, abs(fd - grad.flat[i]) / scale)
    return worst


@dataclass(frozen=True)
class StationarityReport:
    analytic: OracleReport
    finite_difference: OracleReport
    gradient_norm: float

    @property
    def passed(self):
        return self.analytic.passed and self.finite_difference.passed


def stationarity_check(spec, d, rep, seed=0, analytic_tol=1e-8, fd_tol=1e-4):
    """Check first-order optimality of a relaxed-row solution.

    Smooth blocks are tested against their analytic gradients (scaled
    tolerance ``analytic_tol * (1 + ||D||_F^2)``) and against central
    finite differences of :func:`objective_value` (all coordinates up to 20x20,
    50 random coordinates beyond). Nuclear-norm rows test ``C`` via the
    subdifferential.
    """
    if spec.constraint != "relaxed":
        raise ValidationError("stationarity checks apply to relaxed rows")
    d = as_matrix(d, "D")
    c = as_matrix(rep.c, "C")
    d0 = d if spec.noise == "none" else as_matrix(rep.d0, "D0")
    rng = np.random.default_rng(seed)
    scale = 1.0 + float(np.sum(d * d))
    gamma = spec.gamma

    residuals = []
    fd_dev = 0.0
    if spec.norm == "frobenius":
        gc = grad_c_frobenius(d0, c, gamma)
        residuals.append(float(np.linalg.norm(gc)))

        def f_c(cc):
            return objective_value(spec, d, cc, d0)

        fd_dev = max(fd_dev, _fd_check(f_c, c, gc, rng))
    else:
        residuals.append(nuclear_subgradient_residual(d0, c, gamma))
    if spec.noise == "gaussian":
        gd = grad_d0(d, d0, c, spec.lam, gamma)
        residuals.append(float(np.linalg.norm(gd)))

        def f_d0(dd):
            return objective_value(spec, d, c, dd)

        fd_dev = max(fd_dev, _fd_check(f_d0, d0, gd, rng))
    gnorm = max(residuals)
    tol = analytic_tol * scale
    analytic = OracleReport("stationarity/analytic", gnorm, 0.0, tol, gnorm <= tol)
    fd = OracleReport("stationarity/finite-difference", fd_dev, 0.0, fd_tol, fd_dev <= fd_tol)
    return StationarityReport(analytic, fd, gnorm)
