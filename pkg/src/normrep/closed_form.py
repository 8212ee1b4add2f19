"""Closed-form FNR and NNR solutions for the noise-free and Gaussian rows.

Every solution here has the form ``C = V diag(phi) V^T`` where ``V`` holds
right singular vectors of the dictionary (or of the recovered clean
dictionary) and ``phi`` is a per-singular-value shrinkage map.
"""

import numpy as np

from .errors import InfeasibleError, RootFindingError, ValidationError
from .linalg import DEFAULT_TOL, as_matrix, require_nonzero, svd
from .problem import ObjectiveSpec, Representation, objective_value

_EPS = np.finfo(np.float64).eps


def _projector(v):
    return v @ v.T


def _spectral(v, phi):
    return (v * phi) @ v.T


def fnr_exact(x, d, tol=DEFAULT_TOL):
    """Minimum-norm solution ``C = pinv(D) @ X`` of ``X = D C``.

    The same matrix minimizes both ``||C||_F`` and ``||C||_*`` under the
    constraint, so this covers the FNR and NNR rows alike.

    Raises
    ------
    InfeasibleError
        If ``X`` is not in the column space of ``D``.
    """
    d = as_matrix(d, "D")
    x = as_matrix(x, "X")
    require_nonzero(d)
    if x.shape[0] != d.shape[0]:
        raise ValidationError(f"X has {x.shape[0]} rows, D has {d.shape[0]}")
    f = svd(d, "skinny", tol)
    c = (f.v / f.sigma) @ (f.u.T @ x)
    gap = np.linalg.norm(d @ c - x)
    xnorm = np.linalg.norm(x)
    if gap > tol.equiv_tol * xnorm:
        raise InfeasibleError(
            f"X leaves the span of D: residual {gap:.3e} > {tol.equiv_tol:g} * {xnorm:.3e}")
    spec = ObjectiveSpec("frobenius", "exact", "none")
    return Representation(
        c=c, d0=d, e=np.zeros_like(d), k=f.numerical_rank,
        objective=float(np.linalg.norm(c)), method="closed-form", spec=spec,
        diagnostics={"feasibility_residual": float(gap)},
    )


def shape_interaction(d, tol=DEFAULT_TOL, norm="frobenius"):
    """Shape interaction matrix ``V_r V_r^T`` of ``D``, the solution of ``D = D C``."""
    d = as_matrix(d, "D")
    require_nonzero(d)
    f = svd(d, "skinny", tol)
    c = _projector(f.v)
    spec = ObjectiveSpec(norm, "exact", "none")
    return Representation(
        c=c, d0=d, e=np.zeros_like(d), k=f.numerical_rank,
        objective=objective_value(spec, d, c), method="closed-form", spec=spec,
        diagnostics={"sigma": f.sigma},
    )


def truncation_costs(sigma, weight):
    """``r + weight * sum_{i>r} sigma_i^2`` for ``r = 0..len(sigma)``."""
    s2 = np.asarray(sigma, dtype=np.float64) ** 2
    tail = np.concatenate([np.cumsum(s2[::-1])[::-1], [0.0]])
    return np.arange(s2.size + 1) + weight * tail


def _argmin_low(costs):
    # ties (up to a few ulps of the largest finite cost) go to the smallest r
    finite = costs[np.isfinite(costs)]
    best = costs.min()
    slack = 16 * _EPS * (np.abs(finite).max() if finite.size else 0.0)
    return int(np.flatnonzero(costs <= best + slack)[0])


def select_k(sigma, weight):
    """Hard-threshold rank ``argmin_r r + weight * sum_{i>r} sigma_i^2``.

    ``sigma`` must be sorted in descending order. Ties go to the smallest
    ``r``. The FNR rule uses ``weight = lambda``, the NNR rule
    ``weight = lambda / 2``.
    """
    if not weight > 0:
        raise ValidationError("weight must be positive")
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.size and np.any(np.diff(sigma) > 0):
        raise ValidationError("sigma must be sorted in descending order")
    with np.errstate(over="ignore", invalid="ignore"):
        costs = truncation_costs(sigma, weight)
    return _argmin_low(costs)


def k_rule_weight(norm, lam):
    return lam / 2.0 if norm == "nuclear" else lam


def exact_gaussian(d, lam, norm="frobenius", tol=DEFAULT_TOL):
    """Exact self-expression with a Gaussian error term.

    Keeps the top ``k`` singular triples, with ``k`` from :func:`select_k`
    (weight ``lam`` for Frobenius, ``lam / 2`` for nuclear), giving
    ``C = V_k V_k^T``, ``D0 = U_k S_k V_k^T`` and ``E = D - D0``.
    """
    d = as_matrix(d, "D")
    require_nonzero(d)
    if not lam > 0:
        raise ValidationError("lambda must be positive")
    spec = ObjectiveSpec(norm, "exact", "gaussian", lam=lam)
    f = svd(d, "skinny", tol)
    k = select_k(f.sigma, k_rule_weight(spec.norm, lam))
    fk = f.truncate(k)
    c = _projector(fk.v) if k else np.zeros((d.shape[1], d.shape[1]))
    d0 = fk.reconstruct() if k else np.zeros_like(d)
    e = d - d0
    diag = {"sigma": f.sigma}
    if k == 0:
        diag["empty_selection"] = True
    return Representation(c, d0, e, k, objective_value(spec, d, c, d0, e),
                          "closed-form", spec, diag)


def fnr_shrinkage(sigma, gamma):
    """``gamma s^2 / (1 + gamma s^2)``, written as ``1 - 1/(1 + gamma s^2)``."""
    s2 = np.asarray(sigma, dtype=np.float64) ** 2
    return 1.0 - 1.0 / (1.0 + gamma * s2)


def nnr_shrinkage(sigma, gamma):
    """``1 - 1/(gamma s^2)`` above ``1/sqrt(gamma)``, zero at or below it."""
    s = np.asarray(sigma, dtype=np.float64)
    out = np.zeros_like(s)
    keep = s > 1.0 / np.sqrt(gamma)
    out[keep] = 1.0 - 1.0 / (gamma * s[keep] ** 2)
    return out


def _boundary(values, gamma):
    thr = 1.0 / np.sqrt(gamma)
    return [int(i) for i in np.flatnonzero(np.isclose(values, thr, rtol=1e-12, atol=0.0))]


def fnr_relaxed(d, gamma, tol=DEFAULT_TOL):
    """Minimizer of ``0.5 ||C||_F^2 + gamma/2 ||D - D C||_F^2``."""
    d = as_matrix(d, "D")
    require_nonzero(d)
    if not gamma > 0:
        raise ValidationError("gamma must be positive")
    spec = ObjectiveSpec("frobenius", "relaxed", "none", gamma=gamma)
    f = svd(d, "skinny", tol)
    phi = fnr_shrinkage(f.sigma, gamma)
    c = _spectral(f.v, phi)
    return Representation(c, d, np.zeros_like(d), f.numerical_rank,
                          objective_value(spec, d, c), "closed-form", spec,
                          {"sigma": f.sigma, "shrinkage": phi})


def nnr_relaxed(d, gamma, tol=DEFAULT_TOL):
    """Minimizer of ``||C||_* + gamma/2 ||D - D C||_F^2``.

    Singular values at exactly ``1/sqrt(gamma)`` fall in the zero branch and
    are listed under ``diagnostics["boundary_indices"]``.
    """
    d = as_matrix(d, "D")
    require_nonzero(d)
    if not gamma > 0:
        raise ValidationError("gamma must be positive")
    spec = ObjectiveSpec("nuclear", "relaxed", "none", gamma=gamma)
    f = svd(d, "skinny", tol)
    phi = nnr_shrinkage(f.sigma, gamma)
    keep = phi > 0
    c = _spectral(f.v[:, keep], phi[keep])
    return Representation(c, d, np.zeros_like(d), int(keep.sum()),
                          objective_value(spec, d, c), "closed-form", spec,
                          {"sigma": f.sigma, "shrinkage": phi,
                           "boundary_indices": _boundary(f.sigma, gamma)})


# --- scalar sigma <-> omega inversions ---------------------------------------

def _bisect(f, lo, hi, flo, xtol=1e-12, maxiter=200):
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= xtol:
            return mid
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    raise RootFindingError("bisection iteration cap reached")


def _newton(f, df, x, lo, hi, steps=8):
    for _ in range(steps):
        slope = df(x)
        if slope == 0:
            break
        nx = x - f(x) / slope
        if not lo <= nx <= hi or nx == x:
            break
        x = nx
    return x


def _roots_in(f, df, lo, hi, poly, grid=257):
    """All roots of ``f`` on ``[lo, hi]``.

    Sign changes on a uniform grid are bisected and Newton-polished; real
    roots of the equivalent polynomial are added so a close pair of roots
    inside one grid cell is not lost.
    """
    xs = np.linspace(lo, hi, grid)
    fs = np.array([f(x) for x in xs])
    roots = [float(x) for x, v in zip(xs, fs) if v == 0]
    for i in np.flatnonzero(np.sign(fs[:-1]) * np.sign(fs[1:]) < 0):
        r = _bisect(f, xs[i], xs[i + 1], fs[i])
        roots.append(_newton(f, df, r, xs[i], xs[i + 1]))
    for z in np.roots(poly):
        if abs(z.imag) <= 1e-7 * max(1.0, abs(z.real)) and lo <= z.real <= hi:
            roots.append(_newton(f, df, float(z.real), lo, hi))
    scale = max(abs(lo), abs(hi), 1.0)
    good = sorted(r for r in roots if abs(f(r)) <= 1e-9 * scale)
    out = []
    for r in good:
        if not out or abs(r - out[-1]) > 1e-9 * max(1.0, abs(r)):
            out.append(r)
    return out


def fnr_forward(omega, lam, gamma):
    """``sigma = omega + gamma omega / (lam (1 + gamma omega^2)^2)``."""
    return omega + gamma * omega / (lam * (1.0 + gamma * omega * omega) ** 2)


def fnr_index_cost(omega, sigma, lam, gamma):
    """Per-singular-value objective of the relaxed Gaussian FNR row at the best C."""
    w2 = omega * omega
    return 0.5 * lam * (sigma - omega) ** 2 + 0.5 * gamma * w2 / (1.0 + gamma * w2)


def fnr_omega_roots(sigma, lam, gamma):
    """Every positive ``omega`` with ``fnr_forward(omega) == sigma``."""
    if not (sigma > 0 and lam > 0 and gamma > 0):
        raise ValidationError("sigma, lambda and gamma must be positive")

    def f(w):
        return fnr_forward(w, lam, gamma) - sigma

    def df(w):
        q = 1.0 + gamma * w * w
        return 1.0 + (gamma / lam) * (1.0 - 3.0 * gamma * w * w) / q ** 3

    lo = sigma / (1.0 + gamma / lam) * (1.0 - 1e-12)
    # lam (sigma - w)(1 + gamma w^2)^2 - gamma w, expanded
    poly = [-lam * gamma ** 2, lam * sigma * gamma ** 2, -2 * lam * gamma,
            2 * lam * sigma * gamma, -(lam + gamma), lam * sigma]
    roots = _roots_in(f, df, lo, sigma, poly)
    if not roots:
        raise RootFindingError(f"no root found for sigma={sigma!r}")
    return roots


def solve_omega_fnr(sigma, lam, gamma):
    """Invert :func:`fnr_forward`; among several roots pick the cheapest one."""
    roots = fnr_omega_roots(sigma, lam, gamma)
    return min(roots, key=lambda w: fnr_index_cost(w, sigma, lam, gamma))


def nnr_forward(omega, lam, gamma):
    """Two-branch map ``omega -> sigma`` of the relaxed Gaussian NNR row."""
    if omega > 1.0 / np.sqrt(gamma):
        return omega + omega ** -3 / (lam * gamma)
    return omega + (gamma / lam) * omega


def nnr_index_cost(omega, sigma, lam, gamma):
    if omega > 1.0 / np.sqrt(gamma):
        inner = 1.0 - 1.0 / (2.0 * gamma * omega * omega)
    else:
        inner = 0.5 * gamma * omega * omega
    return 0.5 * lam * (sigma - omega) ** 2 + inner


def nnr_omega_roots(sigma, lam, gamma):
    """Feasible roots of both NNR branches as ``(omega, branch)`` pairs."""
    if not (sigma >= 0 and lam > 0 and gamma > 0):
        raise ValidationError("sigma must be nonnegative, lambda and gamma positive")
    thr = 1.0 / np.sqrt(gamma)
    out = []
    low = lam * sigma / (lam + gamma)
    if low <= thr:
        out.append((low, "low"))
    if sigma > thr:
        c = 1.0 / (lam * gamma)

        def f(w):
            return w + c / w ** 3 - sigma

        def df(w):
            return 1.0 - 3.0 * c / w ** 4

        for w in _roots_in(f, df, thr, sigma, [1.0, -sigma, 0.0, 0.0, c]):
            if w > thr:
                out.append((w, "high"))
    if not out:
        raise RootFindingError(f"no feasible branch for sigma={sigma!r}")
    return out


def solve_omega_nnr(sigma, lam, gamma):
    roots = nnr_omega_roots(sigma, lam, gamma)
    return min(roots, key=lambda r: nnr_index_cost(r[0], sigma, lam, gamma))


def relaxed_gaussian(d, lam, gamma, norm="frobenius", tol=DEFAULT_TOL):
    """Relaxed self-expression with a Gaussian error term.

    Each singular value ``sigma_i`` of ``D`` is mapped to the singular value
    ``omega_i`` of the clean dictionary ``D0 = U Omega V^T`` by inverting the
    per-index stationarity equation; ``C`` then applies the relaxed
    noise-free shrinkage to ``Omega``. When an inversion has several roots
    the one with the smallest per-index cost is kept.
    """
    d = as_matrix(d, "D")
    require_nonzero(d)
    if not (lam > 0 and gamma > 0):
        raise ValidationError("lambda and gamma must be positive")
    spec = ObjectiveSpec(norm, "relaxed", "gaussian", lam=lam, gamma=gamma)
    f = svd(d, "skinny", tol)
    omega = np.empty_like(f.sigma)
    multi = []
    branches = []
    for i, s in enumerate(f.sigma):
        if spec.norm == "frobenius":
            roots = fnr_omega_roots(s, lam, gamma)
            omega[i] = min(roots, key=lambda w: fnr_index_cost(w, s, lam, gamma))
        else:
            roots = nnr_omega_roots(s, lam, gamma)
            w, br = min(roots, key=lambda r: nnr_index_cost(r[0], s, lam, gamma))
            omega[i] = w
            branches.append(br)
        if len(roots) > 1:
            multi.append(i)
    if spec.norm == "frobenius":
        phi = fnr_shrinkage(omega, gamma)
        k = f.numerical_rank
    else:
        phi = nnr_shrinkage(omega, gamma)
        k = int(np.count_nonzero(phi))
    keep = phi > 0
    c = _spectral(f.v[:, keep], phi[keep])
    d0 = (f.u * omega) @ f.v.T
    e = d - d0
    diag = {"sigma": f.sigma, "omega": omega, "shrinkage": phi,
            "multi_root_indices": multi,
            "root_policy": "per-index minimum cost among all stationary roots"}
    if spec.norm == "nuclear":
        diag["branches"] = branches
        diag["boundary_indices"] = _boundary(omega, gamma)
    return Representation(c, d0, e, k, objective_value(spec, d, c, d0, e),
                          "closed-form", spec, diag)


def solve_closed_form(spec, d, tol=DEFAULT_TOL):
    """Dispatch ``spec`` to the matching closed-form solver.

    Raises
    ------
    ValidationError
        For Laplacian and sample-specific rows, which need :func:`normrep.alm.alm_solve`.
    """
    if not spec.closed_form:
        raise ValidationError(f"{spec.noise} noise has no closed form; use the ALM solver")
    if spec.noise == "none":
        if spec.constraint == "exact":
            rep = shape_interaction(d, tol, norm=spec.norm)
        elif spec.norm == "frobenius":
            rep = fnr_relaxed(d, spec.gamma, tol)
        else:
            rep = nnr_relaxed(d, spec.gamma, tol)
    elif spec.constraint == "exact":
        rep = exact_gaussian(d, spec.lam, spec.norm, tol)
    else:
        rep = relaxed_gaussian(d, spec.lam, spec.gamma, spec.norm, tol)
    assert rep.spec == spec
    return rep
