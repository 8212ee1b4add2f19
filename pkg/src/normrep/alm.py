"""Inexact augmented Lagrangian solvers for exact self-expression under
Laplacian (entrywise l1) and sample-specific (column l2,1) corruption.

Each iteration:

1. SVD of ``D - E_t + Y_t / alpha_t``;
2. ``D0`` keeps the top ``k`` triples, ``k`` from the hard-threshold rule;
3. ``E`` is the entrywise or columnwise shrinkage of ``D - D0 + Y_t / alpha_t``
   at threshold ``lam / alpha_t``;
4. ``Y += alpha_t (D - D0 - E)``, ``alpha *= rho``.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .closed_form import k_rule_weight, select_k
from .errors import ValidationError
from .linalg import DEFAULT_TOL, as_matrix, column_shrink, require_nonzero, soft_threshold, svd
from .problem import ObjectiveSpec, Representation, objective_value


@dataclass(frozen=True)
class AlmConfig:
    """ALM parameters. ``alpha0=None`` means ``1 / ||D||_2``."""

    alpha0: float | None = None
    rho: float = 1.1
    max_iter: int = 500
    resid_tol: float = 1e-7

    def __post_init__(self):
        if not self.rho > 1:
            raise ValidationError("rho must exceed 1")
        if not self.resid_tol > 0:
            raise ValidationError("resid_tol must be positive")
        if int(self.max_iter) < 1:
            raise ValidationError("max_iter must be at least 1")
        if self.alpha0 is not None and not self.alpha0 > 0:
            raise ValidationError("alpha0 must be positive")


@dataclass
class AlmStep:
    iter: int
    residual: float
    alpha: float
    k: int
    objective: float


@dataclass
class AlmTrace:
    steps: list = field(default_factory=list)
    converged: bool = False

    def __len__(self):
        return len(self.steps)

    @property
    def final(self):
        return self.steps[-1]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "residual", "alpha", "k", "objective"])
        for s in self.steps:
            w.writerow([s.iter, f"{s.residual:.17g}", f"{s.alpha:.17g}", s.k,
                        f"{s.objective:.17g}"])
        return buf.getvalue()


def _shrink_e(noise, x, eps):
    if noise == "laplacian":
        return soft_threshold(x, eps)
    return column_shrink(x, eps)


def alm_iterates(spec, d, cfg=AlmConfig(), tol=DEFAULT_TOL, alpha0=None):
    """Yield ``(t, d0, e, c, k, alpha_t, residual)`` after each ALM iteration.

    ``alpha0`` overrides ``cfg.alpha0``. The generator stops at convergence
    or at ``cfg.max_iter``.
    """
    if spec.constraint != "exact" or spec.noise not in ("laplacian", "sample_specific"):
        raise ValidationError(f"ALM handles exact Laplacian/sample-specific rows, not {spec.label()}")
    d = as_matrix(d, "D")
    require_nonzero(d)
    lam = spec.lam
    weight = k_rule_weight(spec.norm, lam)
    if alpha0 is None:
        alpha0 = cfg.alpha0 if cfg.alpha0 is not None else 1.0 / np.linalg.norm(d, 2)
    dnorm = np.linalg.norm(d)
    e = np.zeros_like(d)
    y = np.zeros_like(d)
    alpha = float(alpha0)
    for t in range(1, int(cfg.max_iter) + 1):
        f = svd(d - e + y / alpha, "skinny", tol)
        k = select_k(f.sigma, weight)
        fk = f.truncate(k)
        d0 = fk.reconstruct() if k else np.zeros_like(d)
        c = fk.v @ fk.v.T if k else np.zeros((d.shape[1], d.shape[1]))
        e = _shrink_e(spec.noise, d - d0 + y / alpha, lam / alpha)
        r = d - d0 - e
        y = y + alpha * r
        residual = float(np.linalg.norm(r) / dnorm)
        yield t, d0, e, c, k, alpha, residual
        if residual <= cfg.resid_tol:
            return
        alpha = alpha * cfg.rho


def alm_solve(spec, d, cfg=AlmConfig(), tol=DEFAULT_TOL):
    """Solve an exact-constraint Laplacian or sample-specific row.

    Returns
    -------
    rep : Representation
        ``C = V_k V_k^T`` from the last SVD. If the residual never reaches
        ``cfg.resid_tol`` the lowest-residual iterate is returned and
        ``rep.diagnostics["converged"]`` is False.
    trace : AlmTrace
    """
    d = as_matrix(d, "D")
    trace = AlmTrace()
    best = None
    for t, d0, e, c, k, alpha, res in alm_iterates(spec, d, cfg, tol):
        obj = objective_value(spec, d, c, d0, e)
        trace.steps.append(AlmStep(t, res, alpha, k, obj))
        if best is None or res <= best[0]:
            best = (res, d0, e, c, k, obj, t)
    res, d0, e, c, k, obj, t = best
    trace.converged = res <= cfg.resid_tol
    diag = {"converged": trace.converged, "iterations": len(trace),
            "best_iteration": t, "residual": res,
            "k_rule_weight": k_rule_weight(spec.norm, spec.lam),
            "e_threshold": "lambda / alpha_t"}
    return Representation(c, d0, e, k, obj, "alm", spec, diag), trace


@dataclass
class AlmEquivalenceReport:
    """Per-iteration FNR/NNR deviation from a lockstep ALM run."""

    lam_fnr: float
    lam_nnr: float
    alpha_scale: float
    iterations: int
    max_dev_d0: list
    max_dev_e: list
    max_dev_c: list
    k_fnr: list
    k_nnr: list
    converged_fnr: bool
    converged_nnr: bool

    @property
    def max_deviation(self):
        devs = self.max_dev_d0 + self.max_dev_e + self.max_dev_c
        return max(devs) if devs else 0.0

    @property
    def k_divergence(self):
        return [i + 1 for i, (a, b) in enumerate(zip(self.k_fnr, self.k_nnr)) if a != b]


def equivalence_check_alm(d, noise, lam_fnr, cfg=AlmConfig(), nnr_factor=2.0, tol=DEFAULT_TOL):
    """Run the FNR and NNR ALM side by side and record their divergence.

    The NNR run uses weight ``nnr_factor * lam_fnr``. At a projector ``C``
    the NNR objective with weight ``2 lam`` is exactly twice the FNR
    objective with weight ``lam``, so the NNR run also uses twice the
    penalty ``alpha``: its multiplier is then twice the FNR multiplier, the
    shrinkage thresholds ``lam / alpha`` coincide and, with the default
    factor, both runs follow the same arithmetic path. Any other factor
    shows where the two k-rules part ways.
    """
    d = as_matrix(d, "D")
    require_nonzero(d)
    f_spec = ObjectiveSpec("frobenius", "exact", noise, lam=lam_fnr)
    n_spec = ObjectiveSpec("nuclear", "exact", noise, lam=nnr_factor * lam_fnr)
    a0 = cfg.alpha0 if cfg.alpha0 is not None else 1.0 / np.linalg.norm(d, 2)
    gf = alm_iterates(f_spec, d, cfg, tol, alpha0=a0)
    gn = alm_iterates(n_spec, d, cfg, tol, alpha0=nnr_factor * a0)
    dev_d0, dev_e, dev_c, kf, kn = [], [], [], [], []
    conv_f = conv_n = False
    n_iter = 0
    last_f = last_n = None
    while True:
        sf = next(gf, None)
        sn = next(gn, None)
        if sf is None or sn is None:
            break
        last_f, last_n = sf, sn
        n_iter += 1
        dev_d0.append(float(np.max(np.abs(sf[1] - sn[1]))))
        dev_e.append(float(np.max(np.abs(sf[2] - sn[2]))))
        dev_c.append(float(np.max(np.abs(sf[3] - sn[3]))))
        kf.append(sf[4])
        kn.append(sn[4])
    if last_f is not None:
        conv_f = last_f[6] <= cfg.resid_tol
        conv_n = last_n[6] <= cfg.resid_tol
    return AlmEquivalenceReport(lam_fnr, nnr_factor * lam_fnr, nnr_factor, n_iter,
                                dev_d0, dev_e, dev_c, kf, kn, conv_f, conv_n)
