import numpy as np
import pytest

from normrep import closed_form as cf
from normrep.alm import AlmConfig, alm_iterates, alm_solve, equivalence_check_alm
from normrep.errors import ValidationError, ZeroMatrixError
from normrep.lab import OutlierColumns, SparseSpikes, SyntheticSpec, make_instance
from normrep.linalg import column_shrink, soft_threshold
from normrep.problem import ObjectiveSpec

from conftest import low_rank

LAP = ObjectiveSpec("frobenius", "exact", "laplacian", lam=0.01)
L21 = ObjectiveSpec("frobenius", "exact", "l21", lam=0.01)


def spikes_instance(seed=0):
    return make_instance(SyntheticSpec(50, [(4, 50)], SparseSpikes(0.01, 5.0), seed,
                                       signal_scale=np.sqrt(50)))


def outlier_instance(seed=0):
    return make_instance(SyntheticSpec(50, [(4, 50)], OutlierColumns(0.04, 5.0), seed,
                                       signal_scale=np.sqrt(50)))


def test_config_validation():
    with pytest.raises(ValidationError):
        AlmConfig(rho=1.0)
    with pytest.raises(ValidationError):
        AlmConfig(resid_tol=0.0)
    with pytest.raises(ValidationError):
        AlmConfig(max_iter=0)
    with pytest.raises(ValidationError):
        AlmConfig(alpha0=-1.0)


def test_rejects_closed_form_rows():
    with pytest.raises(ValidationError):
        alm_solve(ObjectiveSpec("f", "exact", "gauss", lam=1.0), np.eye(3))
    with pytest.raises(ZeroMatrixError):
        alm_solve(LAP, np.zeros((3, 3)))


def test_clean_data_degenerate_run(rng):
    d = low_rank(rng, 20, 15, 3)
    rep, trace = alm_solve(ObjectiveSpec("f", "exact", "lap", lam=10.0), d)
    assert trace.converged
    assert np.linalg.norm(rep.e) / np.linalg.norm(d) <= 1e-6
    assert np.abs(rep.c - cf.shape_interaction(d).c).max() <= 1e-5


def test_planted_spikes_support_recovered():
    inst = spikes_instance()
    rep, trace = alm_solve(LAP, inst.data)
    assert trace.converged and trace.final.residual <= 1e-7
    assert rep.k == 4
    support = set(np.flatnonzero(np.abs(rep.e) > 1e-3))
    assert set(inst.corrupted) <= support
    np.testing.assert_allclose(rep.e.flat[inst.corrupted], inst.noise.flat[inst.corrupted], atol=1e-4)


def test_planted_outlier_columns():
    inst = outlier_instance()
    rep, trace = alm_solve(L21, inst.data)
    assert trace.converged
    norms = np.linalg.norm(rep.e, axis=0)
    clean = np.setdiff1d(np.arange(50), inst.corrupted)
    assert norms[clean].max() <= 1e-6
    assert np.all(norms[inst.corrupted] > 1.0)
    # attenuated, never amplified
    assert np.all(norms[inst.corrupted] <= 5.0 + 1e-9)


def test_iterate_invariants():
    inst = spikes_instance(1)
    for t, d0, e, c, k, alpha, res in alm_iterates(LAP, inst.data):
        assert np.linalg.matrix_rank(d0, tol=1e-8 * max(1.0, np.abs(d0).max())) <= k
        np.testing.assert_allclose(c @ c, c, atol=1e-10)
        np.testing.assert_allclose(c, c.T, atol=1e-12)


@pytest.mark.parametrize("spec, inst", [(LAP, spikes_instance(2)), (L21, outlier_instance(2))])
def test_e_update_minimizes_prox_subproblem(spec, inst):
    d = inst.data
    rng = np.random.default_rng(0)
    y = np.zeros_like(d)
    for t, d0, e, c, k, alpha, res in alm_iterates(spec, d, AlmConfig(max_iter=8)):
        x = d - d0 + y / alpha
        eps = spec.lam / alpha
        if spec.noise == "laplacian":
            def cost(v, xv):
                return eps * np.abs(v) + 0.5 * (v - xv) ** 2
            base = cost(e, x)
            for delta in (1e-4, -1e-4):
                assert np.all(cost(e + delta, x) >= base - 1e-15)
        else:
            def cost(v, xv):
                return eps * np.linalg.norm(v) + 0.5 * np.sum((v - xv) ** 2)
            for j in range(d.shape[1]):
                base = cost(e[:, j], x[:, j])
                for _ in range(4):
                    p = rng.standard_normal(d.shape[0])
                    p *= 1e-4 / np.linalg.norm(p)
                    for sgn in (1, -1):
                        assert cost(e[:, j] + sgn * p, x[:, j]) >= base - 1e-15
        y = y + alpha * (d - d0 - e)


def test_first_iteration_is_svd_of_d(rng):
    d = rng.standard_normal((8, 6))
    spec = ObjectiveSpec("f", "exact", "lap", lam=1e9)
    t, d0, e, c, k, alpha, res = next(alm_iterates(spec, d))
    np.testing.assert_array_equal(e, 0.0)
    s = cf.svd(d)
    np.testing.assert_allclose(d0, s.truncate(k).reconstruct(), atol=1e-13)
    assert k == cf.select_k(np.linalg.svd(d, compute_uv=False), 1e9)


@pytest.mark.parametrize("noise", ["laplacian", "sample_specific"])
def test_huge_lambda_one_effective_iteration(rng, noise):
    d = low_rank(rng, 12, 10, 3)
    for norm in ("frobenius", "nuclear"):
        rep, trace = alm_solve(ObjectiveSpec(norm, "exact", noise, lam=1e9), d)
        assert len(trace) == 1 and trace.converged
        np.testing.assert_array_equal(rep.e, 0.0)
        np.testing.assert_allclose(rep.c, cf.shape_interaction(d).c, atol=1e-10)


@pytest.mark.parametrize("noise, inst", [("laplacian", spikes_instance(3)),
                                         ("sample_specific", outlier_instance(3))])
def test_lockstep_reconciled(noise, inst):
    rep = equivalence_check_alm(inst.data, noise, 0.01)
    assert rep.iterations > 1
    assert rep.max_deviation <= 1e-10
    assert not rep.k_divergence
    assert rep.converged_fnr and rep.converged_nnr


def test_lockstep_mismatched_weights_diverge():
    # sigma^2 = (4, 1.5): weight 1 keeps both, weight 1/2 keeps one
    d = np.diag([2.0, np.sqrt(1.5), 0.0])
    rep = equivalence_check_alm(d, "laplacian", 1.0, nnr_factor=1.0)
    assert 1 in rep.k_divergence
    assert rep.max_deviation > 0


def test_trace_csv(rng):
    _, trace = alm_solve(LAP, spikes_instance().data)
    lines = trace.to_csv().splitlines()
    assert lines[0] == "iter,residual,alpha,k,objective"
    assert len(lines) == len(trace) + 1
    assert float(lines[-1].split(",")[1]) == trace.final.residual


def test_non_convergence_returns_best_iterate():
    inst = spikes_instance()
    rep, trace = alm_solve(LAP, inst.data, AlmConfig(max_iter=3))
    assert not trace.converged
    assert rep.diagnostics["converged"] is False
    assert rep.diagnostics["residual"] == min(s.residual for s in trace.steps)
