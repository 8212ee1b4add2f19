import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from normrep.errors import NonFiniteError, ShapeError, SvdConvergenceError, ZeroMatrixError
from normrep.linalg import (Tolerances, as_matrix, column_shrink, nuclear_norm, pinv,
                            soft_threshold, svd)
from normrep.problem import ObjectiveSpec, objective_value
from normrep.audit import moore_penrose_residual
from normrep import closed_form as cf

from conftest import low_rank

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
matrices = st.tuples(st.integers(1, 12), st.integers(1, 12)).flatmap(
    lambda s: arrays(np.float64, s, elements=finite))


def test_tolerances_must_be_positive():
    with pytest.raises(ValueError):
        Tolerances(rank_tol=0.0)
    with pytest.raises(ValueError):
        Tolerances(equiv_tol=-1.0)


def test_as_matrix_rejects_non_finite():
    with pytest.raises(NonFiniteError):
        as_matrix([[1.0, np.nan]])
    with pytest.raises(NonFiniteError):
        svd(np.array([[np.inf, 0.0], [0.0, 1.0]]))


def test_as_matrix_vector_becomes_column():
    assert as_matrix([1.0, 2.0]).shape == (2, 1)


def test_svd_identity():
    f = svd(np.eye(3))
    np.testing.assert_allclose(f.sigma, [1, 1, 1])
    assert f.numerical_rank == 3


def test_svd_all_ones():
    f = svd(np.ones((2, 2)), kind="full")
    np.testing.assert_allclose(f.sigma, [2, 0], atol=1e-15)
    assert f.numerical_rank == 1
    assert svd(np.ones((2, 2))).sigma.size == 1


def test_svd_random_reconstruction(rng):
    a = rng.standard_normal((6, 4))
    tol = Tolerances()
    for kind in ("skinny", "full"):
        f = svd(a, kind, tol)
        assert np.linalg.norm(f.reconstruct() - a) <= tol.recon_tol * np.linalg.norm(a)


def test_svd_non_convergence_is_distinct(monkeypatch):
    def boom(*args, **kwargs):
        raise np.linalg.LinAlgError("SVD did not converge")

    monkeypatch.setattr(np.linalg, "svd", boom)
    with pytest.raises(SvdConvergenceError):
        svd(np.eye(2))


def test_svd_truncate(rng):
    f = svd(low_rank(rng, 8, 6, 4))
    t = f.truncate(2)
    assert t.sigma.size == 2 and t.u.shape == (8, 2) and t.v.shape == (6, 2)


@settings(max_examples=300, deadline=None)
@given(matrices)
def test_svd_invariants(a):
    tol = Tolerances()
    f = svd(a, "full", tol)
    assert np.all(np.diff(f.sigma) <= 0)
    assert np.all(f.sigma >= 0)
    assert np.linalg.norm(f.reconstruct() - a) <= tol.recon_tol * np.linalg.norm(a)
    if a.any():
        s = svd(a, "skinny", tol)
        assert np.all(s.sigma > tol.rank_tol * s.sigma[0])
        np.testing.assert_allclose(s.u.T @ s.u, np.eye(s.sigma.size), atol=1e-10)
        np.testing.assert_allclose(s.v.T @ s.v, np.eye(s.sigma.size), atol=1e-10)


def test_pinv_identity():
    np.testing.assert_allclose(pinv(np.eye(3)), np.eye(3))


def test_pinv_diag():
    np.testing.assert_allclose(pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))


def test_pinv_zero_matrix():
    with pytest.raises(ZeroMatrixError):
        pinv(np.zeros((2, 3)))


def test_pinv_rank_deficient_moore_penrose(rng):
    a = low_rank(rng, 5, 3, 2)
    assert moore_penrose_residual(a, pinv(a)) <= Tolerances().equiv_tol


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 50), st.integers(1, 50), st.integers(1, 50), st.integers(0, 2**32 - 1))
def test_pinv_moore_penrose_property(m, n, r, seed):
    rng = np.random.default_rng(seed)
    a = low_rank(rng, m, n, min(r, m, n))
    ap = pinv(a)
    assert moore_penrose_residual(a, ap) <= Tolerances().equiv_tol
    np.testing.assert_allclose(ap, np.linalg.pinv(a, rcond=1e-10), atol=1e-8 * np.abs(ap).max())


@pytest.mark.parametrize("x, eps, want", [(1.2, 0.5, 0.7), (-0.3, 0.5, 0.0), (-1.0, 0.5, -0.5)])
def test_soft_threshold_examples(x, eps, want):
    assert soft_threshold(x, eps) == pytest.approx(want)


@given(finite, st.floats(0, 100))
def test_soft_threshold_odd_and_magnitude(x, eps):
    assert soft_threshold(-x, eps) == -soft_threshold(x, eps)
    assert abs(soft_threshold(x, eps)) == pytest.approx(max(abs(x) - eps, 0.0), abs=1e-12)


def test_soft_threshold_array(rng):
    x = rng.standard_normal((4, 5))
    np.testing.assert_allclose(soft_threshold(x, 0.3), np.sign(x) * np.maximum(np.abs(x) - 0.3, 0))


def test_column_shrink_examples(rng):
    np.testing.assert_allclose(column_shrink(np.array([[2.0], [0.0]]), 0.5), [[1.5], [0.0]])
    np.testing.assert_allclose(column_shrink(np.array([[0.3], [0.0]]), 0.5), [[0.0], [0.0]])
    x = rng.standard_normal((4, 3))
    np.testing.assert_array_equal(column_shrink(x, 0.0), x)


@given(arrays(np.float64, (5, 4), elements=finite), st.floats(0, 50))
def test_column_shrink_never_grows_columns(x, eps):
    y = column_shrink(x, eps)
    assert np.all(np.linalg.norm(y, axis=0) <= np.linalg.norm(x, axis=0) * (1 + 1e-12))
    # surviving columns keep their direction
    for j in range(x.shape[1]):
        if np.linalg.norm(y[:, j]) > 0:
            assert np.linalg.norm(x[:, j]) > eps


def test_objective_relaxed_fnr_zero_c():
    spec = ObjectiveSpec("frobenius", "relaxed", "none", gamma=1.0)
    assert objective_value(spec, np.eye(2), np.zeros((2, 2))) == pytest.approx(1.0)


def test_objective_exact_nnr_identity():
    spec = ObjectiveSpec("nuclear", "exact", "none")
    assert objective_value(spec, np.eye(3), np.eye(3)) == pytest.approx(3.0)


def test_objective_exact_gaussian_hand_summed(rng):
    d = rng.standard_normal((7, 6))
    rep = cf.exact_gaussian(d, 2.0, "frobenius")
    hand = 0.5 * np.sum(rep.c ** 2) + 1.0 * np.sum(rep.e ** 2)
    assert rep.objective == pytest.approx(hand, rel=1e-12)
    assert objective_value(rep.spec, d, rep.c, rep.d0, rep.e) == pytest.approx(hand, rel=1e-12)


def test_objective_shape_mismatch():
    spec = ObjectiveSpec("frobenius", "exact", "none")
    with pytest.raises(ShapeError):
        objective_value(spec, np.eye(3), np.eye(2))


def test_objective_noise_terms(rng):
    d = rng.standard_normal((4, 4))
    e = rng.standard_normal((4, 4))
    c = np.eye(4)
    lap = ObjectiveSpec("frobenius", "exact", "laplacian", lam=0.5)
    l21 = ObjectiveSpec("nuclear", "exact", "l21", lam=0.5)
    assert objective_value(lap, d, c, d - e, e) == pytest.approx(2.0 + 0.5 * np.abs(e).sum())
    assert objective_value(l21, d, c, d - e, e) == pytest.approx(
        4.0 + 0.5 * np.linalg.norm(e, axis=0).sum())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["frobenius", "nuclear"]))
def test_objective_gauge_invariance(seed, norm):
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((6, 5))
    u, s, vt = np.linalg.svd(d, full_matrices=False)
    flip = rng.choice([-1.0, 1.0], s.size)
    specs = [ObjectiveSpec(norm, "relaxed", "gaussian", lam=1.3, gamma=2.0),
             ObjectiveSpec(norm, "exact", "gaussian", lam=1.3)]
    for spec in specs:
        k = 3
        vals = []
        for f in (np.ones(s.size), flip):
            uu, vv = u * f, vt.T * f
            d0 = (uu[:, :k] * s[:k]) @ vv[:, :k].T
            c = vv[:, :k] @ np.diag(np.linspace(0.9, 0.2, k)) @ vv[:, :k].T
            vals.append(objective_value(spec, d, c, d0))
        assert vals[0] == pytest.approx(vals[1], rel=1e-12)


def test_nuclear_norm(rng):
    a = rng.standard_normal((4, 3))
    assert nuclear_norm(a) == pytest.approx(np.linalg.svd(a, compute_uv=False).sum())
