import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from normrep import closed_form as cf
from normrep.errors import ValidationError
from normrep.oracles import (OracleReport, brute_force_k, proximal_nuclear, ridge_form, ridge_solution,
                             stationarity_check, truncation_objectives)
from normrep.problem import ObjectiveSpec, Representation, objective_value


def test_ridge_examples(rng):
    np.testing.assert_allclose(ridge_solution(np.eye(2), 1.0), 0.5 * np.eye(2))
    np.testing.assert_allclose(ridge_solution(np.diag([3.0, 0.0]), 1.0), np.diag([0.9, 0.0]))
    np.testing.assert_allclose(cf.fnr_relaxed(np.diag([3.0, 0.0]), 1.0).c, np.diag([0.9, 0.0]))
    d = rng.standard_normal((5, 5))
    assert np.abs(ridge_solution(d, 2.0) - cf.fnr_relaxed(d, 2.0).c).max() <= 1e-9


def test_ridge_weight_convention(rng):
    d = rng.standard_normal((6, 5))
    # gamma = 1 is the only point where both conventions coincide
    np.testing.assert_allclose(ridge_form(d, 1.0), cf.fnr_relaxed(d, 1.0).c, atol=1e-12)
    np.testing.assert_allclose(ridge_form(d, 4.0), cf.fnr_relaxed(d, 0.25).c, atol=1e-12)
    assert np.abs(ridge_form(d, 4.0) - cf.fnr_relaxed(d, 4.0).c).max() > 1e-3


def test_ridge_rejects_bad_gamma():
    with pytest.raises(ValidationError):
        ridge_solution(np.eye(2), 0.0)
    with pytest.raises(ValidationError):
        ridge_form(np.eye(2), -1.0)


def test_proximal_full_thresholding(rng):
    d = rng.standard_normal((4, 4))
    gamma = 0.5 / np.linalg.norm(d, 2) ** 2  # every sigma below 1/sqrt(gamma)
    c, _ = proximal_nuclear(d, gamma)
    np.testing.assert_array_equal(c, cf.nnr_relaxed(d, gamma).c)
    assert not c.any()


def test_proximal_identity_fixed_point():
    c, steps = proximal_nuclear(np.eye(3), 4.0)
    np.testing.assert_allclose(c, 0.75 * np.eye(3), atol=1e-9)


def test_proximal_random_gap(rng):
    d = rng.standard_normal((6, 6))
    rep = cf.nnr_relaxed(d, 1.5)
    c, steps = proximal_nuclear(d, 1.5)
    assert steps <= 5000
    assert abs(objective_value(rep.spec, d, c) - rep.objective) <= 1e-5


def test_brute_force_examples():
    assert brute_force_k([2, 1, 0.1], 1.0) == 1
    # r = len: no residual term, cost = len
    assert brute_force_k([1.0, 1.0], 1e9) == 2


def test_brute_force_matches_select_k_fuzz():
    rng = np.random.default_rng(7)
    for _ in range(10000):
        p = int(rng.integers(1, 31))
        sigma = np.sort(rng.exponential(1.0, p) ** rng.uniform(0.2, 3))[::-1]
        w = float(10 ** rng.uniform(-3, 3))
        assert cf.select_k(sigma, w) == brute_force_k(sigma, w)


@given(st.lists(st.integers(0, 6), min_size=1, max_size=8), st.sampled_from([0.25, 0.5, 1.0, 2.0]))
def test_brute_force_matches_select_k_on_exact_ties(ints, w):
    # square roots of small integers produce exact cost ties
    sigma = np.sqrt(np.sort(np.array(ints, dtype=float))[::-1])
    assert cf.select_k(sigma, w) == brute_force_k(sigma, w)


def test_truncation_objectives_minimum_at_k(rng):
    d = rng.standard_normal((8, 8))
    rep = cf.exact_gaussian(d, 0.4)
    objs = truncation_objectives(rep.spec, d)
    assert np.argmin(objs) == rep.k
    assert objs[rep.k] == pytest.approx(rep.objective, rel=1e-12)


def test_stationarity_detects_non_stationary(rng):
    d = rng.standard_normal((5, 4))
    spec = ObjectiveSpec("f", "relaxed", "none", gamma=1.0)
    zero = Representation(np.zeros((4, 4)), d, np.zeros_like(d), 0, 0.0, "closed-form", spec)
    rep = stationarity_check(spec, d, zero)
    assert rep.gradient_norm > 1.0
    assert not rep.analytic.passed


def test_stationarity_fd_agreement(rng):
    d = rng.standard_normal((6, 5))
    for norm in ("frobenius", "nuclear"):
        rep = cf.relaxed_gaussian(d, 2.0, 3.0, norm)
        st_ = stationarity_check(rep.spec, d, rep)
        assert st_.finite_difference.max_deviation <= 1e-4
        assert st_.gradient_norm <= 1e-8 * (1 + np.sum(d * d))


def test_stationarity_rejects_exact_rows():
    spec = ObjectiveSpec("f", "exact", "none")
    with pytest.raises(ValidationError):
        stationarity_check(spec, np.eye(2), cf.shape_interaction(np.eye(2)))


def test_oracle_report_row():
    r = OracleReport("ridge", 1e-12, 0.0, 1e-9, True)
    assert r.row().endswith("PASS")
    assert "ridge" in r.row()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 20))
def test_proximal_never_beats_closed_form(seed, gamma):
    d = np.random.default_rng(seed).standard_normal((5, 4))
    rep = cf.nnr_relaxed(d, gamma)
    c, _ = proximal_nuclear(d, gamma, steps=2000)
    assert objective_value(rep.spec, d, c) >= rep.objective - 1e-7
