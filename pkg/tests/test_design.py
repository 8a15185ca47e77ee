import math
import time

import numpy as np
import pytest

from popart.design import (ActionSet, CovMatrix, Design, compatibility_constant,
                           h_squared, population_covariance, solve_c_min,
                           solve_h_star)
from popart.instances import (canonical_basis_actions, hard_instance_actions,
                              hard_instance_c_min_bracket,
                              hard_instance_h_design, hard_instance_h_sq)

from oracles import c_min_of_weights, compatibility_multistart, h_sq_of_weights


def _random_spanning_set(d, k, seed):
    rng = np.random.default_rng(seed)
    while True:
        arms = rng.standard_normal((k, d))
        if np.linalg.matrix_rank(arms) == d:
            return ActionSet(arms=arms)


# ---------------------------------------------------------------------------
# covariance assembly
# ---------------------------------------------------------------------------


def test_population_covariance_orthonormal():
    cov = population_covariance(canonical_basis_actions(3),
                                Design(weights=np.full(3, 1 / 3)))
    np.testing.assert_allclose(cov.q, np.eye(3) / 3, atol=1e-15)


def test_population_covariance_determinant_closed_form():
    # with the closed-form weights on the two-block set the determinant is
    # a * prod(b_i) / d^d
    d = 10
    aset = hard_instance_actions(d)
    design = hard_instance_h_design(d)
    a, b = design.weights[0], design.weights[1]
    cov = population_covariance(aset, design)
    expected = a * b ** (d - 1) / d ** d
    assert np.linalg.det(cov.q) == pytest.approx(expected, rel=1e-9)


def test_population_covariance_degenerate_rejected():
    aset = canonical_basis_actions(3)
    w = np.zeros(3)
    w[0] = 1.0
    with pytest.raises(ValueError):
        population_covariance(aset, Design(weights=w))


def test_design_validation():
    with pytest.raises(ValueError):
        Design(weights=np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        Design(weights=np.array([1.5, -0.5]))


# ---------------------------------------------------------------------------
# criteria on fixed covariances
# ---------------------------------------------------------------------------


def test_h_squared_identity():
    assert h_squared(CovMatrix.from_q(np.eye(4))) == pytest.approx(1.0, rel=1e-12)


def test_h_squared_diagonal():
    cov = CovMatrix.from_q(np.diag([0.5, 0.25]))
    assert h_squared(cov) == pytest.approx(4.0, rel=1e-12)


def test_h_squared_closed_form_weights():
    # the closed-form weights attain d (sqrt(d) + sqrt(d-1))^2
    d = 10
    aset = hard_instance_actions(d)
    cov = population_covariance(aset, hard_instance_h_design(d))
    assert h_squared(cov) == pytest.approx(hard_instance_h_sq(d), rel=1e-9)
    assert hard_instance_h_sq(10) == pytest.approx(379.73665961010283, rel=1e-14)


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("d", [3, 5, 10])
def test_solve_h_star_basis_exact(d):
    sol = solve_h_star(canonical_basis_actions(d))
    assert abs(sol.objective - d) / d <= 1e-6


@pytest.mark.parametrize("d", [3, 5, 10])
def test_solve_c_min_basis_exact(d):
    sol = solve_c_min(canonical_basis_actions(d))
    assert abs(sol.objective - 1 / d) * d <= 1e-6


def test_solve_h_star_hard_instance(hard10, h_sol10):
    target = hard_instance_h_sq(10)
    assert abs(h_sol10.objective - target) / target <= 0.02
    # the reported objective must be attained by the reported weights
    assert h_sq_of_weights(hard10.arms, h_sol10.design.weights) == \
        pytest.approx(h_sol10.objective, rel=1e-9)


def test_solve_h_star_runtime(hard10):
    t0 = time.perf_counter()
    solve_h_star(hard10)
    assert time.perf_counter() - t0 < 10.0


def test_solve_c_min_hard_instance_bracket(hard10, c_sol10):
    lo, hi = hard_instance_c_min_bracket(10)
    inv = 1.0 / c_sol10.objective
    assert lo <= inv <= hi
    assert c_min_of_weights(hard10.arms, c_sol10.design.weights) == \
        pytest.approx(c_sol10.objective, rel=1e-9)


def test_solve_h_star_duplication_invariant():
    aset = _random_spanning_set(4, 9, 2)
    doubled = ActionSet(arms=np.vstack([aset.arms, aset.arms]))
    a = solve_h_star(aset).objective
    b = solve_h_star(doubled).objective
    assert b == pytest.approx(a, rel=1e-6)


def test_solve_c_min_permutation_invariant():
    aset = _random_spanning_set(5, 12, 3)
    perm = np.random.default_rng(0).permutation(5)
    permuted = ActionSet(arms=aset.arms[:, perm])
    a = solve_c_min(aset).objective
    b = solve_c_min(permuted).objective
    assert b == pytest.approx(a, rel=1e-6)


def test_solvers_reject_non_spanning():
    arms = np.zeros((3, 3))
    arms[:, 0] = [1.0, 2.0, 3.0]
    with pytest.raises(ValueError):
        solve_h_star(ActionSet(arms=arms))
    with pytest.raises(ValueError):
        solve_c_min(ActionSet(arms=arms))


def test_prop2_sandwich_random_sets():
    for seed in range(5):
        d = 3 + seed
        aset = _random_spanning_set(d, 3 * d, 100 + seed)
        h_sq = solve_h_star(aset).objective
        c = solve_c_min(aset).objective
        assert h_sq <= (1 + 1e-3) / c
        assert 1.0 / c <= (1 + 1e-3) * d * h_sq


# ---------------------------------------------------------------------------
# compatibility constant
# ---------------------------------------------------------------------------


def test_compatibility_identity():
    assert compatibility_constant(np.eye(6), 2) == pytest.approx(1.0, abs=1e-3)


def test_compatibility_identity_matches_oracle():
    ours = compatibility_constant(np.eye(5), 2)
    ref = compatibility_multistart(np.eye(5), 2, n_starts=15, seed=1)
    assert ours == pytest.approx(ref, abs=5e-3)


def test_compatibility_homogeneous():
    base = compatibility_constant(np.eye(4), 2)
    assert compatibility_constant(3.0 * np.eye(4), 2) == \
        pytest.approx(3.0 * base, rel=1e-6)


def test_compatibility_bounded_by_min_diagonal():
    # phi0^2 <= s * min_i Q_ii for any design on the two-block set
    d, s = 6, 2
    aset = hard_instance_actions(d)
    cov = population_covariance(aset, hard_instance_h_design(d))
    phi_sq = compatibility_constant(cov.q, s)
    assert phi_sq <= s * np.diag(cov.q).min() + 1e-9
