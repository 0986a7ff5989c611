import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from l1spectral.bpsolver import (
    BasisPursuitProblem, Status, lp_oracle, penalized_optimality, solve_bp, solve_bp_penalized,
)
from l1spectral.cluster import anchored_problem
from l1spectral.graphmodel import BlockSpec, generate_ideal


def random_problem(rng):
    m = int(rng.integers(1, 6))
    d = int(rng.integers(m, 16))
    W = rng.normal(size=(m, d))
    # right-hand side in the range of W so the problem is feasible
    w = -W @ rng.normal(size=d)
    return BasisPursuitProblem(W, w)


def test_single_constraint_grid_oracle():
    prob = BasisPursuitProblem([[1.0, 2.0]], [-2.0])
    rep = solve_bp(prob)
    assert rep.status is Status.OPTIMAL
    np.testing.assert_allclose(rep.solution, [0.0, 1.0], atol=1e-7)
    assert rep.objective == pytest.approx(1.0, abs=1e-8)
    # brute force along the feasible line v = (2 - 2t, t)
    t = np.linspace(-3, 3, 600_001)
    grid = np.abs(2 - 2 * t) + np.abs(t)
    assert grid.min() == pytest.approx(rep.objective, abs=1e-5)


def test_identity_constraint():
    w = np.array([1.0, -2.0, 0.5])
    rep = solve_bp(np.eye(3), w)
    np.testing.assert_allclose(rep.solution, -w, atol=1e-8)
    assert rep.objective == pytest.approx(3.5, abs=1e-8)


def test_zero_right_hand_side():
    rep = solve_bp([[1.0, -1.0]], [0.0])
    assert rep.ok
    np.testing.assert_allclose(rep.solution, 0.0, atol=1e-9)
    assert lp_oracle([[1.0, -1.0]], [0.0]).objective == 0.0


def test_infeasible():
    W, w = [[1.0, 1.0], [1.0, 1.0]], [-1.0, -2.0]
    assert solve_bp(W, w).status is Status.INFEASIBLE
    assert lp_oracle(W, w).status is Status.INFEASIBLE


def test_problem_validation():
    with pytest.raises(ValueError):
        BasisPursuitProblem(np.ones((2, 3)), np.ones(3))
    with pytest.raises(ValueError):
        BasisPursuitProblem([[np.nan, 1.0]], [1.0])
    with pytest.raises(ValueError):
        solve_bp(np.eye(2), np.ones(2), feas_tol=0.0)


@pytest.mark.parametrize("sizes", [(2, 3), (3, 3, 4), (2, 5, 6), (4, 4, 4, 7)])
def test_ideal_model_anchor_objective(sizes):
    # anchoring in the smallest block isolates it: objective c_min - 1
    spec = BlockSpec(sizes)
    a = generate_ideal(spec).astype(float)
    prob = anchored_problem(a, spec.n - spec.k, 0)
    rep = solve_bp(prob)
    assert rep.ok
    assert rep.objective == pytest.approx(sizes[0] - 1, abs=1e-7)
    full = np.insert(rep.solution, 0, 1.0)
    np.testing.assert_allclose(full, spec.indicators()[:, 0], atol=1e-7)
    assert lp_oracle(prob).objective == pytest.approx(sizes[0] - 1, abs=1e-8)


@pytest.mark.parametrize("W,w", [
    ([[1.0, 2.0]], [-2.0]),
    (np.eye(3), [1.0, -2.0, 0.5]),
    ([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]], [-1.0, -1.0]),
    ([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]], [-1.0, -2.0]),
])
def test_oracle_agrees_on_examples(W, w):
    ipm, simplex = solve_bp(W, w), lp_oracle(W, w)
    assert ipm.ok and simplex.ok
    assert ipm.objective == pytest.approx(simplex.objective, rel=1e-8, abs=1e-8)


def test_oracle_vertex_search():
    # small enough to enumerate every basic solution
    W = np.array([[1.0, 2.0, -1.0, 0.5], [0.0, 1.0, 1.0, -2.0]])
    w = np.array([-1.0, 0.5])
    best = np.inf
    for cols in itertools.combinations(range(4), 2):
        sub = W[:, cols]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        best = min(best, np.abs(np.linalg.solve(sub, -w)).sum())
    assert lp_oracle(W, w).objective == pytest.approx(best, abs=1e-10)
    assert solve_bp(W, w).objective == pytest.approx(best, abs=1e-7)


def test_random_problems_match_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        prob = random_problem(rng)
        ipm, simplex = solve_bp(prob), lp_oracle(prob)
        assert ipm.ok and simplex.ok
        assert abs(ipm.objective - simplex.objective) <= 1e-6 * max(1.0, simplex.objective)
        assert ipm.constraint_residual <= 1e-8 * (1 + np.linalg.norm(prob.w))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_scaling_invariance(seed, scale):
    prob = random_problem(np.random.default_rng(seed))
    base = solve_bp(prob)
    scaled = solve_bp(prob.W * scale, prob.w * scale)
    assert base.ok and scaled.ok
    assert scaled.objective == pytest.approx(base.objective, rel=1e-6, abs=1e-8)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_solution_is_feasible(seed):
    prob = random_problem(np.random.default_rng(seed))
    rep = solve_bp(prob)
    assert rep.ok
    assert prob.residual(rep.solution) <= 1e-8 * (1 + np.linalg.norm(prob.w))
    assert rep.objective == pytest.approx(np.abs(rep.solution).sum())


def test_iteration_cap_status():
    prob = random_problem(np.random.default_rng(1))
    rep = solve_bp(prob, max_iter=1)
    assert rep.status is Status.ITERATION_CAP
    assert not rep.ok


def test_penalized_large_lambda_is_zero():
    W = np.array([[1.0, 2.0], [0.5, -1.0]])
    w = np.array([1.0, 1.0])
    lam = 2 * np.abs(W.T @ w).max() + 1.0
    rep = solve_bp_penalized(W, w, lam)
    np.testing.assert_allclose(rep.solution, 0.0)


def test_penalized_closed_form():
    # minimize (v0 - 1)^2 + v1^2 + v2^2 + 0.2 |v|_1: soft threshold at 0.1
    rep = solve_bp_penalized(np.eye(3), [-1.0, 0.0, 0.0], 0.2)
    assert rep.ok
    np.testing.assert_allclose(rep.solution, [0.9, 0.0, 0.0], atol=1e-10)
    assert rep.objective == pytest.approx(0.9)
    with pytest.raises(ValueError):
        solve_bp_penalized(np.eye(3), [-1.0, 0.0, 0.0], 0.0)


def test_penalized_path_approaches_basis_pursuit():
    rng = np.random.default_rng(7)
    prob = random_problem(rng)
    bp = solve_bp(prob).objective
    norms = []
    for lam in (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-6):
        rep = solve_bp_penalized(prob.W, prob.w, lam)
        assert rep.ok
        assert penalized_optimality(prob.W, prob.w, lam, rep.solution) <= 1e-8
        norms.append(rep.objective)
    assert all(b >= a - 1e-9 for a, b in zip(norms, norms[1:]))
    assert norms[-1] == pytest.approx(bp, abs=1e-3)
