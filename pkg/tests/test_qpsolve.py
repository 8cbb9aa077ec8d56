import numpy as np
import pytest

from monospline import QpProblem, ValidationError, solve
from oracles import brute_force_qp, kkt_enumeration_qp


def make_qp(p, q, a=None, b=None, e=None, d=None):
    n = len(q)
    return QpProblem(
        np.asarray(p, float), np.asarray(q, float),
        np.asarray(a, float).reshape(-1, n) if a is not None else np.zeros((0, n)),
        np.asarray(b, float) if b is not None else np.zeros(0),
        np.asarray(e, float).reshape(-1, n) if e is not None else np.zeros((0, n)),
        np.asarray(d, float) if d is not None else np.zeros(0),
    )


def test_unconstrained_quadratic():
    sol = solve(make_qp(np.eye(2), [-1.0, 0.0]))
    assert sol.status == "optimal"
    assert np.allclose(sol.theta, [1.0, 0.0], atol=1e-8)
    assert sol.objective == pytest.approx(-0.5, abs=1e-8)


def test_halfspace_projection():
    # min ||theta||^2 / 2 s.t. theta_1 <= -1
    sol = solve(make_qp(np.eye(2), [0.0, 0.0], a=[[1.0, 0.0]], b=[-1.0]))
    assert sol.status == "optimal"
    assert np.allclose(sol.theta, [-1.0, 0.0], atol=1e-7)


def test_triangle_qp_against_brute_force():
    p = [[2.0, 0.0], [0.0, 2.0]]
    q = [-2.0, -5.0]
    a = [[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
    b = [1.0, 0.0, 0.0]
    sol = solve(make_qp(p, q, a=a, b=b))
    assert sol.status == "optimal"
    assert np.allclose(sol.theta, [0.0, 1.0], atol=1e-7)
    assert sol.objective == pytest.approx(-4.0, abs=1e-7)
    _, f_ref = brute_force_qp(p, q, a, b, [(-0.5, 1.5), (-0.5, 1.5)])
    assert sol.objective == pytest.approx(f_ref, abs=1e-5)


def test_equality_only_projection():
    sol = solve(make_qp(np.eye(2), [0.0, 0.0], e=[[1.0, 1.0]], d=[2.0]))
    assert sol.status == "optimal"
    assert np.allclose(sol.theta, [1.0, 1.0], atol=1e-9)


def test_rejects_indefinite_p():
    with pytest.raises(ValidationError):
        solve(make_qp([[1.0, 0.0], [0.0, -1.0]], [0.0, 0.0]))


def test_infeasible_inequalities_detected():
    # theta_1 <= -1 and -theta_1 <= -1 cannot both hold
    sol = solve(make_qp(np.eye(2), [0.0, 0.0],
                        a=[[1.0, 0.0], [-1.0, 0.0]], b=[-1.0, -1.0]))
    assert sol.status in ("infeasible", "max_iter")
    assert sol.status != "optimal"


def test_inconsistent_equalities_detected():
    sol = solve(make_qp(np.eye(2), [0.0, 0.0],
                        e=[[1.0, 0.0], [1.0, 0.0]], d=[0.0, 1.0]))
    assert sol.status == "infeasible"


def test_optimal_iterate_is_feasible():
    rng = np.random.default_rng(8)
    for _ in range(10):
        n = int(rng.integers(2, 8))
        m = rng.standard_normal((n, n))
        p = m.T @ m + 0.1 * np.eye(n)
        q = rng.standard_normal(n)
        a = rng.standard_normal((2 * n, n))
        b = a @ rng.uniform(-1, 1, n) + rng.uniform(0.1, 1.0, 2 * n)
        sol = solve(make_qp(p, q, a=a, b=b))
        assert sol.status == "optimal"
        tol = 1e-8 * (1.0 + np.abs(b).max())
        assert np.all(a @ sol.theta <= b + 10 * tol)


def test_row_permutation_invariance():
    rng = np.random.default_rng(9)
    n = 5
    m = rng.standard_normal((n, n))
    p = m.T @ m + 0.5 * np.eye(n)
    q = rng.standard_normal(n)
    a = rng.standard_normal((12, n))
    b = a @ rng.uniform(-1, 1, n) + rng.uniform(0.1, 1.0, 12)
    sol1 = solve(make_qp(p, q, a=a, b=b))
    perm = rng.permutation(12)
    sol2 = solve(make_qp(p, q, a=a[perm], b=b[perm]))
    assert sol1.status == sol2.status == "optimal"
    assert np.allclose(sol1.theta, sol2.theta, atol=1e-7)


def test_redundant_constraint_invariance():
    p = np.diag([2.0, 4.0])
    q = np.array([-1.0, -2.0])
    a = np.array([[1.0, 0.0], [0.0, 1.0]])
    b = np.array([0.3, 0.4])
    sol1 = solve(make_qp(p, q, a=a, b=b))
    # row implied by the first one
    a2 = np.vstack([a, [2.0, 0.0]])
    b2 = np.append(b, 0.8)
    sol2 = solve(make_qp(p, q, a=a2, b=b2))
    assert np.allclose(sol1.theta, sol2.theta, atol=1e-7)


def test_better_than_sampled_feasible_points():
    rng = np.random.default_rng(10)
    n = 3
    m = rng.standard_normal((n, n))
    p = m.T @ m + 0.2 * np.eye(n)
    q = rng.standard_normal(n)
    a = np.vstack([np.eye(n), -np.eye(n)])
    b = np.full(2 * n, 1.5)
    sol = solve(make_qp(p, q, a=a, b=b))
    assert sol.status == "optimal"
    for _ in range(100):
        x = rng.uniform(-1.5, 1.5, n)
        f = 0.5 * x @ p @ x + q @ x
        assert sol.objective <= f + 1e-8


def test_small_instances_match_enumeration_oracle():
    rng = np.random.default_rng(17)
    for _ in range(20):
        n = int(rng.integers(2, 4))
        m = rng.standard_normal((n, n))
        p = m.T @ m + 0.1 * np.eye(n)
        q = rng.standard_normal(n)
        rows = int(rng.integers(1, 7))
        a = rng.standard_normal((rows, n))
        b = a @ rng.uniform(-1, 1, n) + rng.uniform(0.1, 2.0, rows)
        sol = solve(make_qp(p, q, a=a, b=b))
        _, f_ref = kkt_enumeration_qp(p, q, a, b)
        assert sol.status == "optimal"
        assert abs(sol.objective - f_ref) <= 1e-6 * (1.0 + abs(f_ref))


def test_singular_psd_p_terminates(example_fit):
    # the initial-state block of the cost can be rank deficient; the shared
    # example exercises exactly that and must still come back optimal
    assert example_fit.solver.status == "optimal"
    assert example_fit.solver.kkt_residuals.max() <= 1e-8


def test_residuals_reported():
    sol = solve(make_qp(np.eye(2), [-1.0, 0.0]))
    r = sol.kkt_residuals
    for val in (r.stationarity, r.primal, r.dual, r.complementarity):
        assert np.isfinite(val) and val >= 0.0
    assert r.max() == max(r.stationarity, r.primal, r.dual, r.complementarity)
