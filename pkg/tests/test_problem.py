import numpy as np
import pytest

from monospline import (
    DataSet,
    GridPlan,
    GridSizeError,
    QpProblem,
    StateSpace,
    ValidationError,
    add_equality,
    assemble_constraints,
    assemble_cost,
    build_constraint_vector,
    build_kernel_table,
    estimate_lipschitz,
    plan_grid,
    qp_from_json,
    qp_to_json,
    solve,
)
from monospline.fixture import fixture_dataset, fixture_system
from oracles import quad_cost_j


def unit_double_int():
    return StateSpace(np.array([[0.0, 1.0], [0.0, 0.0]]),
                      np.array([0.0, 1.0]), np.array([1.0, 0.0]), 1.0)


def test_dataset_validation():
    ok = DataSet(np.array([1.0, 2.0]), np.array([0.0, 1.0]), np.ones(2), 0.5)
    assert ok.m == 2 and ok.horizon == 2.0
    with pytest.raises(ValidationError):
        DataSet(np.array([0.0, 2.0]), np.zeros(2), np.ones(2), 0.5)
    with pytest.raises(ValidationError):
        DataSet(np.array([2.0, 1.0]), np.zeros(2), np.ones(2), 0.5)
    with pytest.raises(ValidationError):
        DataSet(np.array([1.0, 2.0]), np.zeros(2), np.array([1.0, 0.0]), 0.5)
    with pytest.raises(ValidationError):
        DataSet(np.array([1.0, 2.0]), np.zeros(2), np.ones(2), 0.0)
    with pytest.raises(ValidationError):
        DataSet(np.array([]), np.array([]), np.array([]), 1.0)


def test_dataset_scalar_weight_broadcast():
    d = DataSet(np.array([1.0, 2.0, 3.0]), np.zeros(3), np.array([2.0]), 1.0)
    assert np.array_equal(d.weights, [2.0, 2.0, 2.0])


def test_cost_zero_data_gives_zero_q(double_int):
    table = build_kernel_table(double_int, [1.0, 2.0, 3.0])
    data = DataSet(np.array([1.0, 2.0, 3.0]), np.zeros(3), np.ones(3), 1.0)
    _, q, constant = assemble_cost(table, data)
    assert np.allclose(q, 0.0)
    assert constant == 0.0


def test_cost_single_knot_closed_form():
    sys = unit_double_int()
    table = build_kernel_table(sys, [1.0])
    data = DataSet(np.array([1.0]), np.array([1.0]), np.ones(1), 1.0)
    p, q, constant = assemble_cost(table, data)
    want_p = np.array([
        [2.0 * (1.0 / 3.0 + 1.0 / 9.0), 2.0 / 3.0, 2.0 / 3.0],
        [2.0 / 3.0, 2.0, 2.0],
        [2.0 / 3.0, 2.0, 2.0],
    ])
    assert np.allclose(p, want_p, atol=1e-12)
    assert np.allclose(q, -2.0 * np.array([1.0 / 3.0, 1.0, 1.0]), atol=1e-12)
    assert constant == 1.0


def test_cost_block_identity(example_fit):
    table, data = example_fit.table, example_fit.data
    p, _, _ = assemble_cost(table, data)
    g, f = table.gram, table.output_map
    gf = np.hstack([g, f])
    blockdiag = np.zeros_like(p)
    blockdiag[: table.m, : table.m] = g
    want = 2.0 * data.lam * blockdiag + 2.0 * gf.T @ (data.weights[:, None] * gf)
    assert np.allclose(p, want, rtol=1e-12, atol=1e-12)


def test_cost_rejects_time_mismatch(double_int):
    table = build_kernel_table(double_int, [1.0, 3.0])
    data = DataSet(np.array([1.0, 2.0]), np.zeros(2), np.ones(2), 1.0)
    with pytest.raises(ValidationError):
        assemble_cost(table, data)


def test_cost_matches_direct_quadrature(double_int):
    table = build_kernel_table(double_int, [1.0, 2.0, 3.0])
    data = DataSet(np.array([1.0, 2.0, 3.0]), np.array([0.2, 0.8, 1.1]),
                   np.array([1.0, 2.0, 0.5]), 0.7)
    p, q, constant = assemble_cost(table, data)
    rng = np.random.default_rng(21)
    for _ in range(3):
        theta = rng.uniform(-1.0, 1.0, 5)
        f_val = 0.5 * theta @ p @ theta + q @ theta + constant
        j_val = quad_cost_j(double_int, data, theta)
        assert f_val == pytest.approx(j_val, rel=1e-6)


def test_lipschitz_estimate_bounded():
    sys = unit_double_int()
    table = build_kernel_table(sys, [1.0])
    est = estimate_lipschitz(sys, table, 1000)
    assert 0.0 < est.mu <= 3.0
    assert not est.degenerate
    assert not est.cb_warning


def test_lipschitz_probe_self_consistency():
    sys = fixture_system()
    table = build_kernel_table(sys, fixture_dataset().times)
    mu_512 = estimate_lipschitz(sys, table, 512).mu
    mu_1024 = estimate_lipschitz(sys, table, 1024).mu
    assert abs(mu_1024 - mu_512) / mu_512 < 0.05


def test_lipschitz_rejects_few_probes(double_int):
    table = build_kernel_table(double_int, [3.0])
    with pytest.raises(ValidationError):
        estimate_lipschitz(double_int, table, 99)


def test_plan_grid_formula():
    plan = plan_grid(7.0, 0.01, 10.0, 1.0)
    assert plan.intervals == 7000
    assert plan.i_max <= 0.001 * (1 + 1e-12)
    assert plan.grid[0] == 0.0 and plan.grid[-1] == 7.0


def test_plan_grid_single_interval():
    plan = plan_grid(1.0, 5.0, 1.0, 2.0)  # epsilon >= r mu
    assert plan.intervals == 1


def test_plan_grid_halving_epsilon_doubles_m():
    m1 = plan_grid(3.0, 0.02, 2.0, 1.5).intervals
    m2 = plan_grid(3.0, 0.01, 2.0, 1.5).intervals
    assert m2 == 2 * m1


def test_plan_grid_cap():
    with pytest.raises(GridSizeError):
        plan_grid(7.0, 1e-9, 10.0, 10.0, cap=10**6)


def test_plan_grid_rejects_bad_inputs():
    with pytest.raises(ValidationError):
        plan_grid(1.0, 0.0, 1.0, 1.0)
    with pytest.raises(ValidationError):
        plan_grid(1.0, 0.1, -1.0, 1.0)


def test_grid_plan_certificate_enforced():
    with pytest.raises(ValidationError):
        GridPlan(0.001, 10.0, 10.0, np.array([0.0, 1.0]), 1)


def test_assemble_constraints_dimensions():
    sys = unit_double_int()
    table = build_kernel_table(sys, [1.0])
    # degenerate single-point grid: 1 + 2(m+n) rows
    plan = GridPlan(1.0, 0.5, 1.0, np.array([0.0]), 0)
    h, v = assemble_constraints(table, sys, plan)
    assert h.shape == (1 + 2 * 3, 3)
    assert v.size == h.shape[0]


def test_assemble_constraints_zero_violates_grid_rows():
    sys = unit_double_int()
    table = build_kernel_table(sys, [1.0])
    plan = plan_grid(1.0, 0.1, 1.0, 1.0)
    h, v = assemble_constraints(table, sys, plan)
    n_grid = plan.grid.size
    assert np.all(h[:n_grid] @ np.zeros(3) > v[:n_grid])


def test_assemble_constraints_rows_are_negated_derivative_rows(double_int):
    table = build_kernel_table(double_int, [1.0, 3.0])
    plan = plan_grid(3.0, 0.5, 1.0, 1.0)
    h, v = assemble_constraints(table, double_int, plan)
    for k, t in enumerate(plan.grid):
        assert np.allclose(h[k], -build_constraint_vector(double_int, table, t),
                           atol=1e-12)
        assert v[k] == -plan.epsilon


def test_feasible_point_from_loose_solve_satisfies_constraints(example_fit):
    # the solved parameters of the example satisfy every stacked row
    plan = example_fit.plan
    h, v = assemble_constraints(example_fit.table, example_fit.sys, plan)
    slack = 10.0 * max(example_fit.solver.kkt_residuals.max(), 1e-8)
    assert np.all(h @ example_fit.theta <= v + slack * (1.0 + np.abs(v)))


def _empty_qp(dim):
    return QpProblem(np.eye(dim), np.zeros(dim), np.zeros((0, dim)),
                     np.zeros(0), np.zeros((0, dim)), np.zeros(0))


def test_add_equality_value_at_zero(double_int):
    table = build_kernel_table(double_int, [1.0, 3.0])
    qp = add_equality(_empty_qp(4), table, double_int, "value", 0.0, 0.7)
    assert np.allclose(qp.a_eq[0, :2], 0.0, atol=1e-14)
    assert np.allclose(qp.a_eq[0, 2:], double_int.c, atol=1e-14)
    assert qp.b_eq[0] == 0.7


def test_add_equality_rejects_conflicting_duplicate(double_int):
    table = build_kernel_table(double_int, [1.0, 3.0])
    qp = add_equality(_empty_qp(4), table, double_int, "value", 0.0, 0.7)
    with pytest.raises(ValidationError):
        add_equality(qp, table, double_int, "value", 0.0, 0.9)


def test_add_equality_warns_on_rank_deficiency(double_int):
    table = build_kernel_table(double_int, [1.0, 3.0])
    qp = add_equality(_empty_qp(4), table, double_int, "value", 1.5, 0.7)
    with pytest.warns(UserWarning, match="rank"):
        add_equality(qp, table, double_int, "value", 1.5, 0.7)


def test_add_equality_rejects_bad_kind(double_int):
    table = build_kernel_table(double_int, [1.0, 3.0])
    with pytest.raises(ValidationError):
        add_equality(_empty_qp(4), table, double_int, "slope", 1.0, 0.0)


def test_derivative_equality_holds_after_solve(double_int):
    table = build_kernel_table(double_int, [1.0, 2.0, 3.0])
    data = DataSet(np.array([1.0, 2.0, 3.0]), np.array([0.1, 0.6, 1.0]),
                   np.ones(3), 0.5)
    p, q, constant = assemble_cost(table, data)
    qp = QpProblem(p, q, np.zeros((0, 5)), np.zeros(0),
                   np.zeros((0, 5)), np.zeros(0), constant)
    qp = add_equality(qp, table, double_int, "derivative", 3.0, 0.0)
    sol = solve(qp)
    assert sol.status == "optimal"
    row = build_constraint_vector(double_int, table, 3.0)
    assert abs(row @ sol.theta) <= 1e-8


def test_qp_json_round_trip(double_int):
    table = build_kernel_table(double_int, [1.0, 3.0])
    data = DataSet(np.array([1.0, 3.0]), np.array([0.3, 0.9]), np.ones(2), 1.0)
    p, q, constant = assemble_cost(table, data)
    plan = plan_grid(3.0, 0.5, 1.0, 1.0)
    h, v = assemble_constraints(table, double_int, plan)
    qp = QpProblem(p, q, h, v, np.zeros((0, 4)), np.zeros(0), constant)
    qp = add_equality(qp, table, double_int, "value", 0.0, 0.0)
    back = qp_from_json(qp_to_json(qp))
    for field in ("p", "q", "a_ineq", "b_ineq", "a_eq", "b_eq"):
        assert np.array_equal(getattr(qp, field), getattr(back, field)), field
    assert back.constant == qp.constant


def test_qp_json_field_names(double_int):
    import json

    table = build_kernel_table(double_int, [3.0])
    data = DataSet(np.array([3.0]), np.array([1.0]), np.ones(1), 1.0)
    p, q, constant = assemble_cost(table, data)
    qp = QpProblem(p, q, np.zeros((0, 3)), np.zeros(0),
                   np.zeros((0, 3)), np.zeros(0), constant)
    doc = json.loads(qp_to_json(qp))
    for key in ("p", "q", "a_ineq", "b_ineq", "a_eq", "b_eq", "constant"):
        assert key in doc
