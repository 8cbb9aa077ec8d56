"""Finite-dimensional program assembly.

Builds the quadratic cost (P, q, constant), estimates the Lipschitz constant
of the derivative row function, selects a discretization grid whose spacing
satisfies the feasibility certificate I_max <= eps / (r * mu), and stacks the
inequality/equality constraint rows.

Sign convention: constraints are stored as A_ineq theta <= b_ineq with grid
rows -Phi(T_k)' and right-hand sides -eps, i.e. literally ydot(T_k) >= eps.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GridSizeError, ValidationError
from .kernel import KernelTable, build_constraint_vector, constraint_rows, inner_phi_phi
from .linalg import check_finite, mat_exp, symmetrize
from .system import StateSpace

__all__ = [
    "DataSet",
    "GridPlan",
    "QpProblem",
    "MuEstimate",
    "assemble_cost",
    "estimate_lipschitz",
    "plan_grid",
    "assemble_constraints",
    "add_equality",
    "qp_to_json",
    "qp_from_json",
]

MU_SAFETY = 1.5
MU_FLOOR = 1e-12
DEFAULT_GRID_CAP = 10**7


@dataclass(frozen=True)
class DataSet:
    """Noisy observations (t_i, alpha_i) with weights w_i and smoothing weight lam."""

    times: np.ndarray
    values: np.ndarray
    weights: np.ndarray
    lam: float

    def __post_init__(self):
        t = check_finite(self.times, "times").reshape(-1)
        a = check_finite(self.values, "values").reshape(-1)
        w = check_finite(self.weights, "weights").reshape(-1)
        if w.size == 1:
            w = np.full(t.size, w[0])
        if not (t.size == a.size == w.size):
            raise ValidationError("times, values and weights must have equal length")
        if t.size == 0:
            raise ValidationError("data set is empty")
        if t[0] <= 0.0 or np.any(np.diff(t) <= 0.0):
            raise ValidationError("data times must be strictly increasing and positive")
        if np.any(w <= 0.0):
            raise ValidationError("weights must be strictly positive")
        if not self.lam > 0.0:
            raise ValidationError(f"smoothing weight must be positive, got {self.lam}")
        for arr in (t, a, w):
            arr.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", a)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def m(self) -> int:
        return self.times.size

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class MuEstimate:
    """Lipschitz estimate for the derivative row function."""

    mu: float
    degenerate: bool = False
    cb_warning: bool = False


@dataclass(frozen=True)
class GridPlan:
    """Discretization grid with its feasibility-certificate inputs."""

    epsilon: float
    r: float
    mu: float
    grid: np.ndarray
    intervals: int

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        imax = float(np.max(np.diff(g))) if g.size > 1 else 0.0
        bound = self.epsilon / (self.r * self.mu)
        if imax > bound * (1 + 1e-12):
            raise ValidationError(
                f"grid spacing {imax} violates the certificate bound {bound}"
            )
        g.flags.writeable = False
        object.__setattr__(self, "grid", g)

    @property
    def i_max(self) -> float:
        return float(np.max(np.diff(self.grid))) if self.grid.size > 1 else 0.0


@dataclass(frozen=True)
class QpProblem:
    """min 1/2 theta' P theta + q' theta  s.t.  A_ineq theta <= b_ineq, A_eq theta = b_eq."""

    p: np.ndarray
    q: np.ndarray
    a_ineq: np.ndarray
    b_ineq: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    constant: float = 0.0

    @property
    def dim(self) -> int:
        return self.q.size


def assemble_cost(table: KernelTable, data: DataSet):
    """Cost blocks (P, q, constant) so that f(theta) + constant equals the
    smoothing-spline cost of the generated input/output pair.

    P = [[2(lam I + G W) G, 2 G W F], [2 F' W G, 2 F' W F]],
    q = -2 [G F]' W alpha, constant = alpha' W alpha.
    """
    if table.m != data.m or not np.array_equal(table.sample_times, data.times):
        raise ValidationError("kernel table and data set have different sample times")
    g, f = table.gram, table.output_map
    w = data.weights
    lam = data.lam
    gf = np.hstack([g, f])  # m x (m+n)
    p = 2.0 * lam * np.block(
        [[g, np.zeros((table.m, f.shape[1]))],
         [np.zeros((f.shape[1], table.m)), np.zeros((f.shape[1], f.shape[1]))]]
    ) + 2.0 * gf.T @ (w[:, None] * gf)
    p = symmetrize(p)
    q = -2.0 * gf.T @ (w * data.values)
    constant = float(data.values @ (w * data.values))
    return p, q, constant


def estimate_lipschitz(sys: StateSpace, table: KernelTable, probe_points=1000) -> MuEstimate:
    """Finite-difference estimate of mu with a 1.5x safety factor.

    Probes the 1-norm slope of the derivative row function on a uniform grid;
    the true constant is assumed to exist (relative degree >= 2).
    """
    if probe_points < 100:
        raise ValidationError("probe_points must be at least 100")
    cb_warning = not sys.relative_degree_at_least_two
    if cb_warning:
        warnings.warn(
            "C B != 0: the derivative row function may not be Lipschitz; "
            "the estimate is a probe-grid heuristic only.",
            stacklevel=2,
        )
    ts = np.linspace(0.0, sys.horizon, probe_points + 1)
    rows = constraint_rows(sys, table, ts)
    slopes = np.abs(np.diff(rows, axis=0)).sum(axis=1) / np.diff(ts)
    raw = float(slopes.max())
    if raw < MU_FLOOR:
        return MuEstimate(MU_FLOOR, degenerate=True, cb_warning=cb_warning)
    return MuEstimate(MU_SAFETY * raw, cb_warning=cb_warning)


def plan_grid(horizon, epsilon, r, mu, cap=DEFAULT_GRID_CAP) -> GridPlan:
    """Uniform grid with the minimal interval count satisfying the certificate.

    M = ceil(T r mu / eps); uniform spacing minimizes M for a given bound.
    """
    if epsilon <= 0 or r <= 0 or mu <= 0:
        raise ValidationError("epsilon, r and mu must all be positive")
    m_intervals = max(1, math.ceil(horizon * r * mu / epsilon))
    if m_intervals > cap:
        raise GridSizeError(
            f"certified grid needs M={m_intervals} intervals (cap {cap}); "
            "increase epsilon or decrease r"
        )
    grid = np.linspace(0.0, horizon, m_intervals + 1)
    return GridPlan(float(epsilon), float(r), float(mu), grid, m_intervals)


def assemble_constraints(table: KernelTable, sys: StateSpace, plan: GridPlan):
    """Inequality stack: grid rows ydot(T_k) >= eps plus the box |theta|_inf <= r.

    Returns (a_ineq, b_ineq) in the <=-convention.
    """
    if plan.grid[0] < 0.0 or plan.grid[-1] > sys.horizon:
        raise ValidationError("grid extends outside the horizon")
    dim = table.m + sys.n
    n_grid = plan.grid.size
    # fill in place: tall grids would double peak memory under vstack
    a = np.empty((n_grid + 2 * dim, dim))
    constraint_rows(sys, table, plan.grid, out=a[:n_grid])
    np.negative(a[:n_grid], out=a[:n_grid])
    a[n_grid:n_grid + dim] = np.eye(dim)
    a[n_grid + dim:] = -np.eye(dim)
    b = np.concatenate(
        [np.full(n_grid, -plan.epsilon), np.full(2 * dim, plan.r)]
    )
    return a, b


def add_equality(qp: QpProblem, table: KernelTable, sys: StateSpace,
                 kind: str, t, target) -> QpProblem:
    """Append an output-value or derivative equality at time t.

    value: [<phi_t, phi_{t_1}>, ..., <phi_t, phi_{t_m}>, C exp(A t)] theta = target
    derivative: Phi(t)' theta = target
    """
    t = sys.check_time(t, "t")
    if kind == "value":
        row = np.empty(qp.dim)
        for i, ti in enumerate(table.sample_times):
            row[i] = inner_phi_phi(sys, t, ti)
        row[table.m:] = sys.c @ mat_exp(sys.a * t)
    elif kind == "derivative":
        row = build_constraint_vector(sys, table, t)
    else:
        raise ValidationError(f"equality kind must be 'value' or 'derivative', got {kind!r}")

    a_eq = np.vstack([qp.a_eq, row]) if qp.a_eq.size else row[None, :]
    b_eq = np.append(qp.b_eq, float(target))
    # duplicate rows with conflicting targets are a modelling error
    for i in range(a_eq.shape[0] - 1):
        if np.allclose(a_eq[i], row, rtol=1e-12, atol=1e-12) and not np.isclose(
            b_eq[i], target, rtol=1e-9, atol=1e-12
        ):
            raise ValidationError(
                f"equality row at t={t} duplicates row {i} with a different target"
            )
    if a_eq.shape[0] > 1 and np.linalg.matrix_rank(a_eq) < a_eq.shape[0]:
        warnings.warn("equality rows are rank deficient", stacklevel=2)
    return replace(qp, a_eq=a_eq, b_eq=b_eq)


def qp_to_json(qp: QpProblem) -> str:
    """Serialize to the documented JSON layout.

    Inequalities are stored in the <=-convention (grid rows -Phi', rhs -eps);
    the note records the mapping to derivative lower bounds.
    """
    doc = {
        "schema": 1,
        "note": (
            "a_ineq theta <= b_ineq; grid rows are -Phi(T_k)' with rhs -eps, "
            "i.e. ydot(T_k) >= eps"
        ),
        "p": qp.p.tolist(),
        "q": qp.q.tolist(),
        "a_ineq": qp.a_ineq.tolist(),
        "b_ineq": qp.b_ineq.tolist(),
        "a_eq": qp.a_eq.tolist(),
        "b_eq": qp.b_eq.tolist(),
        "constant": qp.constant,
    }
    return json.dumps(doc, indent=1)


def qp_from_json(text: str) -> QpProblem:
    doc = json.loads(text)
    dim = len(doc["q"])
    def arr(key, width):
        a = np.asarray(doc[key], dtype=float)
        return a.reshape(-1, width) if a.size else np.zeros((0, width))
    return QpProblem(
        p=np.asarray(doc["p"], dtype=float),
        q=np.asarray(doc["q"], dtype=float),
        a_ineq=arr("a_ineq", dim),
        b_ineq=np.asarray(doc["b_ineq"], dtype=float),
        a_eq=arr("a_eq", dim),
        b_eq=np.asarray(doc["b_eq"], dtype=float),
        constant=float(doc.get("constant", 0.0)),
    )
