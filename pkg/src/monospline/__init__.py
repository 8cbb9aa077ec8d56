"""Monotone smoothing splines generated by arbitrary SISO LTI systems.

The curve is the output of a linear system driven by an optimized control
input; monotonicity over the whole interval is enforced by discretizing the
derivative constraint on a grid fine enough that grid feasibility certifies
feasibility everywhere.
"""

from .errors import DomainError, GridSizeError, MonosplineError, ValidationError
from .kernel import (
    KernelTable,
    build_constraint_vector,
    build_kernel_table,
    constraint_rows,
    inner_phi_phi,
    inner_phidot_phi,
    phi,
    phi_dot,
)
from .linalg import mat_exp, van_loan_cross, van_loan_gramian
from .problem import (
    DataSet,
    GridPlan,
    MuEstimate,
    QpProblem,
    add_equality,
    assemble_constraints,
    assemble_cost,
    estimate_lipschitz,
    plan_grid,
    qp_from_json,
    qp_to_json,
)
from .qpsolve import KktResiduals, QpSolution, solve
from .spline import (
    SplineSolution,
    VerificationReport,
    evaluate_u,
    evaluate_y,
    evaluate_ydot,
    fit_conventional,
    fit_monotone,
    sample_curve,
    verify,
)
from .system import StateSpace, tf_to_ss

__version__ = "0.1.0"

__all__ = [
    "DataSet",
    "DomainError",
    "GridPlan",
    "GridSizeError",
    "KernelTable",
    "KktResiduals",
    "MonosplineError",
    "MuEstimate",
    "QpProblem",
    "QpSolution",
    "SplineSolution",
    "StateSpace",
    "ValidationError",
    "VerificationReport",
    "add_equality",
    "assemble_constraints",
    "assemble_cost",
    "build_constraint_vector",
    "build_kernel_table",
    "constraint_rows",
    "estimate_lipschitz",
    "evaluate_u",
    "evaluate_y",
    "evaluate_ydot",
    "fit_conventional",
    "fit_monotone",
    "inner_phi_phi",
    "inner_phidot_phi",
    "mat_exp",
    "phi",
    "phi_dot",
    "plan_grid",
    "qp_from_json",
    "qp_to_json",
    "sample_curve",
    "solve",
    "tf_to_ss",
    "van_loan_cross",
    "van_loan_gramian",
    "verify",
]
