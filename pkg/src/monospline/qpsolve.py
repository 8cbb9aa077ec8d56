"""Dense convex QP solver.

Primal-dual interior-point method with Mehrotra predictor-corrector for the
inequalities; equality constraints stay in the KKT system.  The inequality
block enters only through the normal-equations matrix A' D A, accumulated in
chunks so memory stays quadratic in the variable count even for very tall
constraint stacks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ValidationError
from .linalg import symmetrize
from .problem import QpProblem

__all__ = ["KktResiduals", "QpSolution", "solve"]

_CHUNK = 65536


@dataclass(frozen=True)
class KktResiduals:
    stationarity: float
    primal: float
    dual: float
    complementarity: float

    def max(self) -> float:
        return max(self.stationarity, self.primal, self.dual, self.complementarity)


@dataclass(frozen=True)
class QpSolution:
    theta: np.ndarray
    objective: float
    status: str  # optimal | infeasible | max_iter | unbounded
    iterations: int
    kkt_residuals: KktResiduals


def _objective(p, q, theta):
    return float(0.5 * theta @ p @ theta + q @ theta)


def _regularize(p):
    """Symmetrize and, when P is (numerically) singular PSD, add a small
    Tikhonov diagonal so KKT factorizations stay stable."""
    p = symmetrize(np.asarray(p, dtype=float))
    tr = float(np.trace(p))
    n = p.shape[0]
    eigmin = float(scipy.linalg.eigvalsh(p, subset_by_index=[0, 0])[0]) if n else 0.0
    if eigmin < -1e-9 * max(tr, 1.0):
        raise ValidationError(f"P is not positive semidefinite (min eig {eigmin})")
    if eigmin < 1e-12 * max(tr, 1.0):
        p = p + (1e-10 * max(tr, 1.0) / max(n, 1)) * np.eye(n)
    return p


def _normal_matrix(a, d):
    """A' diag(d) A accumulated in chunks."""
    n = a.shape[1]
    out = np.zeros((n, n))
    for k in range(0, a.shape[0], _CHUNK):
        blk = a[k:k + _CHUNK]
        out += blk.T @ (d[k:k + _CHUNK, None] * blk)
    return out


def _step_length(x, dx, frac=0.995):
    neg = dx < 0
    if not neg.any():
        return 1.0
    return min(1.0, frac * float(np.min(-x[neg] / dx[neg])))


def _residuals(p, q, a, b, e, d, theta, s, z, y):
    rd = p @ theta + q
    if a.shape[0]:
        rd = rd + a.T @ z
    if e.shape[0]:
        rd = rd + e.T @ y
    st = float(np.abs(rd).max()) / (1.0 + float(np.abs(q).max(initial=0.0)))
    pr = 0.0
    if a.shape[0]:
        viol = a @ theta - b
        pr = max(pr, float(viol.max(initial=0.0)) / (1.0 + float(np.abs(b).max(initial=0.0))))
    if e.shape[0]:
        pr = max(pr, float(np.abs(e @ theta - d).max()) / (1.0 + float(np.abs(d).max(initial=0.0))))
    du = float(max(0.0, -(z.min(initial=0.0))))
    comp = float(abs(s @ z)) / max(1, s.size) if s.size else 0.0
    return KktResiduals(st, pr, du, comp)


def _solve_kkt_direct(p, q, e, d):
    """Equality-constrained (or unconstrained) QP by one KKT factorization."""
    n = p.shape[0]
    me = e.shape[0]
    if me == 0:
        theta, *_ = np.linalg.lstsq(p, -q, rcond=None)
        if np.abs(p @ theta + q).max() > 1e-8 * (1.0 + np.abs(q).max(initial=0.0)):
            res = _residuals(p, q, np.zeros((0, n)), np.zeros(0), e, d,
                             theta, np.zeros(0), np.zeros(0), np.zeros(0))
            return QpSolution(theta, _objective(p, q, theta), "unbounded", 0, res)
        y = np.zeros(0)
    else:
        kkt = np.block([[p, e.T], [e, np.zeros((me, me))]])
        rhs = np.concatenate([-q, d])
        try:
            sol = scipy.linalg.solve(kkt, rhs)
        except scipy.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
        theta, y = sol[:n], sol[n:]
        if np.abs(e @ theta - d).max(initial=0.0) > 1e-8 * (1.0 + np.abs(d).max(initial=0.0)):
            res = _residuals(p, q, np.zeros((0, n)), np.zeros(0), e, d,
                             theta, np.zeros(0), np.zeros(0), y)
            return QpSolution(theta, _objective(p, q, theta), "infeasible", 0, res)
    res = _residuals(p, q, np.zeros((0, n)), np.zeros(0), e, d,
                     theta, np.zeros(0), np.zeros(0), y)
    status = "optimal" if res.max() <= 1e-8 else "max_iter"
    return QpSolution(theta, _objective(p, q, theta), status, 0, res)


def solve(qp: QpProblem, tol: float = 1e-8, max_iter: int = 100) -> QpSolution:
    """Solve the convex QP; returns the final iterate with KKT residuals.

    Status 'optimal' certifies all scaled KKT residuals <= tol; 'infeasible'
    is reported when the duals diverge while primal feasibility stalls.
    """
    p = _regularize(qp.p)
    n = p.shape[0]
    q = np.asarray(qp.q, dtype=float).reshape(-1)
    if q.size != n:
        raise ValidationError(f"q has length {q.size}, expected {n}")
    a = np.asarray(qp.a_ineq, dtype=float).reshape(-1, n) if np.size(qp.a_ineq) else np.zeros((0, n))
    b = np.asarray(qp.b_ineq, dtype=float).reshape(-1)
    e = np.asarray(qp.a_eq, dtype=float).reshape(-1, n) if np.size(qp.a_eq) else np.zeros((0, n))
    d = np.asarray(qp.b_eq, dtype=float).reshape(-1)
    if a.shape[0] != b.size or e.shape[0] != d.size:
        raise ValidationError("constraint matrix/vector length mismatch")

    if a.shape[0] == 0:
        return _solve_kkt_direct(p, q, e, d)

    mi, me = a.shape[0], e.shape[0]

    # starting point: regularized unconstrained minimizer, slacks shifted positive
    theta = scipy.linalg.solve(p + np.eye(n), -q, assume_a="pos")
    s0 = b - a @ theta
    shift = max(0.0, -float(s0.min())) + 1.0
    s = s0 + shift
    z = np.ones(mi)
    y = np.zeros(me)

    status = "max_iter"
    it = 0
    q_scale = 1.0 + float(np.abs(q).max(initial=0.0))
    best = (np.inf, theta.copy(), s.copy(), z.copy(), y.copy())
    for it in range(1, max_iter + 1):
        rd = p @ theta + q + a.T @ z + (e.T @ y if me else 0.0)
        rp = a @ theta + s - b
        re = (e @ theta - d) if me else np.zeros(0)
        mu = float(s @ z) / mi

        res = _residuals(p, q, a, b, e, d, theta, s, z, y)
        if res.max() < best[0]:
            best = (res.max(), theta.copy(), s.copy(), z.copy(), y.copy())
        if res.max() <= tol:
            status = "optimal"
            it -= 1
            break
        if mu < 1e4 * tol and res.primal <= np.sqrt(tol):
            polished = _polish(p, q, a, b, e, d, s, z, tol)
            if polished is not None:
                theta, s, z, y = polished
                status = "optimal"
                break
        # divergence heuristic: duals exploding while primal residual stalls
        if float(np.abs(z).max()) > 1e10 * q_scale and res.primal > np.sqrt(tol):
            status = "infeasible"
            break

        dscale = z / s
        m_mat = p + _normal_matrix(a, dscale)
        if me:
            kkt = np.block([[m_mat, e.T], [e, np.zeros((me, me))]])
        else:
            kkt = m_mat
        reg = 1e-12 * max(1.0, float(np.abs(kkt).max()))
        with warnings.catch_warnings():
            # a singular factorization only warns; the finite check below
            # falls back to a regularized refactorization
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            try:
                lu = scipy.linalg.lu_factor(kkt)
            except scipy.linalg.LinAlgError:
                lu = scipy.linalg.lu_factor(kkt + reg * np.eye(kkt.shape[0]))

        def newton_step(rc):
            nonlocal lu
            top = -rd - a.T @ ((z * rp - rc) / s)
            rhs = np.concatenate([top, -re]) if me else top
            sol = scipy.linalg.lu_solve(lu, rhs)
            if not np.all(np.isfinite(sol)):
                lu = scipy.linalg.lu_factor(kkt + reg * np.eye(kkt.shape[0]))
                sol = scipy.linalg.lu_solve(lu, rhs)
            dtheta = sol[:n]
            dy = sol[n:] if me else np.zeros(0)
            ds = -rp - a @ dtheta
            dz = dscale * (a @ dtheta) + (z * rp - rc) / s
            return dtheta, dy, ds, dz

        # predictor
        dtheta_a, dy_a, ds_a, dz_a = newton_step(z * s)
        ap = _step_length(s, ds_a, 1.0)
        ad = _step_length(z, dz_a, 1.0)
        mu_aff = float((s + ap * ds_a) @ (z + ad * dz_a)) / mi
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

        # corrector
        rc = z * s + ds_a * dz_a - sigma * mu
        dtheta, dy, ds, dz = newton_step(rc)
        ap = _step_length(s, ds)
        ad = _step_length(z, dz)
        if min(ap, ad) < 1e-12:
            status = "infeasible" if res.primal > np.sqrt(tol) else "max_iter"
            break
        theta = theta + ap * dtheta
        s = s + ap * ds
        y = y + ad * dy
        z = z + ad * dz

    if status == "max_iter":
        polished = _polish(p, q, a, b, e, d, s, z, tol)
        if polished is not None:
            theta, s, z, y = polished
            status = "optimal"
        elif best[0] < np.inf:
            _, theta, s, z, y = best
    res = _residuals(p, q, a, b, e, d, theta, s, z, y)
    if status == "max_iter" and res.max() <= tol:
        status = "optimal"
    return QpSolution(theta, _objective(p, q, theta), status, it, res)


def _polish(p, q, a, b, e, d, s, z, tol):
    """Active-set refinement of a near-converged interior-point iterate.

    Solves the KKT system restricted to the constraints the iterate marks
    active; accepted only if the result is primal feasible with nonnegative
    multipliers and KKT residuals within tol.
    """
    n = p.shape[0]
    act = np.nonzero(z > s)[0]
    if act.size > max(50, 8 * n):
        # continuum-degenerate active set (e.g. a constraint riding a whole
        # interval of grid rows): a KKT polish would be huge and ill posed
        return None
    a_act = np.vstack([e, a[act]]) if e.shape[0] else a[act]
    rhs_act = np.concatenate([d, b[act]]) if e.shape[0] else b[act]
    k = a_act.shape[0]
    kkt = np.block([[p, a_act.T], [a_act, np.zeros((k, k))]])
    rhs = np.concatenate([-q, rhs_act])
    try:
        with warnings.catch_warnings():
            # degenerate active sets are expected; the residual check below
            # rejects any inaccurate polish
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            sol = scipy.linalg.solve(kkt, rhs)
    except (scipy.linalg.LinAlgError, ValueError):
        sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    if not np.all(np.isfinite(sol)):
        return None
    theta = sol[:n]
    mult = sol[n:]
    y_new = mult[: e.shape[0]]
    z_act = mult[e.shape[0]:]
    if z_act.size and float(z_act.min(initial=0.0)) < -np.sqrt(tol):
        return None
    z_new = np.zeros(a.shape[0])
    z_new[act] = np.maximum(z_act, 0.0)
    s_new = np.maximum(b - a @ theta, 0.0)
    res = _residuals(p, q, a, b, e, d, theta, s_new, z_new, y_new)
    if res.max() > tol:
        return None
    return theta, s_new, z_new, y_new
