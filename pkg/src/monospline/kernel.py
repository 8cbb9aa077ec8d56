"""Spline kernel layer.

Evaluates the kernel sections phi_t and their time-derivatives, the L2 inner
products between them, and assembles the Gram matrix G, the free-response map
F, and the derivative rows Phi(t) that encode ydot(t) = Phi(t)' theta.

All inner products route through the block-exponential integrals in
:mod:`monospline.linalg`; numerical quadrature is used only by the test
oracles.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import mat_exp, symmetrize, van_loan_cross, van_loan_gramian
from .system import StateSpace

__all__ = [
    "KernelTable",
    "phi",
    "phi_dot",
    "inner_phi_phi",
    "inner_phidot_phi",
    "build_kernel_table",
    "build_constraint_vector",
    "constraint_rows",
]


def phi(sys: StateSpace, t, tau) -> float:
    """Kernel section value: C exp(A(t-tau)) B for t > tau, else 0."""
    t = sys.check_time(t, "t")
    tau = sys.check_time(tau, "tau")
    if t <= tau:
        return 0.0
    return float(sys.c @ mat_exp(sys.a * (t - tau)) @ sys.b)


def phi_dot(sys: StateSpace, t, tau) -> float:
    """Time-derivative of the kernel section: C A exp(A(t-tau)) B for t > tau, else 0."""
    t = sys.check_time(t, "t")
    tau = sys.check_time(tau, "tau")
    if t <= tau:
        return 0.0
    return float(sys.c @ sys.a @ mat_exp(sys.a * (t - tau)) @ sys.b)


def _v(sys: StateSpace, t: float) -> np.ndarray:
    """exp(A t) B."""
    return mat_exp(sys.a * t) @ sys.b


def inner_phi_phi(sys: StateSpace, s, t) -> float:
    """<phi_s, phi_t>, computed as v_s' K(min(s,t)) v_t with K the Gramian integral.

    The integrand vanishes beyond min(s, t), so integrating over
    [0, min(s, t)] equals the L2 inner product over [0, T].
    """
    s = sys.check_time(s, "s")
    t = sys.check_time(t, "t")
    h = min(s, t)
    if h <= 0.0:
        return 0.0
    k = van_loan_gramian(sys.a, sys.c, h)
    # fixed operand order makes the symmetry in (s, t) exact, not just to 1 ulp
    lo, hi = (s, t) if s <= t else (t, s)
    return float(_v(sys, lo) @ k @ _v(sys, hi))


def inner_phidot_phi(sys: StateSpace, s, t) -> float:
    """<phidot_s, phi_t> via the cross block exponential; not symmetric in (s, t)."""
    s = sys.check_time(s, "s")
    t = sys.check_time(t, "t")
    h = min(s, t)
    if h <= 0.0:
        return 0.0
    k = van_loan_cross(sys.a, sys.c, h)
    return float(_v(sys, s) @ k @ _v(sys, t))


@dataclass(frozen=True)
class KernelTable:
    """Gram matrix G, free-response map F, and per-knot caches.

    gram[i, j] = <phi_{t_{j+1}}, phi_{t_{i+1}}>; output_map row i = C exp(A t_{i+1}).
    ``v_knots`` holds exp(A t_i) B per knot and ``cross_w`` holds
    K_cross(t_i) v_i, the quantities needed to evaluate derivative rows
    without re-integrating past knots.
    """

    sample_times: np.ndarray
    gram: np.ndarray
    output_map: np.ndarray
    v_knots: np.ndarray  # (m, n)
    cross_w: np.ndarray  # (m, n)

    @property
    def m(self) -> int:
        return self.sample_times.size


def build_kernel_table(sys: StateSpace, times) -> KernelTable:
    """Assemble G and F for sample times 0 < t_1 < ... < t_m = T."""
    times = np.asarray(times, dtype=float).reshape(-1)
    if times.size == 0:
        raise ValidationError("at least one sample time is required")
    if times[0] <= 0.0:
        raise ValidationError("sample times must be strictly positive")
    if np.any(np.diff(times) <= 0.0):
        raise ValidationError("sample times must be strictly increasing")
    if times[-1] != sys.horizon:
        raise ValidationError(
            f"last sample time {times[-1]} must equal the horizon {sys.horizon}"
        )
    m, n = times.size, sys.n
    exps = [mat_exp(sys.a * t) for t in times]
    v = np.array([e @ sys.b for e in exps])
    grams = [van_loan_gramian(sys.a, sys.c, t) for t in times]
    cross = [van_loan_cross(sys.a, sys.c, t) for t in times]

    g = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            # min(t_i, t_j) = t_i for j >= i
            g[i, j] = g[j, i] = v[j] @ grams[i] @ v[i]
    g = symmetrize(g)

    f = np.array([sys.c @ e for e in exps])
    w = np.array([cross[i] @ v[i] for i in range(m)])
    for arr in (times, g, f, v, w):
        arr.flags.writeable = False
    return KernelTable(times, g, f, v, w)


def _warn_cb(sys: StateSpace):
    if not sys.relative_degree_at_least_two:
        warnings.warn(
            "C B != 0 (relative degree 1): the derivative row function is not "
            "Lipschitz, so the grid-size certificate does not apply; the "
            "discretized program is still well posed.",
            stacklevel=3,
        )


def build_constraint_vector(sys: StateSpace, table: KernelTable, t) -> np.ndarray:
    """Derivative row Phi(t) of length m + n, satisfying ydot(t) = Phi(t)' theta.

    First m entries: <phidot_t, phi_{t_i}> + CB phi_{t_i}(t); last n entries:
    C A exp(A t).
    """
    t = sys.check_time(t, "t")
    m, n = table.m, sys.n
    row = np.zeros(m + n)
    eat = mat_exp(sys.a * t)
    v_t = eat @ sys.b
    if t > 0.0:
        k_t = van_loan_cross(sys.a, sys.c, t)
        for i, ti in enumerate(table.sample_times):
            if t >= ti:
                row[i] = v_t @ table.cross_w[i]
            else:
                row[i] = v_t @ k_t @ table.v_knots[i]
    if sys.cb != 0.0:
        for i, ti in enumerate(table.sample_times):
            if t < ti:
                row[i] += sys.cb * float(sys.c @ mat_exp(sys.a * (ti - t)) @ sys.b)
    row[m:] = sys.c @ sys.a @ eat
    return row


def constraint_rows(sys: StateSpace, table: KernelTable, times, *, chunk=4096,
                    out=None) -> np.ndarray:
    """Stack of Phi(t)' rows, one per entry of ``times``.

    Uniformly spaced time arrays take a batched path: the block exponential at
    t0 + j*delta factors as exp(blk*t0) @ exp(blk*delta)^j, so each chunk costs
    one dense expm plus batched small matrix products.  Non-uniform or short
    inputs fall back to the per-point evaluation.
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    if out is None:
        out = np.empty((times.size, table.m + sys.n))
    if times.size == 0:
        return out
    deltas = np.diff(times)
    uniform = times.size > 64 and deltas.size > 0 and np.allclose(
        deltas, deltas[0], rtol=1e-9, atol=1e-12
    ) and deltas[0] > 0
    if not uniform:
        for j, t in enumerate(times):
            out[j] = build_constraint_vector(sys, table, t)
        return out

    if times[0] < 0.0 or times[-1] > sys.horizon:
        sys.check_time(times[0], "times[0]")
        sys.check_time(times[-1], "times[-1]")
    n, m = sys.n, table.m
    delta = deltas[0]

    blk = np.zeros((2 * n, 2 * n))
    blk[:n, :n] = sys.a.T
    blk[:n, n:] = sys.a.T @ np.outer(sys.c, sys.c)
    blk[n:, n:] = -sys.a

    csize = min(chunk, times.size)
    # offsets within a chunk, built once by propagation
    e_blk = mat_exp(blk * delta)
    e_a = mat_exp(sys.a * delta)
    off_h = np.empty((csize, 2 * n, 2 * n))
    off_a = np.empty((csize, n, n))
    off_h[0] = np.eye(2 * n)
    off_a[0] = np.eye(n)
    for j in range(1, csize):
        off_h[j] = off_h[j - 1] @ e_blk
        off_a[j] = off_a[j - 1] @ e_a

    ca = sys.c @ sys.a
    rows = out
    knot_times = table.sample_times
    for k0 in range(0, times.size, csize):
        k1 = min(k0 + csize, times.size)
        t0 = times[k0]
        h_base = mat_exp(blk * t0)
        a_base = mat_exp(sys.a * t0)
        hs = np.matmul(h_base, off_h[: k1 - k0])
        ats = np.matmul(a_base, off_a[: k1 - k0])
        v_t = ats @ sys.b                        # (c, n)
        k_cross = np.matmul(hs[:, n:, n:].transpose(0, 2, 1), hs[:, :n, n:])
        t_chunk = times[k0:k1]
        for i in range(m):
            past = t_chunk >= knot_times[i]
            col = np.empty(k1 - k0)
            col[past] = v_t[past] @ table.cross_w[i]
            if not past.all():
                fut = ~past
                col[fut] = np.einsum(
                    "jn,jnl,l->j", v_t[fut], k_cross[fut], table.v_knots[i]
                )
            rows[k0:k1, i] = col
        rows[k0:k1, m:] = np.einsum("n,jnl->jl", ca, ats)

    if sys.cb != 0.0:
        for i in range(m):
            fut = times < knot_times[i]
            if fut.any():
                for k in np.nonzero(fut)[0]:
                    rows[k, i] += sys.cb * float(
                        sys.c @ mat_exp(sys.a * (knot_times[i] - times[k])) @ sys.b
                    )
    # zero-length integrals at t = 0 are exact zeros already (expm(0) block is 0)
    return rows
