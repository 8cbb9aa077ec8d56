"""Dense matrix helpers: validation, matrix exponential, block-exponential integrals.

Both weighted Gramian integrals used by the kernel layer,

    int_0^h exp(-A'tau) C'C exp(-A tau) dtau
    int_0^h exp(-A'tau) A'C'C exp(-A tau) dtau

are read off a single matrix exponential of a 2n x 2n upper block-triangular
matrix (Van Loan's construction), so everything here reduces to ``mat_exp``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DomainError, ValidationError

__all__ = [
    "check_finite",
    "mat_exp",
    "symmetrize",
    "van_loan_gramian",
    "van_loan_cross",
]


def check_finite(m, name="matrix"):
    """Return ``m`` as a float ndarray, rejecting NaN/Inf entries."""
    arr = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def symmetrize(m):
    """(M + M') / 2, suppressing floating-point asymmetry."""
    return 0.5 * (m + m.T)


def mat_exp(m):
    """Matrix exponential of a square matrix.

    Uses scaling-and-squaring with Pade approximants (scipy's expm, which
    selects up to the degree-13 approximant).
    """
    arr = check_finite(m, "mat_exp argument")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"mat_exp requires a square matrix, got shape {arr.shape}")
    return scipy.linalg.expm(arr)


def _van_loan_blocks(a, top_right, h):
    """exp of [[A', top_right], [0, -A]] * h, returned as (F12, F22)."""
    n = a.shape[0]
    blk = np.zeros((2 * n, 2 * n))
    blk[:n, :n] = a.T
    blk[:n, n:] = top_right
    blk[n:, n:] = -a
    e = mat_exp(blk * h)
    return e[:n, n:], e[n:, n:]


def _check_gramian_args(a, c, h):
    a = check_finite(a, "a")
    c = check_finite(c, "c").reshape(-1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"a must be square, got shape {a.shape}")
    if c.shape[0] != a.shape[0]:
        raise ValidationError(
            f"c has length {c.shape[0]} but a is {a.shape[0]}x{a.shape[0]}"
        )
    if h < 0:
        raise DomainError(f"integration horizon must be nonnegative, got {h}")
    return a, c, float(h)


def van_loan_gramian(a, c, h):
    """int_0^h exp(-A'tau) C'C exp(-A tau) dtau via one block exponential.

    The result is symmetrized on return; it is positive semidefinite.
    """
    a, c, h = _check_gramian_args(a, c, h)
    f12, f22 = _van_loan_blocks(a, np.outer(c, c), h)
    return symmetrize(f22.T @ f12)


def van_loan_cross(a, c, h):
    """int_0^h exp(-A'tau) A'C'C exp(-A tau) dtau.

    Same construction as :func:`van_loan_gramian` with upper-right block
    A'C'C; the result is not symmetric in general and is returned as-is.
    """
    a, c, h = _check_gramian_args(a, c, h)
    h12, h22 = _van_loan_blocks(a, a.T @ np.outer(c, c), h)
    return h22.T @ h12
