"""SISO LTI curve generators: state-space container and transfer-function realization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .linalg import check_finite, mat_exp

__all__ = ["StateSpace", "tf_to_ss"]


@dataclass(frozen=True)
class StateSpace:
    """The curve generator xdot = A x + B u, y = C x on the horizon [0, T].

    ``b`` and ``c`` are stored as 1-D vectors (the system is SISO).  The flag
    ``relative_degree_at_least_two`` records whether C B == 0 exactly, which
    is what makes the derivative constraint function Lipschitz and hence the
    grid-size certificate valid.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    horizon: float
    cb: float = field(init=False)
    relative_degree_at_least_two: bool = field(init=False)

    def __post_init__(self):
        a = check_finite(self.a, "a")
        b = check_finite(self.b, "b").reshape(-1)
        c = check_finite(self.c, "c").reshape(-1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"a must be square, got shape {a.shape}")
        n = a.shape[0]
        if n < 1:
            raise ValidationError("state dimension must be at least 1")
        if b.shape[0] != n or c.shape[0] != n:
            raise ValidationError(
                f"b/c lengths ({b.shape[0]}, {c.shape[0]}) inconsistent with n={n}"
            )
        if not (self.horizon > 0 and np.isfinite(self.horizon)):
            raise ValidationError(f"horizon must be positive, got {self.horizon}")
        a.flags.writeable = False
        b.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "horizon", float(self.horizon))
        cb = float(c @ b)
        object.__setattr__(self, "cb", cb)
        object.__setattr__(self, "relative_degree_at_least_two", cb == 0.0)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def check_time(self, t, name="t"):
        """Validate t in [0, T]; returns t as float."""
        t = float(t)
        from .errors import DomainError

        if not (0.0 <= t <= self.horizon):
            raise DomainError(
                f"{name}={t} outside the horizon [0, {self.horizon}]"
            )
        return t


def tf_to_ss(numerator, denominator, horizon):
    """Controllable-canonical realization of a strictly proper transfer function.

    ``numerator`` and ``denominator`` are coefficient lists in descending
    powers of s.  The denominator is normalized to be monic; A is the
    companion matrix, B the unit last coordinate, and C carries the
    numerator coefficients.
    """
    num = np.trim_zeros(np.atleast_1d(np.asarray(numerator, dtype=float)), "f")
    den = np.trim_zeros(np.atleast_1d(np.asarray(denominator, dtype=float)), "f")
    if den.size == 0:
        raise ValidationError("denominator is identically zero")
    if num.size == 0:
        raise ValidationError("numerator is identically zero")
    if num.size >= den.size:
        raise ValidationError(
            "transfer function must be strictly proper "
            f"(deg num {num.size - 1} >= deg den {den.size - 1})"
        )
    num = num / den[0]
    den = den / den[0]
    n = den.size - 1
    a = np.zeros((n, n))
    if n > 1:
        a[:-1, 1:] = np.eye(n - 1)
    a[-1, :] = -den[::-1][:n]
    b = np.zeros(n)
    b[-1] = 1.0
    c = np.zeros(n)
    c[: num.size] = num[::-1]
    sys = StateSpace(a, b, c, horizon)
    _validate_realization(sys, num, den)
    return sys


def _validate_realization(sys, num, den, rtol=1e-8):
    """Check C(sI-A)^{-1}B against the coefficients at a few probe frequencies."""
    n = sys.n
    for s in (0.37j, 1.1j, 2.3j, 0.5 + 0.9j, 1.7 + 0.3j):
        want = np.polyval(num, s) / np.polyval(den, s)
        got = sys.c @ np.linalg.solve(s * np.eye(n) - sys.a, sys.b)
        if abs(got - want) > rtol * max(1.0, abs(want)):
            raise ValidationError(
                f"realization mismatch at s={s}: {got} vs {want}"
            )


def free_response_row(sys: StateSpace, t: float) -> np.ndarray:
    """C exp(A t) as a length-n row."""
    return sys.c @ mat_exp(sys.a * t)
