"""Gauss hypergeometric function for the error-gain average.

Only the family ``2F1(1, b; b + 1; -x)`` with ``x >= 0`` and ``0 < b < 1``
is needed. A Pfaff transformation maps it to ``(1+x)**-1 * 2F1(1, 1; b+1; w)``
with ``w = x / (1 + x)`` in ``[0, 1)``, whose power series has positive
terms. Close to ``w = 1`` the series is slow, so there the ``1 - w``
connection formula takes over; it is regular because ``b + 1 - 2 = b - 1``
is never an integer for ``0 < b < 1``.
"""

from __future__ import annotations

import math

_TERM_TOL = 1e-15
_SWITCH_W = 0.9
_MAX_TERMS = 100_000


def _series_11c(c: float, w: float) -> float:
    """``2F1(1, 1; c; w)`` by its power series, ``0 <= w < 1``."""
    total, term, n = 1.0, 1.0, 0
    while n < _MAX_TERMS:
        term *= (n + 1.0) / (c + n) * w
        total += term
        n += 1
        if term <= _TERM_TOL * total:
            return total
    raise ArithmeticError(f"2F1(1,1;{c};{w}) series did not converge")


def _hyp2f1_11c(c: float, w: float, v: float) -> float:
    """``2F1(1, 1; c; w)`` for ``1 < c < 2``, ``0 <= w < 1`` and ``v = 1 - w`` given exactly."""
    if w <= _SWITCH_W:
        return _series_11c(c, w)
    # connection to 1 - w: the second branch collapses since 2F1(c-1, c-1; c-1; z) = (1-z)**(1-c)
    g_reg = math.gamma(c) * math.gamma(c - 2.0) / math.gamma(c - 1.0) ** 2
    g_sing = math.gamma(c) * math.gamma(2.0 - c)
    return g_reg * _series_11c(3.0 - c, v) + g_sing * v ** (c - 2.0) * w ** (1.0 - c)


def hyp2f1_1b_b1_neg(b: float, x: float) -> float:
    """Evaluate ``2F1(1, b; b + 1; -x)`` for ``0 < b < 1`` and ``x >= 0``.

    Examples
    --------
    >>> round(hyp2f1_1b_b1_neg(0.5, 0.0), 12)
    1.0
    """
    if not 0.0 < b < 1.0:
        raise ValueError("b must lie in (0, 1)")
    if x < 0 or not math.isfinite(x):
        raise ValueError("x must be finite and nonnegative")
    w = x / (1.0 + x)
    v = 1.0 / (1.0 + x)
    return _hyp2f1_11c(b + 1.0, w, v) * v

