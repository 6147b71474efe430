"""Small mpmath helpers shared across modules."""

import math
from fractions import Fraction

import mpmath
from mpmath import mp, mpf

DEFAULT_PREC = 256


def to_mpf(value):
    """Convert ints, Fractions, decimal strings or mpf to an mpf at the current precision."""
    if isinstance(value, Fraction):
        return mpf(value.numerator) / value.denominator
    if isinstance(value, str):
        return mpf(value)
    return mpf(value)


def exact_or_decimal(value):
    """Parse a decimal or ``p/q`` string into a Fraction; pass numbers through."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("non-finite number")
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a number")


def lstsq(rows, y):
    """Least squares fit in mpmath; returns (coefficients, rms residual)."""
    # mp.qr_solve can divide by zero in its Householder back-substitution on
    # well-posed systems, so solve R c = Q^T y from an explicit reduced QR.
    k = len(rows[0])
    A = mpmath.matrix([[to_mpf(v) for v in r] for r in rows])
    b = mpmath.matrix([to_mpf(v) for v in y])
    Q, R = mpmath.qr(A, mode="skinny")
    qtb = Q.T * b
    coef = [mpf(0)] * k
    for i in range(k - 1, -1, -1):
        coef[i] = (qtb[i] - mpmath.fsum(R[i, j] * coef[j] for j in range(i + 1, k))) / R[i, i]
    res = [mpmath.fsum(c * to_mpf(v) for c, v in zip(coef, r)) - to_mpf(t) for r, t in zip(rows, y)]
    rms = mpmath.sqrt(mpmath.fsum(r * r for r in res) / len(res))
    return coef, rms


def fmt(value, digits=None):
    """Deterministic decimal rendering of an mpf (digits default from precision)."""
    if digits is None:
        digits = max(15, int(mp.prec * 0.30103) - 2)
    return mpmath.nstr(mpf(value), digits, strip_zeros=False, min_fixed=-5, max_fixed=8)
