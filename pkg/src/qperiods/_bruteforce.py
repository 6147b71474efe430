"""Slow, independent reference computations used to bootstrap expected values.

Nothing here shares code with the fast routes in :mod:`laurent` or
:mod:`conifold`; these exist only so the two can be checked against each
other.
"""

import itertools
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize


def cst_by_enumeration(f, n):
    """Constant term of ``f^n`` by summing over all ``n``-tuples of monomials."""
    items = list(f.items())
    total = Fraction(0)
    zero = (0,) * f.num_vars
    for choice in itertools.product(items, repeat=n):
        pos = zero
        coeff = Fraction(1)
        for e, c in choice:
            pos = tuple(a + b for a, b in zip(pos, e))
            coeff *= c
        if pos == zero:
            total += coeff
    return total


def cst_by_walk_counting(f, n_max):
    """Constant terms of ``f^n``, ``n <= n_max``, by propagating weighted walk endpoints."""
    items = list(f.items())
    zero = (0,) * f.num_vars
    state = {zero: Fraction(1)}
    out = [Fraction(1)]
    for _ in range(n_max):
        nxt = {}
        for pos, w in state.items():
            for e, c in items:
                key = tuple(a + b for a, b in zip(pos, e))
                nxt[key] = nxt.get(key, 0) + w * c
        state = nxt
        out.append(state.get(zero, Fraction(0)))
    return out


def conifold_double(f):
    """Conifold point and value in double precision via scipy's BFGS."""
    exps = np.array([e for e, _ in f.items()], dtype=float)
    coeffs = np.array([float(c) for _, c in f.items()])

    def F(y):
        return float(coeffs @ np.exp(exps @ y))

    def grad(y):
        return (coeffs * np.exp(exps @ y)) @ exps

    res = minimize(F, np.zeros(f.num_vars), jac=grad, method="BFGS", options={"gtol": 1e-12})
    return tuple(np.exp(res.x).tolist()), res.fun
