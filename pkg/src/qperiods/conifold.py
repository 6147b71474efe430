"""Conifold point of a convenient Laurent polynomial.

On the positive orthant write ``x = exp(y)``. Then
``F(y) = sum_l c_l exp(<l, y>)`` is strictly convex and coercive when the
Newton polytope of ``f`` contains the origin in its interior, so its unique
minimiser is the conifold point. It is found by damped Newton iteration in
multiprecision arithmetic.
"""

from dataclasses import dataclass

import mpmath
from mpmath import mp, mpf

from ._mp import DEFAULT_PREC, to_mpf
from .exceptions import ConvergenceError, NotConvenientError
from .laurent import newton_info

_GUARD_BITS = 32
_ARMIJO = mpf("1e-4")


@dataclass(frozen=True)
class ConifoldResult:
    """Conifold point ``x_con``, value ``T_con = f(x_con)`` and diagnostics.

    ``hessian_log_det`` is the determinant of the Hessian of ``f`` in
    logarithmic coordinates, ``det(d_{log x_i} d_{log x_j} f)``, at the
    point (the determinant itself, not its logarithm). ``gradient_norm`` is
    the final ``||grad F||_2 / F`` and ``precision`` the working bits.
    """

    point: tuple
    value: mpf
    hessian_log_det: mpf
    gradient_norm: mpf
    iterations: int
    precision: int = DEFAULT_PREC
    log_point: tuple = ()
    hessian: tuple = ()


def _objective(support, coeffs, y):
    """F, gradient and Hessian of sum c_l exp(<l, y>)."""
    m = len(y)
    F = mpf(0)
    g = [mpf(0)] * m
    H = [[mpf(0)] * m for _ in range(m)]
    for ell, c in zip(support, coeffs):
        w = c * mpmath.exp(mpmath.fsum(li * yi for li, yi in zip(ell, y)))
        F += w
        for i in range(m):
            if ell[i]:
                wi = w * ell[i]
                g[i] += wi
                for j in range(i, m):
                    if ell[j]:
                        H[i][j] += wi * ell[j]
    for i in range(m):
        for j in range(i):
            H[i][j] = H[j][i]
    return F, g, H


def _value_only(support, coeffs, y):
    return mpmath.fsum(
        c * mpmath.exp(mpmath.fsum(li * yi for li, yi in zip(ell, y))) for ell, c in zip(support, coeffs)
    )


def find_conifold(f, tol=None, max_iter=100, prec=DEFAULT_PREC, check_convenient=True):
    """Unique critical point of ``f`` on the positive orthant.

    Parameters
    ----------
    f : LaurentPolynomial
        Convenient model with non-negative coefficients.
    tol : mpf or str, optional
        Relative gradient tolerance, ``||grad F|| <= tol * F``. Defaults to
        ``2**-(prec - 56)`` (``2**-200`` at 256 bits).
    max_iter : int
        Newton iteration cap.
    prec : int
        Working precision in bits.

    Raises
    ------
    NotConvenientError
        If the origin is not interior to the Newton polytope or the support
        does not span a rank-``m`` lattice.
    ConvergenceError
        If ``max_iter`` iterations do not reach ``tol``; ``exc.best`` holds
        the last iterate as a :class:`ConifoldResult`.
    """
    if check_convenient:
        if f.is_zero():
            raise NotConvenientError("zero polynomial has no conifold point")
        info = newton_info(f)
        if info.support_lattice_rank < f.num_vars:
            raise NotConvenientError(
                f"support spans a lattice of rank {info.support_lattice_rank} < {f.num_vars}"
            )
        if not info.contains_origin_interior:
            raise NotConvenientError("origin is not in the interior of the Newton polytope")

    with mp.workprec(prec + _GUARD_BITS):
        tol = mpf(2) ** -(prec - 56) if tol is None else to_mpf(tol)
        support = [tuple(e) for e, _ in f.items()]
        coeffs = [to_mpf(c) for _, c in f.items()]
        m = f.num_vars
        y = [mpf(0)] * m
        F, g, H = _objective(support, coeffs, y)
        it = 0
        while True:
            gnorm = mpmath.sqrt(mpmath.fsum(gi * gi for gi in g)) / F
            if gnorm <= tol:
                break
            if it >= max_iter:
                best = _pack(y, F, g, H, it, prec)
                raise ConvergenceError(
                    f"Newton did not reach tolerance in {max_iter} iterations (residual {mpmath.nstr(gnorm, 5)})",
                    best=best,
                )
            step = mpmath.lu_solve(mpmath.matrix(H), mpmath.matrix([-gi for gi in g]))
            step = [step[i] for i in range(m)]
            slope = mpmath.fsum(gi * di for gi, di in zip(g, step))
            # Near the optimum the Armijo test drowns in rounding; take full steps there.
            t = mpf(1)
            if -slope > F * mpf(2) ** (-prec // 2):
                for _ in range(200):
                    trial = [yi + t * di for yi, di in zip(y, step)]
                    if _value_only(support, coeffs, trial) <= F + _ARMIJO * t * slope:
                        break
                    t /= 2
            y = [yi + t * di for yi, di in zip(y, step)]
            F, g, H = _objective(support, coeffs, y)
            it += 1
        return _pack(y, F, g, H, it, prec)


def _pack(y, F, g, H, it, prec):
    m = len(y)
    gnorm = mpmath.sqrt(mpmath.fsum(gi * gi for gi in g)) / F
    det = mpmath.det(mpmath.matrix(H)) if m else mpf(1)
    return ConifoldResult(
        point=tuple(+mpmath.exp(yi) for yi in y),
        value=+F,
        hessian_log_det=+det,
        gradient_norm=+gnorm,
        iterations=it,
        precision=prec,
        log_point=tuple(+yi for yi in y),
        hessian=tuple(tuple(+v for v in row) for row in H),
    )


def leading_principal_minors(result):
    """Leading principal minors of the log-coordinate Hessian."""
    H = result.hessian
    with mp.workprec(result.precision):
        return [mpmath.det(mpmath.matrix([row[:k] for row in H[:k]])) for k in range(1, len(H) + 1)]


@dataclass(frozen=True)
class StepDistribution:
    """Step law ``p_l = c_l x_con^l / T_g`` of the lattice walk attached to ``g``.

    ``steps`` is a tuple of ``(exponent, probability)`` pairs in canonical
    exponent order; ``mean_norm`` is the Euclidean norm of ``sum p_l l``.
    """

    dim: int
    steps: tuple
    lattice_rank: int
    mean_norm: mpf
    total: mpf

    @property
    def probabilities(self):
        return [p for _, p in self.steps]

    @property
    def vectors(self):
        return [e for e, _ in self.steps]


def step_distribution(g, conifold):
    """Step distribution of the random walk whose return probabilities are ``Cst(g^n)/T_g^n``.

    ``conifold`` may be the conifold point of ``g`` or of any ``f`` with
    ``g = f^r``; the normalisation ``T_g = g(x_con)`` is computed directly.
    """
    with mp.workprec(conifold.precision + _GUARD_BITS):
        x = [mpf(v) for v in conifold.point]
        weights = []
        for ell, c in g.items():
            w = to_mpf(c)
            for xi, e in zip(x, ell):
                if e:
                    w *= xi**e
            weights.append((ell, w))
        T = mpmath.fsum(w for _, w in weights)
        steps = tuple((ell, w / T) for ell, w in weights)
        mean = [mpmath.fsum(p * ell[i] for ell, p in steps) for i in range(g.num_vars)]
        mean_norm = mpmath.sqrt(mpmath.fsum(v * v for v in mean))
        total = mpmath.fsum(p for _, p in steps)
    rank = newton_info(g).support_lattice_rank
    return StepDistribution(g.num_vars, steps, rank, mean_norm, total)
