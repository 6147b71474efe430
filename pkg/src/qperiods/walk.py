"""Lattice random walks behind constant terms, and the local CLT fit.

With ``p_l = c_l x_con^l / T_g`` the ``n``-step return probability of the
walk is ``Cst(g^n) / T_g^n``. For an aperiodic walk (index one) it decays
like ``c n^{-m/2}``; :func:`fit_lclt` estimates ``c`` and the exponent.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
from mpmath import mp, mpf
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._mp import DEFAULT_PREC, lstsq, to_mpf
from .conifold import find_conifold, step_distribution
from .exceptions import DomainValidationError, InsufficientDataError
from .laurent import DEFAULT_INDEX_HORIZON, cst_sequence, detect_index, power

MC_CHUNK = 4096


def return_probabilities(g, T_g, n_max, cst=None, prec=DEFAULT_PREC):
    """``q_n = Cst(g^n) / T_g^n`` for ``n = 0..n_max``.

    ``cst`` may supply the exact constant terms of ``g^n`` (for instance
    sub-sampled from the sequence of ``f`` when ``g = f^r``); otherwise they
    are computed. Raises if ``g`` does not have index one.
    """
    if cst is None:
        cst = cst_sequence(g, max(n_max, 1), method="auto")
    if len(cst) < n_max + 1:
        raise InsufficientDataError(f"need constant terms up to n={n_max}")
    horizon = min(DEFAULT_INDEX_HORIZON, len(cst) - 1)
    r = detect_index(cst, horizon=horizon)
    if r != 1:
        raise DomainValidationError(f"walk requires index 1, got index {r}; use g = f^{r}")
    out = []
    with mp.workprec(prec):
        T = to_mpf(T_g)
        Tn = mpf(1)
        for n in range(n_max + 1):
            c = Fraction(cst[n])
            if c < 0:
                raise DomainValidationError(f"negative constant term at n={n}")
            out.append(to_mpf(c) / Tn)
            Tn *= T
    return out


@dataclass(frozen=True)
class WalkData:
    """Index-one reduction ``g = f^r`` with its conifold data and return probabilities."""

    index_r: int
    g: object
    T_g: mpf
    q: tuple
    conifold: object


def reduce_to_index_one(f, n_max, prec=DEFAULT_PREC):
    """Build ``g = f^r`` and ``q_n = Cst(g^n)/T_g^n`` for ``n <= n_max``.

    Constant terms of ``g`` are read off the sequence of ``f`` at multiples
    of ``r``, which avoids expanding the much larger support of ``g``.
    """
    head = cst_sequence(f, DEFAULT_INDEX_HORIZON, method="auto")
    r = detect_index(head)
    cst_f = cst_sequence(f, r * n_max, method="auto")
    cst_g = [cst_f[r * k] for k in range(n_max + 1)]
    con = find_conifold(f, prec=prec)
    with mp.workprec(prec):
        T_g = con.value**r
    g = power(f, r)
    if n_max < 1:
        return WalkData(r, g, T_g, (mpf(1),), con)
    q = return_probabilities(g, T_g, n_max, cst=cst_g, prec=prec)
    return WalkData(r, g, T_g, tuple(q), con)


@dataclass(frozen=True)
class LcltFit:
    """Result of fitting ``q_n n^{m/2} = c + b / sqrt(n)``.

    ``residual_exponent`` is the log-log slope of ``|q_n n^{m/2} - c_hat|``
    and ``m_over_2_check`` the log-log slope of ``q_n`` itself (about
    ``-m/2``). Either is NaN when undefined.
    """

    samples: tuple
    c_hat: mpf
    b_hat: mpf
    residual_exponent: float
    m_over_2_check: float
    m: int
    n_min_fit: int


def default_n_min_fit(n_max):
    return max(10, n_max // 4)


def fit_lclt(q, m, n_min_fit=None, prec=DEFAULT_PREC):
    """Fit the local CLT asymptotic to return probabilities ``q``.

    Parameters
    ----------
    q : sequence
        ``q[n]`` for ``n = 0..n_max``.
    m : int
        Lattice rank (walk dimension).
    n_min_fit : int, optional
        First ``n`` used; default ``max(10, n_max // 4)``.
    """
    n_max = len(q) - 1
    if n_min_fit is None:
        n_min_fit = default_n_min_fit(n_max)
    if n_min_fit < 2:
        raise InsufficientDataError("n_min_fit must be >= 2")
    with mp.workprec(prec):
        samples = tuple((n, to_mpf(q[n])) for n in range(n_min_fit, n_max + 1) if q[n] > 0)
        if len(samples) < 3:
            raise InsufficientDataError(f"only {len(samples)} positive samples at n >= {n_min_fit}")
        half_m = mpf(m) / 2
        scaled = [v * mpf(n) ** half_m for n, v in samples]
        (c_hat, b_hat), _ = lstsq([(1, 1 / mpmath.sqrt(n)) for n, _ in samples], scaled)

        logs = [mpmath.log(n) for n, _ in samples]
        if m == 0 and all(v == samples[0][1] for _, v in samples):
            slope_q = 0.0
        else:
            (_, sq), _ = lstsq([(1, ln) for ln in logs], [mpmath.log(v) for _, v in samples])
            slope_q = float(sq)

        dev = [(ln, abs(s - c_hat)) for ln, s in zip(logs, scaled)]
        dev = [(ln, d) for ln, d in dev if d > abs(c_hat) * mpf(2) ** (-prec + 32)]
        if len(dev) >= 3:
            (_, sr), _ = lstsq([(1, ln) for ln, _ in dev], [mpmath.log(d) for _, d in dev])
            res_exp = float(sr)
        else:
            res_exp = math.nan
    return LcltFit(samples, +c_hat, +b_hat, res_exp, slope_q, m, n_min_fit)


class LcltEstimator(BaseEstimator):
    """Estimator wrapper around :func:`fit_lclt`.

    ``fit(n, q)`` takes step counts and return probabilities; afterwards
    ``c_hat_`` and ``decay_exponent_`` are set and ``predict(n)`` returns
    the leading asymptotic ``c_hat * n^{-m/2}``.
    """

    def __init__(self, m=1, n_min_fit=None, prec=DEFAULT_PREC):
        self.m = m
        self.n_min_fit = n_min_fit
        self.prec = prec

    def fit(self, X, y):
        n = np.asarray(X).reshape(-1).astype(int)
        if len(n) != len(y):
            raise ValueError("X and y have different lengths")
        if len(n) and not np.array_equal(n, np.arange(n[0], n[0] + len(n))):
            raise ValueError("X must be consecutive step counts")
        q = [mpf(0)] * int(n[0]) + list(y) if len(n) else []
        self.fit_ = fit_lclt(q, self.m, self.n_min_fit, self.prec)
        self.c_hat_ = float(self.fit_.c_hat)
        self.decay_exponent_ = self.fit_.m_over_2_check
        self.residual_exponent_ = self.fit_.residual_exponent
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        n = np.asarray(X, dtype=float).reshape(-1)
        return self.c_hat_ * n ** (-self.m / 2)


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    stderr: float
    n_trials: int
    n_steps: int
    seed: int


def monte_carlo_return(dist, n_steps, n_trials, seed):
    """Fraction of simulated ``n_steps`` walks that end at the origin.

    Trials are drawn in fixed chunks of ``MC_CHUNK``; chunk ``k`` uses a
    Philox stream keyed by ``(seed, k)``, so the result depends only on the
    seed, never on how chunks are scheduled.
    """
    if n_trials < 1:
        raise DomainValidationError("n_trials must be >= 1")
    if n_steps == 0:
        return MonteCarloEstimate(1.0, 0.0, n_trials, 0, seed)
    vecs = np.array(dist.vectors, dtype=np.int64)
    probs = np.array([float(p) for p in dist.probabilities])
    probs /= probs.sum()
    hits = 0
    for k, start in enumerate(range(0, n_trials, MC_CHUNK)):
        size = min(MC_CHUNK, n_trials - start)
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, k], dtype=np.uint64)))
        idx = rng.choice(len(probs), size=(size, n_steps), p=probs)
        pos = vecs[idx].sum(axis=1)
        hits += int(np.count_nonzero(~pos.any(axis=1)))
    p = hits / n_trials
    return MonteCarloEstimate(p, math.sqrt(p * (1 - p) / n_trials), n_trials, n_steps, seed)


def walk_distribution(f, prec=DEFAULT_PREC):
    """Step distribution of ``g = f^r`` at the conifold point of ``f``."""
    head = cst_sequence(f, DEFAULT_INDEX_HORIZON, method="auto")
    r = detect_index(head)
    g = power(f, r)
    return step_distribution(g, find_conifold(f, prec=prec))
