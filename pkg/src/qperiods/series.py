"""Quantum periods and certified summation of absolutely monotonic series.

Coefficient oracles are callables ``n -> a_n`` returning non-negative
values (Fraction, int or mpf) at the current mpmath precision. An oracle
may advertise

* ``support_bound``: an int ``N`` with ``a_n = 0`` for all ``n > N``;
* ``exact(n)``: the coefficient as an exact Fraction.
"""

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from mpmath import mp, mpf

from ._mp import DEFAULT_PREC, lstsq, to_mpf
from .exceptions import (
    InsufficientDataError,
    NotConvenientError,
    UncertifiedEvaluationError,
    WhitelistError,
)
from .laurent import DEFAULT_INDEX_HORIZON, cst_sequence, detect_index, is_convenient


@dataclass(frozen=True)
class PeriodSequence:
    """Exact quantum period coefficients ``G_n = Cst(f^n) / n!``."""

    g_n: tuple
    index_r: int
    n_max: int
    source_model: str = ""

    @property
    def regularized(self):
        """``n! G_n`` (exact), the coefficients of the regularized period."""
        return tuple(g * math.factorial(n) for n, g in enumerate(self.g_n))

    def table_rows(self):
        """Rows ``(n, numerator of G_n, denominator of G_n, n! G_n)``."""
        rows = []
        for n, g in enumerate(self.g_n):
            reg = g * math.factorial(n)
            reg_s = str(reg.numerator) if reg.denominator == 1 else f"{reg.numerator}/{reg.denominator}"
            rows.append((n, g.numerator, g.denominator, reg_s))
        return rows


PERIOD_COLUMNS = ("n", "G_num", "G_den", "nfact_G")
EVALUATION_COLUMNS = ("x", "total", "peak_index", "head_mass", "tail_mass")


def quantum_period(f, n_max, method="auto", source_model=""):
    """Quantum period coefficients of the weak LG model ``f`` up to ``n_max``."""
    if not is_convenient(f):
        raise NotConvenientError("model is not convenient")
    horizon_seq = cst_sequence(f, max(n_max, DEFAULT_INDEX_HORIZON), method=method)
    r = detect_index(horizon_seq)
    g = tuple(Fraction(c) / math.factorial(n) for n, c in enumerate(horizon_seq[: n_max + 1]))
    return PeriodSequence(g, r, n_max, source_model or f.digest()[:12])


def write_period_csv(seq, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(PERIOD_COLUMNS)
    w.writerows(seq.table_rows())


@dataclass(frozen=True)
class LimitEstimate:
    """Extrapolated limit with the two route estimates behind it."""

    value: mpf
    root_estimate: mpf
    ratio_estimate: mpf
    relative_gap: mpf
    n_used: int
    warning: str = ""


def _log_fraction(q):
    return mpmath.log(q.numerator) - mpmath.log(q.denominator)


def estimate_t_a_con(seq, prec=DEFAULT_PREC, min_nonzero=10):
    """A-model conifold value ``limsup (n! G_n)^{1/n}`` of a period sequence.

    Two routes over the nonzero indices in the upper half of the range:
    the root test ``log(a_n)/n`` fitted against ``1, log(n)/n, 1/n`` and the
    stride-``r`` ratio test ``log(a_n/a_{n-r})/r`` fitted against
    ``1, 1/n, 1/n^2``. The ratio route has no logarithmic correction and
    extrapolates better, so its intercept is returned as ``value``; the
    relative gap between the two intercepts is the diagnostic.
    """
    reg = seq.regularized
    r = seq.index_r
    nz = [n for n in range(1, len(reg)) if reg[n] != 0]
    if len(nz) < min_nonzero:
        raise InsufficientDataError(
            f"need at least {min_nonzero} nonzero regularized coefficients, got {len(nz)}"
        )
    with mp.workprec(prec):
        tail = [n for n in nz if n >= nz[-1] // 2]
        if len(tail) < 4:
            tail = nz[-4:]
        logs = {n: _log_fraction(reg[n]) for n in nz}
        rows = [(1, mpmath.log(n) / n, mpf(1) / n) for n in tail]
        (L_root, _, _), _ = lstsq(rows, [logs[n] / n for n in tail])
        pairs = [n for n in tail if n - r in logs]
        rows = [(1, mpf(1) / n, mpf(1) / n**2) for n in pairs]
        (L_ratio, _, _), _ = lstsq(rows, [(logs[n] - logs[n - r]) / r for n in pairs])
        root, ratio = mpmath.exp(L_root), mpmath.exp(L_ratio)
        gap = abs(root - ratio) / abs(root)
    warning = ""
    if ratio < mpf("1e-6"):
        warning = "estimated T_A,con is zero or tiny"
        warnings.warn(warning)
    return LimitEstimate(+ratio, +root, +ratio, +gap, len(tail), warning)


@dataclass(frozen=True)
class TruncationPolicy:
    """When to stop summing ``a_n x^n``.

    Summation stops once (a) the running argmax is behind us, (b) the
    current nonzero term is below ``2^-(prec + guard_bits)`` times the
    running total and (c) the last ``ratio_window`` ratios between
    consecutive nonzero terms are all below ``ratio_bound``. The omitted
    tail is then bounded by ``term * rho / (1 - rho)`` with ``rho`` the
    largest of those ratios.
    """

    prec: int = DEFAULT_PREC
    guard_bits: int = 64
    ratio_window: int = 8
    ratio_bound: float = 0.5
    max_terms: int = 2_000_000


@dataclass(frozen=True)
class SeriesEvaluation:
    """Certified partial sums of ``I(x) = sum a_n x^n`` at one ``x``.

    ``terms[n] = a_n x^n`` for ``n < len(terms)``; prefix and suffix sums
    are kept so head and tail masses at any split come without re-summing
    and without cancellation.
    """

    x: mpf
    total: mpf
    peak_index: int
    truncation_bound: mpf
    terms: tuple = field(repr=False)
    prefix: tuple = field(repr=False)
    suffix: tuple = field(repr=False)
    prec: int = DEFAULT_PREC

    @property
    def n_terms(self):
        return len(self.terms)

    @property
    def peak_value(self):
        return self.terms[self.peak_index]

    def head_mass(self, nbar):
        """``sum_{n <= nbar} a_n x^n``."""
        if nbar < 0:
            return mpf(0)
        if nbar >= len(self.terms):
            return self.total
        return self.prefix[nbar]

    def tail_mass(self, nbar):
        """``sum_{n >= nbar} a_n x^n`` over the summed range (omitted tail excluded)."""
        if nbar <= 0:
            return self.total
        if nbar >= len(self.terms):
            return mpf(0)
        return self.suffix[nbar]

    def weighted_sum(self, weight, start=0, stop=None):
        """``sum w(n) a_n x^n`` for ``start <= n <= stop`` (defaults to the whole range)."""
        stop = len(self.terms) - 1 if stop is None else min(stop, len(self.terms) - 1)
        with mp.workprec(self.prec):
            return mpmath.fsum(
                weight(n) * self.terms[n] for n in range(max(start, 0), stop + 1) if self.terms[n]
            )


def _as_mpf(value):
    if isinstance(value, (int, Fraction)):
        return to_mpf(Fraction(value))
    return mpf(value)


def evaluate(coeff, x, policy=None):
    """Sum ``a_n x^n`` with a certified truncation bound.

    Raises
    ------
    UncertifiedEvaluationError
        If the stopping rule is not met within ``policy.max_terms`` terms.
    """
    policy = policy or TruncationPolicy()
    prec = policy.prec
    bound_n = getattr(coeff, "support_bound", None)
    with mp.workprec(prec + 16):
        x = mpf(x)
        if x <= 0:
            raise ValueError("x must be positive")
        tie = mpf(2) ** (-(prec - 16))
        small = mpf(2) ** (-(prec + policy.guard_bits))
        terms = []
        total = mpf(0)
        peak, peak_val = 0, mpf(-1)
        xn = mpf(1)
        last_nz = None
        ratios = []
        bound = None
        n = 0
        while True:
            if n >= policy.max_terms:
                raise UncertifiedEvaluationError(
                    f"truncation not certified after {policy.max_terms} terms at x={mpmath.nstr(x, 8)}"
                )
            a = _as_mpf(coeff(n))
            if a < 0:
                raise ValueError(f"negative coefficient at n={n}")
            t = a * xn if a else mpf(0)
            terms.append(t)
            total += t
            if t:
                if t > peak_val * (1 + tie):
                    peak, peak_val = n, t
                elif t >= peak_val * (1 - tie):
                    peak = n
                if last_nz is not None:
                    ratios.append(t / last_nz)
                    if len(ratios) > policy.ratio_window:
                        ratios.pop(0)
                last_nz = t
            if bound_n is not None and n >= bound_n:
                bound = mpf(0)
                break
            if (
                t
                and n > peak
                and t < small * total
                and len(ratios) == policy.ratio_window
                and max(ratios) < policy.ratio_bound
            ):
                rho = max(ratios)
                bound = t * rho / (1 - rho)
                break
            xn *= x
            n += 1
        prefix = []
        run = mpf(0)
        for t in terms:
            run += t
            prefix.append(run)
        suffix = [mpf(0)] * len(terms)
        run = mpf(0)
        for i in range(len(terms) - 1, -1, -1):
            run += terms[i]
            suffix[i] = run
    if total <= 0:
        raise UncertifiedEvaluationError("series sums to zero on the evaluated range")
    return SeriesEvaluation(x, total, peak, bound, tuple(terms), tuple(prefix), tuple(suffix), prec)


def write_evaluation_csv(evaluations, splits, fh, digits=30):
    """Rows ``(x, total, peak_index, head_mass, tail_mass)``; ``splits[i]`` is the head/tail index."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(EVALUATION_COLUMNS)
    for ev, nbar in zip(evaluations, splits):
        w.writerow(
            (
                mpmath.nstr(ev.x, digits),
                mpmath.nstr(ev.total, digits),
                ev.peak_index,
                mpmath.nstr(ev.head_mass(nbar), digits),
                mpmath.nstr(ev.tail_mass(nbar), digits),
            )
        )


# ---------------------------------------------------------------- oracles


class ReciprocalFactorial:
    """``a_n = 1/n!`` (the series of ``exp(x)``)."""

    def __init__(self):
        self._cache = {}

    def exact(self, n):
        return Fraction(1, math.factorial(n))

    def __call__(self, n):
        key = mp.prec
        vals = self._cache.setdefault(key, [mpf(1)])
        while len(vals) <= n:
            vals.append(vals[-1] / len(vals))
        return vals[n]


class FiniteOracle:
    """Polynomial coefficients ``a_0..a_N`` (zero afterwards)."""

    def __init__(self, coefficients):
        self.coefficients = tuple(Fraction(c) for c in coefficients)
        if any(c < 0 for c in self.coefficients):
            raise ValueError("coefficients must be non-negative")
        self.support_bound = len(self.coefficients) - 1

    def exact(self, n):
        return self.coefficients[n] if n < len(self.coefficients) else Fraction(0)

    def __call__(self, n):
        return to_mpf(self.exact(n))


class PeriodOracle:
    """Quantum period coefficients ``G_n`` of a model, extended on demand."""

    def __init__(self, f, regularized=False):
        self.f = f
        self.regularized = regularized
        self._cst = [Fraction(1)]
        self._mp_cache = {}

    def _extend(self, n):
        if n < len(self._cst):
            return
        target = max(n, 2 * len(self._cst))
        self._cst = cst_sequence(self.f, target, method="auto")

    def exact(self, n):
        self._extend(n)
        c = self._cst[n]
        return Fraction(c) if self.regularized else Fraction(c) / math.factorial(n)

    def __call__(self, n):
        cache = self._mp_cache.setdefault(mp.prec, {})
        if n not in cache:
            cache[n] = to_mpf(self.exact(n))
        return cache[n]


# ------------------------------------------------------ whitelisted inputs


@dataclass(frozen=True)
class SlowFunction:
    """Whitelisted ``g`` with ``y g'(y) = o(y^p)`` for every ``p > 0``.

    kinds: ``"constant"`` (value), ``"log_power"`` (``(log y)^k``),
    ``"loglog"`` (``log log y``).
    """

    kind: str
    k: int = 1
    value: object = 1

    def __post_init__(self):
        if self.kind not in ("constant", "log_power", "loglog"):
            raise WhitelistError(f"slowly varying function kind {self.kind!r} is not whitelisted")
        if self.kind == "log_power" and (not isinstance(self.k, int) or self.k < 0):
            raise WhitelistError("log_power needs a non-negative integer k")

    @property
    def domain_start(self):
        """Smallest integer ``N`` with ``g`` defined and smooth on ``[N, inf)``."""
        return {"constant": 0, "log_power": 1, "loglog": 2}[self.kind]

    def __call__(self, y):
        y = mpf(y)
        if self.kind == "constant":
            return to_mpf(self.value)
        if self.kind == "log_power":
            return mpmath.log(y) ** self.k
        return mpmath.log(mpmath.log(y))


@dataclass(frozen=True)
class SubpolynomialWeight:
    """Whitelisted subpolynomial sequence ``b_n``.

    kinds: ``"one"``, ``"constant"`` (value), ``"log_power"``
    (``log(n + 2)^k``), ``"alternating"`` (``(-1)^n``).
    """

    kind: str = "one"
    k: int = 1
    value: object = 1

    def __post_init__(self):
        if self.kind not in ("one", "constant", "log_power", "alternating"):
            raise WhitelistError(f"weight kind {self.kind!r} is not whitelisted")
        if self.kind == "log_power" and (not isinstance(self.k, int) or self.k < 0):
            raise WhitelistError("log_power needs a non-negative integer k")

    def __call__(self, n):
        if self.kind == "one":
            return mpf(1)
        if self.kind == "constant":
            return to_mpf(self.value)
        if self.kind == "alternating":
            return mpf(-1) if n % 2 else mpf(1)
        return mpmath.log(n + 2) ** self.k


def _check_whitelisted(obj, cls, what):
    if not isinstance(obj, cls):
        raise WhitelistError(f"{what} must be a {cls.__name__}; arbitrary callables are not accepted")


@dataclass(frozen=True)
class SubstitutionRecord:
    x: mpf
    discrepancy: mpf


def weighted_substitution_check(coeff, weight_b, g, f_poly, x_grid, policy=None):
    """``|sum a_n b_n g(n) x^n - g(f(x)) sum a_n b_n x^n| / I(x)`` on a grid.

    Sums run over ``n >= N`` where ``N`` is the start of the domain of
    ``g``. Returns ``(records, decreasing)`` where ``decreasing`` says
    whether the discrepancy strictly decreases along the grid.
    """
    _check_whitelisted(weight_b, SubpolynomialWeight, "weight_b")
    _check_whitelisted(g, SlowFunction, "g")
    policy = policy or TruncationPolicy()
    start = g.domain_start
    out = []
    for x in x_grid:
        ev = evaluate(coeff, x, policy)
        with mp.workprec(policy.prec + 16):
            # one sum of b(n) (g(n) - g(f(x))) terms avoids cancelling two large sums
            gfx = g(f_poly(ev.x))
            diff = ev.weighted_sum(lambda n: weight_b(n) * (g(n) - gfx), start=start)
            d = abs(diff) / ev.total
        out.append(SubstitutionRecord(ev.x, +d))
    decreasing = all(b.discrepancy < a.discrepancy for a, b in zip(out, out[1:]))
    return out, decreasing
