"""Measuring how the summands of a power series concentrate.

For ``I(x) = sum a_n x^n`` with non-negative ``a_n``, a location polynomial
``f`` and a window ``C x^{-nu}`` put ``n_-(x) = floor(f(x)(1 - C x^{-nu}))``
and ``n_+(x) = floor(f(x)(1 + C x^{-nu}))``. The head ratio is
``sum_{n <= n_-} a_n x^n / I(x)`` and the tail ratio
``sum_{n >= n_+} a_n x^n / I(x)``. Exponential concentration means both
are ``O(exp(-alpha x^beta))``; this module measures them on finite grids
and classifies the trend. A verdict is never a proof.
"""

import math
import warnings
from dataclasses import dataclass, replace

import mpmath
import numpy as np
from mpmath import mp, mpf
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._mp import DEFAULT_PREC, lstsq, to_mpf
from ._validation import check_grid
from .exceptions import DegenerateWindowError, DomainValidationError
from .location import LocationPolynomial
from .series import SubpolynomialWeight, TruncationPolicy, _check_whitelisted, evaluate

EXPONENTIAL = "consistent-with-exponential"
SUPERPOLYNOMIAL = "consistent-with-superpolynomial-only"
INCONSISTENT = "inconsistent"
INCONCLUSIVE = "inconclusive"

FIT_RATIO_THRESHOLD = 1e-2
FIT_MIN_POINTS = 4
FIT_RESIDUAL_THRESHOLD = 0.15
DEFAULT_P_LIST = (1, 2, 4, 8)


@dataclass(frozen=True)
class ConcentrationConfig:
    """Location polynomial and window ``C x^{-nu}``.

    ``window_C`` and ``window_nu`` accept decimal strings so that they are
    parsed at the working precision rather than through a double.
    """

    location_poly: LocationPolynomial
    window_C: object
    window_nu: object
    claimed_alpha: object = None
    claimed_beta: object = None

    def __post_init__(self):
        if not isinstance(self.location_poly, LocationPolynomial):
            raise DomainValidationError("location_poly must be a LocationPolynomial")
        if to_mpf(self.window_C) <= 0 or to_mpf(self.window_nu) <= 0:
            raise DomainValidationError("window parameters must be positive")
        if self.location_poly.degree < 1:
            warnings.warn("constant location polynomial: superpolynomial concentration is impossible")
        if to_mpf(self.window_nu) > self.location_poly.degree:
            warnings.warn(
                f"window_nu={self.window_nu} exceeds deg f={self.location_poly.degree}; "
                "concentration with this window is impossible"
            )

    def window(self, x):
        """``(n_-(x), n_+(x))`` computed with an exact floor of the mpf value."""
        x = mpf(x)
        fx = self.location_poly(x)
        w = to_mpf(self.window_C) * x ** (-to_mpf(self.window_nu))
        return int(mpmath.floor(fx * (1 - w))), int(mpmath.floor(fx * (1 + w)))


@dataclass(frozen=True)
class GridRecord:
    x: mpf
    n_minus: int
    n_plus: int
    head_ratio: mpf
    tail_ratio: mpf
    peak_index: int
    log_total: mpf


@dataclass(frozen=True)
class SideFit:
    """``-log(ratio) ~ alpha x^beta`` fitted on one side of the window."""

    alpha: float
    beta: float
    residual: float
    n_points: int


@dataclass(frozen=True)
class ConcentrationReport:
    grid: tuple
    records: tuple
    head_fit: SideFit
    tail_fit: SideFit
    verdict: str
    peak_onset: object
    trend_by_p: dict

    @property
    def fitted_alpha_head(self):
        return self.head_fit.alpha if self.head_fit else math.nan

    @property
    def fitted_beta_head(self):
        return self.head_fit.beta if self.head_fit else math.nan

    @property
    def fitted_alpha_tail(self):
        return self.tail_fit.alpha if self.tail_fit else math.nan

    @property
    def fitted_beta_tail(self):
        return self.tail_fit.beta if self.tail_fit else math.nan


def _grid_record(ev, config):
    n_minus, n_plus = config.window(ev.x)
    with mp.workprec(ev.prec):
        head = ev.head_mass(n_minus) / ev.total
        tail = ev.tail_mass(n_plus) / ev.total
        return GridRecord(ev.x, n_minus, n_plus, head, tail, ev.peak_index, mpmath.log(ev.total))


def _fit_side(xs, ratios):
    pts = [(x, r) for x, r in zip(xs, ratios) if 0 < r < FIT_RATIO_THRESHOLD]
    if len(pts) < FIT_MIN_POINTS:
        return None
    with mp.workprec(DEFAULT_PREC):
        rows = [(1, mpmath.log(x)) for x, _ in pts]
        ys = [mpmath.log(-mpmath.log(r)) for _, r in pts]
        (a, b), rms = lstsq(rows, ys)
        return SideFit(float(mpmath.exp(a)), float(b), float(rms), len(pts))


def eventually_decreasing(values):
    """Strictly decreasing over the last ``max(3, ceil(len/2))`` values."""
    k = max(3, math.ceil(len(values) / 2))
    tail = list(values)[-k:]
    return len(tail) >= 2 and all(b < a for a, b in zip(tail, tail[1:]))


def _side_decreasing(values):
    # zero masses cannot grow, so 0 -> 0 counts as decreasing
    k = max(3, math.ceil(len(values) / 2))
    tail = list(values)[-k:]
    return all(b < a or b == 0 for a, b in zip(tail, tail[1:]))


def _onset(records):
    """Smallest grid ``x`` from which the peak index stays strictly inside the window."""
    onset = None
    for r in reversed(records):
        if r.n_minus < r.peak_index < r.n_plus:
            onset = r.x
        else:
            break
    return onset


def _classify(records, head_fit, tail_fit, p_list):
    heads = [r.head_ratio for r in records]
    tails = [r.tail_ratio for r in records]
    trend = {}
    for p in p_list:
        trend[p] = eventually_decreasing(
            [h * r.x**p for h, r in zip(heads, records)]
        ) and eventually_decreasing([t * r.x**p for t, r in zip(tails, records)])
    last = records[-1]
    if last.head_ratio >= 0.5 or last.tail_ratio >= 0.5:
        return INCONSISTENT, trend
    if not (_side_decreasing(heads) and _side_decreasing(tails)):
        return INCONSISTENT, trend
    fits_ok = all(
        fit is not None and fit.beta > 0 and fit.alpha > 0 and fit.residual <= FIT_RESIDUAL_THRESHOLD
        for fit in (head_fit, tail_fit)
    )
    if fits_ok:
        return EXPONENTIAL, trend
    if all(trend.values()) and (head_fit is not None and tail_fit is not None):
        return SUPERPOLYNOMIAL, trend
    return INCONCLUSIVE, trend


def measure(coeff, config, x_grid, policy=None, p_list=DEFAULT_P_LIST, min_points=4):
    """Head/tail ratios on ``x_grid``, fitted ``(alpha, beta)`` and a verdict.

    ``beta`` is the least-squares slope of ``log(-log ratio)`` against
    ``log x`` over grid points with ``ratio < 1e-2``; fewer than four such
    points leave that side unfitted.

    Raises
    ------
    DegenerateWindowError
        If head and tail ratios vanish at every grid point.
    """
    xs = check_grid(x_grid, min_points=min_points)
    policy = policy or TruncationPolicy()
    records = []
    with mp.workprec(policy.prec):
        for x in xs:
            records.append(_grid_record(evaluate(coeff, x, policy), config))
    if all(r.head_ratio == 0 and r.tail_ratio == 0 for r in records):
        raise DegenerateWindowError("window swallows the whole series at every grid point")
    head_fit = _fit_side([r.x for r in records], [r.head_ratio for r in records])
    tail_fit = _fit_side([r.x for r in records], [r.tail_ratio for r in records])
    verdict, trend = _classify(records, head_fit, tail_fit, p_list)
    return ConcentrationReport(
        tuple(r.x for r in records), tuple(records), head_fit, tail_fit, verdict, _onset(records), trend
    )


def default_grid(config, points=8, ratio=2, min_span=5):
    """Geometric grid starting where the window spans at least ``min_span`` indices."""
    C, nu = to_mpf(config.window_C), to_mpf(config.window_nu)

    def span(x):
        return config.location_poly(x) * C * mpf(x) ** (-nu)

    lo, hi = mpf("1e-3"), mpf(1)
    while span(hi) < min_span:
        hi *= 2
        if hi > mpf(10) ** 12:
            raise DomainValidationError("window never spans enough indices")
    for _ in range(200):
        mid = (lo + hi) / 2
        if span(mid) >= min_span:
            hi = mid
        else:
            lo = mid
    start = mpmath.ceil(hi * 1000) / 1000
    return [start * mpf(ratio) ** k for k in range(points)]


@dataclass(frozen=True)
class WindowTransform:
    config: ConcentrationConfig
    inherited: bool


def window_transform(config, new_C, new_nu):
    """Widen the window; ``inherited`` says whether concentration carries over.

    Concentration is inherited when ``new_C >= C`` and ``0 < new_nu <= nu``.
    """
    if to_mpf(new_C) <= 0 or to_mpf(new_nu) <= 0:
        raise DomainValidationError("window parameters must be positive")
    inherited = to_mpf(new_C) >= to_mpf(config.window_C) and to_mpf(new_nu) <= to_mpf(config.window_nu)
    return WindowTransform(replace(config, window_C=new_C, window_nu=new_nu), inherited)


def location_equivalence(f, g):
    """True iff ``f`` and ``g`` share degree and leading coefficient."""
    return f.degree == g.degree and f.leading == g.leading


@dataclass(frozen=True)
class Lem0Diagnostics:
    """Growth diagnostics for a concentrating series.

    ``mu_over_xd`` and ``logI_over_xd`` are per-grid values of
    ``log mu(x) / x^d`` and ``log I(x) / x^d`` with extrapolated limits
    (fit against ``1, log x / x^d, 1/x^d``); ``target_growth`` is
    ``c_d / d``. ``root_gamma`` maps nonzero ``n`` to
    ``(a_n Gamma(n/d + 1))^{1/n}`` with ``root_gamma_limsup`` the max over
    the upper half of the range and ``target_root`` ``(c_d/d)^{1/d}``.
    """

    grid: tuple
    mu_over_xd: tuple
    logI_over_xd: tuple
    mu_over_xd_limit: mpf
    logI_over_xd_limit: mpf
    target_growth: mpf
    root_gamma: dict
    root_gamma_limsup: mpf
    root_gamma_extrapolated: mpf
    target_root: mpf


def root_gamma_sequence(coeff, d, n_max, prec=DEFAULT_PREC):
    """``(a_n Gamma(n/d + 1))^{1/n}`` over nonzero ``a_n``, ``1 <= n <= n_max``.

    When the oracle has an ``exact`` method and ``d`` divides ``n`` the
    product is formed exactly, so e.g. ``a_n = 1/n!`` gives exactly 1.
    """
    exact = getattr(coeff, "exact", None)
    out = {}
    with mp.workprec(prec + 16):
        for n in range(1, n_max + 1):
            if exact is not None and n % d == 0:
                a = exact(n)
                if a == 0:
                    continue
                prod = a * math.factorial(n // d)
                if prod == 1:
                    out[n] = mpf(1)
                    continue
                out[n] = mpmath.exp((mpmath.log(prod.numerator) - mpmath.log(prod.denominator)) / n)
                continue
            a = mpf(coeff(n))
            if a == 0:
                continue
            out[n] = mpmath.exp((mpmath.log(a) + mpmath.loggamma(mpf(n) / d + 1)) / n)
    return out


def lem0_diagnostics(coeff, config, x_grid, n_root_max=400, policy=None):
    policy = policy or TruncationPolicy()
    xs = check_grid(x_grid, min_points=3)
    poly = config.location_poly
    d = poly.degree
    with mp.workprec(policy.prec):
        cd = poly.leading
        mus, logs = [], []
        for x in xs:
            ev = evaluate(coeff, x, policy)
            xd = ev.x**d
            mus.append(mpmath.log(ev.peak_value) / xd)
            logs.append(mpmath.log(ev.total) / xd)
        rows = [(1, mpmath.log(x) / x**d, 1 / x**d) for x in xs]
        (mu_lim, _, _), _ = lstsq(rows, mus)
        (log_lim, _, _), _ = lstsq(rows, logs)
        seq = root_gamma_sequence(coeff, d, n_root_max, policy.prec)
        ns = sorted(seq)
        upper = [n for n in ns if n >= ns[-1] // 2] if ns else []
        limsup = max((seq[n] for n in upper), default=mpf(0))
        extrap = limsup
        if len(upper) >= 4 and any(seq[n] != seq[upper[0]] for n in upper):
            rows = [(1, mpmath.log(n) / n, mpf(1) / n) for n in upper]
            (L, _, _), _ = lstsq(rows, [mpmath.log(seq[n]) for n in upper])
            extrap = mpmath.exp(L)
        return Lem0Diagnostics(
            tuple(xs),
            tuple(mus),
            tuple(logs),
            mu_lim,
            log_lim,
            cd / d,
            seq,
            limsup,
            extrap,
            (cd / d) ** (mpf(1) / d),
        )


@dataclass(frozen=True)
class WeightedTailRow:
    x: mpf
    p: float
    head_scaled: mpf
    tail_scaled: mpf


def weighted_tail_check(coeff, weight_b, config, x_grid, p_list=DEFAULT_P_LIST, policy=None):
    """Weighted head/tail ratios times ``x^p``.

    Returns ``(rows, verdicts)``; ``verdicts[p]`` is a pair of flags
    ``(strictly_decreasing, eventually_decreasing)`` over the grid for
    the larger of the two scaled sides.
    """
    _check_whitelisted(weight_b, SubpolynomialWeight, "weight_b")
    policy = policy or TruncationPolicy()
    xs = check_grid(x_grid, min_points=2)
    rows = []
    with mp.workprec(policy.prec):
        per_x = []
        for x in xs:
            ev = evaluate(coeff, x, policy)
            n_minus, n_plus = config.window(ev.x)
            head = abs(ev.weighted_sum(weight_b, 0, n_minus)) / ev.total
            tail = abs(ev.weighted_sum(weight_b, n_plus)) / ev.total if n_plus < ev.n_terms else mpf(0)
            per_x.append((ev.x, head, tail))
        verdicts = {}
        for p in p_list:
            scaled = []
            for x, head, tail in per_x:
                row = WeightedTailRow(x, p, head * x**p, tail * x**p)
                rows.append(row)
                scaled.append(row)
            heads = [r.head_scaled for r in scaled]
            tails = [r.tail_scaled for r in scaled]
            strict = all(b < a for a, b in zip(heads, heads[1:])) and all(b < a for a, b in zip(tails, tails[1:]))
            verdicts[p] = (strict, eventually_decreasing(heads) and eventually_decreasing(tails))
    return rows, verdicts


def head_tail_subset_monotone(evaluation, narrow, wide):
    """Enlarging the window never increases head or tail mass at this ``x``.

    Compares exact index sets first and then the stored sums, returning
    ``(head_ok, tail_ok)``.
    """
    nm_n, np_n = narrow.window(evaluation.x)
    nm_w, np_w = wide.window(evaluation.x)
    head_ok = nm_w <= nm_n and evaluation.head_mass(nm_w) <= evaluation.head_mass(nm_n)
    tail_ok = np_w >= np_n and evaluation.tail_mass(np_w) <= evaluation.tail_mass(np_n)
    return head_ok, tail_ok


def floor_multiplicity_holds(u, kappa):
    """``floor(k u) < k floor(u) + k`` and ``floor(k u) >= k floor(u)`` for ``u >= 0``."""
    u = mpf(u)
    fu = int(mpmath.floor(u))
    fku = int(mpmath.floor(kappa * u))
    return fku < kappa * fu + kappa, fku >= kappa * fu


def power_two_tail(h, K, prec=DEFAULT_PREC):
    """``sum_{n > K} h(n) 2^{-n}`` summed until terms fall below ``2^-(prec+64)``."""
    with mp.workprec(prec + 32):
        total = mpf(0)
        n = K + 1
        scale = mpf(2) ** (-n)
        while True:
            t = mpf(h(n)) * scale
            total += t
            if n > 2 * K + 64 and t < total * mpf(2) ** (-(prec + 64)):
                return total
            n += 1
            scale /= 2


class ConcentrationEstimator(BaseEstimator):
    """Estimator facade over :func:`measure`.

    ``fit(X)`` takes the grid of ``x`` values (``y`` is ignored) and sets
    ``report_``, ``alpha_``/``beta_`` (head side, then tail side) and
    ``verdict_``. ``transform(X)`` returns head and tail ratios as an
    ``(n, 2)`` float array.
    """

    def __init__(self, coeff=None, location=None, window_C="1", window_nu="0.25", prec=DEFAULT_PREC):
        self.coeff = coeff
        self.location = location
        self.window_C = window_C
        self.window_nu = window_nu
        self.prec = prec

    def _config(self):
        loc = self.location
        if not isinstance(loc, LocationPolynomial):
            loc = LocationPolynomial(tuple(loc))
        return ConcentrationConfig(loc, self.window_C, self.window_nu)

    def fit(self, X, y=None):
        grid = [mpf(v) if not isinstance(v, str) else v for v in np.asarray(X, dtype=object).reshape(-1)]
        report = measure(self.coeff, self._config(), grid, TruncationPolicy(prec=self.prec), min_points=2)
        self.report_ = report
        self.alpha_ = (report.fitted_alpha_head, report.fitted_alpha_tail)
        self.beta_ = (report.fitted_beta_head, report.fitted_beta_tail)
        self.verdict_ = report.verdict
        return self

    def transform(self, X):
        check_is_fitted(self, "report_")
        config = self._config()
        policy = TruncationPolicy(prec=self.prec)
        out = []
        with mp.workprec(self.prec):
            for x in np.asarray(X, dtype=object).reshape(-1):
                rec = _grid_record(evaluate(self.coeff, x, policy), config)
                out.append((float(rec.head_ratio), float(rec.tail_ratio)))
        return np.array(out, dtype=float)
