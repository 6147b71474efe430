"""Modified hypergeometric series and where their summands concentrate.

The series is

    H(x) = sum_{n'} a_{n'} prod Gamma(alpha_r n' + a_r) / prod Gamma(beta_s n' + b_s) (T x)^{kappa n'}

with ``kappa = sum beta_s - sum alpha_r`` a positive integer. Its summands
concentrate near ``n ~ kappa C^{1/kappa} T x`` where
``C = prod alpha_r^alpha_r prod beta_s^-beta_s``.
"""

import json
import random
from dataclasses import dataclass
from fractions import Fraction

import mpmath
from mpmath import mp, mpf

from ._mp import DEFAULT_PREC, exact_or_decimal, to_mpf
from ._validation import check_nu_window_range
from .concentration import ConcentrationConfig, default_grid, measure
from .exceptions import DomainValidationError, ModelFormatError, WhitelistError
from .location import LocationPolynomial

MODIFIER_KINDS = ("constant", "power", "rational")


@dataclass(frozen=True)
class Modifier:
    """Whitelisted positive sequence ``a_{n'}`` with ``a_{n'+1}/a_{n'} = 1 + O(1/n')``.

    * ``constant``: ``value``
    * ``power``: ``(n' + 1)^(-gamma)``
    * ``rational``: ``P(n') / Q(n')`` with coefficient lists (ascending)
      ``numerator`` and ``denominator``, both positive on ``n' >= 0``
    """

    kind: str = "constant"
    value: Fraction = Fraction(1)
    gamma: Fraction = Fraction(0)
    numerator: tuple = (Fraction(1),)
    denominator: tuple = (Fraction(1),)

    def __post_init__(self):
        if self.kind not in MODIFIER_KINDS:
            raise WhitelistError(f"modifier kind {self.kind!r} is not whitelisted")
        if self.kind == "constant" and Fraction(self.value) <= 0:
            raise DomainValidationError("constant modifier must be positive")
        if self.kind == "rational":
            # non-negative coefficients with a positive constant term keep P, Q > 0 on n' >= 0
            for name, poly in (("numerator", self.numerator), ("denominator", self.denominator)):
                if not poly or any(Fraction(c) < 0 for c in poly) or Fraction(poly[0]) <= 0:
                    raise WhitelistError(
                        f"rational modifier {name} needs non-negative coefficients and a positive constant term"
                    )

    @classmethod
    def from_json_dict(cls, obj):
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ModelFormatError("modifier: expected an object with field 'kind'")
        kind = obj["kind"]
        try:
            if kind == "constant":
                return cls("constant", value=exact_or_decimal(obj.get("value", "1")))
            if kind == "power":
                return cls("power", gamma=exact_or_decimal(obj["gamma"]))
            if kind == "rational":
                return cls(
                    "rational",
                    numerator=tuple(exact_or_decimal(c) for c in obj["numerator"]),
                    denominator=tuple(exact_or_decimal(c) for c in obj["denominator"]),
                )
        except KeyError as exc:
            raise ModelFormatError(f"modifier: missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ModelFormatError(f"modifier: bad numeric field ({exc})") from None
        raise WhitelistError(f"modifier kind {kind!r} is not whitelisted")

    def to_json_dict(self):
        if self.kind == "constant":
            return {"kind": "constant", "value": str(self.value)}
        if self.kind == "power":
            return {"kind": "power", "gamma": str(self.gamma)}
        return {
            "kind": "rational",
            "numerator": [str(c) for c in self.numerator],
            "denominator": [str(c) for c in self.denominator],
        }

    def log_value(self, n):
        if self.kind == "constant":
            return mpmath.log(to_mpf(self.value))
        if self.kind == "power":
            return -to_mpf(self.gamma) * mpmath.log(n + 1)
        return mpmath.log(_poly(self.numerator, n)) - mpmath.log(_poly(self.denominator, n))

    def __call__(self, n):
        return mpmath.exp(self.log_value(n))


def _poly(coeffs, n):
    n = mpf(n)
    total = mpf(0)
    for c in reversed(coeffs):
        total = total * n + to_mpf(Fraction(c))
    return total


@dataclass(frozen=True)
class HypergeomSpec:
    """Parameters of a modified hypergeometric series.

    ``upper`` holds ``(alpha_r, a_r)`` pairs, ``lower`` ``(beta_s, b_s)``
    pairs; all values are exact Fractions (decimal strings are accepted).
    Construction fails unless ``kappa`` is a positive integer.
    """

    upper: tuple
    lower: tuple
    T: Fraction = Fraction(1)
    modifier: Modifier = Modifier()

    def __post_init__(self):
        upper = tuple((exact_or_decimal(a), exact_or_decimal(b)) for a, b in self.upper)
        lower = tuple((exact_or_decimal(a), exact_or_decimal(b)) for a, b in self.lower)
        T = exact_or_decimal(self.T)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "T", T)
        if not lower:
            raise DomainValidationError("need at least one lower (beta, b) pair")
        if any(v <= 0 for pair in upper + lower for v in pair) or T <= 0:
            raise DomainValidationError("all hypergeometric parameters must be positive")
        kappa = sum(b for b, _ in lower) - sum(a for a, _ in upper)
        if kappa.denominator != 1 or kappa <= 0:
            raise DomainValidationError(f"kappa = sum(beta) - sum(alpha) = {kappa} must be a positive integer")

    @property
    def kappa(self):
        return int(sum(b for b, _ in self.lower) - sum(a for a, _ in self.upper))

    @property
    def C(self):
        """``prod alpha^alpha prod beta^-beta``; a Fraction when every exponent is an integer."""
        params = [(a, 1) for a, _ in self.upper] + [(b, -1) for b, _ in self.lower]
        if all(v.denominator == 1 for v, _ in params):
            out = Fraction(1)
            for v, sign in params:
                out *= v ** (sign * int(v))
            return out
        return mpmath.fprod(to_mpf(v) ** (sign * to_mpf(v)) for v, sign in params)

    @property
    def peak_coefficient(self):
        """``kappa C^{1/kappa} T`` at the current precision."""
        C = to_mpf(self.C) if isinstance(self.C, Fraction) else self.C
        return self.kappa * mpmath.root(C, self.kappa) * to_mpf(self.T)

    @classmethod
    def from_json_dict(cls, obj):
        if not isinstance(obj, dict):
            raise ModelFormatError("hypergeom: top-level value must be an object")
        try:
            upper = [tuple(p) for p in obj.get("upper", [])]
            lower = [tuple(p) for p in obj["lower"]]
        except KeyError:
            raise ModelFormatError("hypergeom: missing field 'lower'") from None
        except TypeError:
            raise ModelFormatError("hypergeom: 'upper'/'lower' must be lists of pairs") from None
        if any(len(p) != 2 for p in upper + lower):
            raise ModelFormatError("hypergeom: every upper/lower entry must be a pair")
        modifier = Modifier.from_json_dict(obj["modifier"]) if "modifier" in obj else Modifier()
        try:
            return cls(tuple(upper), tuple(lower), obj.get("T", "1"), modifier)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, DomainValidationError):
                raise
            raise ModelFormatError(f"hypergeom: bad numeric field ({exc})") from None

    def to_json_dict(self):
        return {
            "upper": [[str(a), str(b)] for a, b in self.upper],
            "lower": [[str(a), str(b)] for a, b in self.lower],
            "T": str(self.T),
            "modifier": self.modifier.to_json_dict(),
        }


def load_spec(path):
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"hypergeom: invalid JSON ({exc})") from None
    return HypergeomSpec.from_json_dict(obj)


def log_coefficient(spec, n_prime):
    n = mpf(n_prime)
    out = spec.modifier.log_value(n_prime)
    for a, b in spec.upper:
        out += mpmath.loggamma(to_mpf(a) * n + to_mpf(b))
    for a, b in spec.lower:
        out -= mpmath.loggamma(to_mpf(a) * n + to_mpf(b))
    return out + spec.kappa * n * mpmath.log(to_mpf(spec.T))


def coefficient(spec, n_prime, prec=DEFAULT_PREC):
    """Coefficient of ``x^{kappa n'}``, including the ``T^{kappa n'}`` factor.

    Evaluated as ``exp`` of a log-Gamma sum with 32 guard bits, which keeps
    the result within a few ulps of ``prec`` for ``n'`` in the thousands.
    """
    if n_prime < 0:
        raise DomainValidationError("n' must be non-negative")
    with mp.workprec(prec + 32):
        val = mpmath.exp(log_coefficient(spec, n_prime))
    return val


class HypergeomOracle:
    """Coefficients of ``H(x)`` in powers of ``x`` (zero unless ``kappa | n``)."""

    def __init__(self, spec):
        self.spec = spec
        self.period = spec.kappa
        self._cache = {}

    def __call__(self, n):
        if n % self.period:
            return mpf(0)
        key = (mp.prec, n)
        if key not in self._cache:
            self._cache[key] = coefficient(self.spec, n // self.period, mp.prec)
        return self._cache[key]


@dataclass(frozen=True)
class PeakPrediction:
    kappa: int
    C: object
    peak_coefficient: mpf
    location: LocationPolynomial
    window_nu_range: tuple = (0, Fraction(1, 2))


def predict_peak(spec):
    """Closed-form concentration location ``n ~ kappa C^{1/kappa} T x``."""
    pc = spec.peak_coefficient
    return PeakPrediction(spec.kappa, spec.C, pc, LocationPolynomial.linear(pc))


@dataclass(frozen=True)
class RegularityReport:
    ratio_deviation_max_times_n: mpf
    log_bound_constant: mpf
    M_estimate: mpf


def check_sequence_regularity(modifier, n_max=200, n_pairs=2000, seed=0, prec=DEFAULT_PREC):
    """Empirical checks of the regularity hypotheses on ``a_{n'}``.

    * ``sup n |a_{n+1}/a_n - 1|`` over ``1 <= n <= n_max``
    * ``sup |log a_n| / log n`` over ``2 <= n <= n_max``
    * smallest ``M`` with ``((m+1)/(n+1))^{-M} <= a_m/a_n <= ((m+1)/(n+1))^M``
      over ``n_pairs`` random pairs drawn with ``random.Random(seed)``
    """
    if not isinstance(modifier, Modifier):
        raise WhitelistError("modifier must be a whitelisted Modifier")
    with mp.workprec(prec):
        logs = [modifier.log_value(n) for n in range(n_max + 2)]
        dev = max(n * abs(mpmath.exp(logs[n + 1] - logs[n]) - 1) for n in range(1, n_max + 1))
        logb = max(abs(logs[n]) / mpmath.log(n) for n in range(2, n_max + 1))
        rng = random.Random(seed)
        M = mpf(0)
        for _ in range(n_pairs):
            m, n = rng.randrange(n_max + 1), rng.randrange(n_max + 1)
            if m == n:
                continue
            M = max(M, abs(logs[m] - logs[n]) / abs(mpmath.log(mpf(m + 1) / (n + 1))))
    return RegularityReport(dev, logb, M)


@dataclass(frozen=True)
class PackageConditionRecord:
    """Empirical witnesses for the two kernel conditions at one ``x``.

    ``q_max`` is the largest ``W_{N+j+1}/W_{N+j}`` over ``j >= floor(D N)``
    and ``K_by_c0`` maps each probed ``c0`` to the smallest ``K`` making the
    Gaussian-dominance condition hold for ``0 <= i <= N``,
    ``0 <= j <= D N``.
    """

    x: mpf
    N: int
    q_max: mpf
    K_by_c0: dict


def _log_kernel(kappa, Tx_log, n):
    return kappa * n * Tx_log - mpmath.loggamma(kappa * n + 1)


def check_package_conditions(spec, x_list, D, c0_probe=None, prec=DEFAULT_PREC):
    """Probe the kernel ``W_n(x) = (T x)^{kappa n} / Gamma(kappa n + 1)``.

    Uses ``N(x) = floor(T x / kappa)`` and ``x^{2 gamma} = x`` (``gamma = 1/2``).
    The default ``c0`` grid is ``c_d^2 / 8, c_d^2 / 4, c_d^2 / 2`` with
    ``c_d = T / kappa``; ``c0_probe`` adds one more value.
    """
    kappa = spec.kappa
    out = []
    with mp.workprec(prec):
        T = to_mpf(spec.T)
        cd = T / kappa
        probes = [cd**2 / 8, cd**2 / 4, cd**2 / 2]
        if c0_probe is not None:
            probes.append(to_mpf(c0_probe))
        D = to_mpf(D)
        for x in x_list:
            x = mpf(x)
            N = int(mpmath.floor(T * x / kappa))
            Tx_log = mpmath.log(T * x)
            base = _log_kernel(kappa, Tx_log, N)
            j0 = int(mpmath.floor(D * N))
            # kernel ratios decrease in j, so the first one is the max; scan a stretch to confirm
            ratios = [
                mpmath.exp(_log_kernel(kappa, Tx_log, N + j + 1) - _log_kernel(kappa, Tx_log, N + j))
                for j in range(j0, j0 + max(50, N) + 1)
            ]
            q_max = max(ratios)
            K = {}
            jmax = int(mpmath.floor(D * N))
            for c0 in probes:
                worst = mpf(0)
                for i in range(0, N + 1):
                    worst = max(worst, _log_kernel(kappa, Tx_log, N - i) - base + c0 * i * i / x)
                for j in range(0, jmax + 1):
                    worst = max(worst, _log_kernel(kappa, Tx_log, N + j) - base + c0 * j * j / x)
                K[c0] = mpmath.exp(worst)
            out.append(PackageConditionRecord(x, N, q_max, K))
    return out


def evaluate_and_measure(spec, nu, x_grid=None, policy=None, exploratory=False):
    """Measure concentration of ``H`` at the predicted location and window.

    Location ``f(x) = kappa C^{1/kappa} T x``, window constant
    ``(kappa C^{1/kappa} T)^{-nu}``. ``nu`` must lie in ``(0, 1/2)`` unless
    ``exploratory`` is set. Without a grid, :func:`default_grid` picks one.
    """
    prec = policy.prec if policy else DEFAULT_PREC
    with mp.workprec(prec):
        nu = to_mpf(nu) if exploratory else check_nu_window_range(nu)
        pc = spec.peak_coefficient
        config = ConcentrationConfig(LocationPolynomial.linear(pc), pc ** (-nu), nu)
        if x_grid is None:
            x_grid = default_grid(config)
        return measure(HypergeomOracle(spec), config, x_grid, policy)
