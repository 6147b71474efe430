"""Exact sparse Laurent polynomials with non-negative rational coefficients.

A :class:`LaurentPolynomial` is a weak Landau-Ginzburg model ``f`` in ``m``
variables. The operations needed downstream are powers, constant terms of
powers (the quantum period coefficients are ``Cst(f^n) / n!``), a Newton
polytope check for convenience, and the index ``r`` of ``f``.

Exponent vectors are tuples of Python ints, so exponent overflow cannot
occur. Coefficients are :class:`fractions.Fraction`.
"""

import hashlib
import itertools
import json
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType

from ._exact_lp import integer_rank, is_feasible, pivot_columns, solve_rational
from .exceptions import (
    DimensionMismatchError,
    DomainValidationError,
    IndexDetectionError,
    ModelFormatError,
    NegativeCoefficientError,
)

DEFAULT_INDEX_HORIZON = 60


def parse_coefficient(text):
    """Parse ``"p/q"`` or a decimal integer string into a Fraction.

    Plain ints are accepted too. Floats are rejected: they would smuggle
    binary rounding into exact data.
    """
    if isinstance(text, bool):
        raise ModelFormatError(f"coefficient must be a string or int, got {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, Fraction):
        return text
    if not isinstance(text, str):
        raise ModelFormatError(f"coefficient must be a string or int, got {text!r}")
    s = text.strip()
    parts = s.split("/")
    try:
        if len(parts) == 1:
            return Fraction(int(parts[0]))
        if len(parts) == 2:
            num, den = int(parts[0]), int(parts[1])
            if den == 0:
                raise ModelFormatError(f"zero denominator in coefficient {text!r}")
            return Fraction(num, den)
    except ValueError:
        pass
    raise ModelFormatError(f"cannot parse coefficient {text!r}")


class LaurentPolynomial:
    """Immutable sparse Laurent polynomial.

    Parameters
    ----------
    num_vars : int
        Number of variables ``m >= 1``.
    terms : mapping
        Exponent tuple -> coefficient. Zero coefficients are dropped;
        negative ones raise :class:`NegativeCoefficientError`.

    Examples
    --------
    >>> f = LaurentPolynomial(1, {(1,): 1, (-1,): 1})
    >>> (f * f).constant_term()
    Fraction(2, 1)
    """

    __slots__ = ("_num_vars", "_terms", "_map", "_hash")

    def __init__(self, num_vars, terms):
        if not isinstance(num_vars, int) or num_vars < 1:
            raise DomainValidationError(f"num_vars must be a positive integer, got {num_vars!r}")
        clean = {}
        for exp, coeff in dict(terms).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != num_vars:
                raise DimensionMismatchError(
                    f"exponent {exp} has length {len(exp)}, expected {num_vars}"
                )
            coeff = Fraction(coeff)
            if coeff < 0:
                raise NegativeCoefficientError(f"coefficient of {exp} is negative: {coeff}")
            if coeff != 0:
                clean[exp] = coeff
        self._num_vars = num_vars
        self._terms = tuple(sorted(clean.items()))
        self._map = MappingProxyType(dict(self._terms))
        self._hash = None

    @classmethod
    def _from_trusted(cls, num_vars, mapping):
        obj = cls.__new__(cls)
        obj._num_vars = num_vars
        obj._terms = tuple(sorted((e, c) for e, c in mapping.items() if c != 0))
        obj._map = MappingProxyType(dict(obj._terms))
        obj._hash = None
        return obj

    @classmethod
    def one(cls, num_vars):
        return cls._from_trusted(num_vars, {(0,) * num_vars: Fraction(1)})

    @property
    def num_vars(self):
        return self._num_vars

    @property
    def terms(self):
        """Read-only exponent -> coefficient mapping."""
        return self._map

    def items(self):
        """Terms in canonical (lexicographic exponent) order."""
        return self._terms

    @property
    def support(self):
        return [e for e, _ in self._terms]

    def is_zero(self):
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, LaurentPolynomial):
            return NotImplemented
        return self._num_vars == other._num_vars and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._num_vars, self._terms))
        return self._hash

    def __mul__(self, other):
        return multiply(self, other)

    def __pow__(self, n):
        return power(self, n)

    def __repr__(self):
        if not self._terms:
            return "LaurentPolynomial(0)"
        names = ["x", "y", "z"] if self._num_vars <= 3 else [f"x{i + 1}" for i in range(self._num_vars)]
        parts = []
        for exp, c in self._terms:
            mono = "*".join(
                names[i] if e == 1 else f"{names[i]}^{e}" for i, e in enumerate(exp) if e != 0
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            else:
                parts.append(f"{c}*{mono}")
        return "LaurentPolynomial(" + " + ".join(parts) + ")"

    def constant_term(self):
        return constant_term(self)

    def scale(self, factor):
        """Multiply every coefficient by a positive rational ``factor``."""
        factor = Fraction(factor)
        if factor <= 0:
            raise DomainValidationError("scale factor must be positive")
        return LaurentPolynomial._from_trusted(
            self._num_vars, {e: c * factor for e, c in self._terms}
        )

    def rescale_variables(self, factors):
        """Return ``f(lambda_1 x_1, ..., lambda_m x_m)`` for positive rationals."""
        factors = [Fraction(v) for v in factors]
        if len(factors) != self._num_vars or any(v <= 0 for v in factors):
            raise DomainValidationError("need one positive factor per variable")
        out = {}
        for exp, c in self._terms:
            w = c
            for lam, e in zip(factors, exp):
                w *= lam**e
            out[exp] = w
        return LaurentPolynomial._from_trusted(self._num_vars, out)

    def __call__(self, point):
        """Evaluate at a point of the torus (any numeric type supporting ``**``)."""
        if len(point) != self._num_vars:
            raise DimensionMismatchError("point has wrong dimension")
        total = 0
        for exp, c in self._terms:
            mono = 1
            for xi, e in zip(point, exp):
                if e:
                    mono = mono * xi**e
            total = total + _coerce(c, point) * mono
        return total

    def to_json_dict(self):
        return {
            "num_vars": self._num_vars,
            "terms": [{"exp": list(e), "coeff": _fraction_str(c)} for e, c in self._terms],
        }

    def digest(self):
        """Stable SHA-256 of the canonical JSON form (used in report headers)."""
        blob = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _coerce(c, point):
    # keep Fraction exact for rational points, otherwise convert via the point's type
    sample = point[0] if point else None
    if sample is None or isinstance(sample, (int, Fraction)):
        return c
    try:
        return type(sample)(c.numerator) / c.denominator
    except TypeError:
        return c.numerator / c.denominator


def _fraction_str(c):
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def laurent_from_json_dict(obj):
    """Build a model from the JSON object form.

    ``{"num_vars": m, "terms": [{"exp": [...], "coeff": "p/q"}, ...]}``
    Duplicate exponent vectors are rejected.
    """
    if not isinstance(obj, dict):
        raise ModelFormatError("model: top-level value must be an object")
    if "num_vars" not in obj:
        raise ModelFormatError("model: missing field 'num_vars'")
    m = obj["num_vars"]
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise ModelFormatError("model: field 'num_vars' must be a positive integer")
    terms = obj.get("terms")
    if not isinstance(terms, list):
        raise ModelFormatError("model: field 'terms' must be a list")
    out = {}
    for i, t in enumerate(terms):
        if not isinstance(t, dict):
            raise ModelFormatError(f"model: terms[{i}] must be an object")
        if "exp" not in t:
            raise ModelFormatError(f"model: terms[{i}] missing field 'exp'")
        if "coeff" not in t:
            raise ModelFormatError(f"model: terms[{i}] missing field 'coeff'")
        exp = t["exp"]
        if (
            not isinstance(exp, list)
            or len(exp) != m
            or not all(isinstance(e, int) and not isinstance(e, bool) for e in exp)
        ):
            raise ModelFormatError(f"model: terms[{i}].exp must be a list of {m} integers")
        try:
            coeff = parse_coefficient(t["coeff"])
        except ModelFormatError as exc:
            raise ModelFormatError(f"model: terms[{i}].coeff: {exc}") from None
        key = tuple(exp)
        if key in out:
            raise ModelFormatError(f"model: terms[{i}].exp duplicates exponent {list(key)}")
        out[key] = coeff
    return LaurentPolynomial(m, out)


def load_model(path):
    """Read a model JSON file. I/O errors propagate as ``OSError``."""
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"model: invalid JSON ({exc})") from None
    return laurent_from_json_dict(obj)


def multiply(a, b):
    """Exact product of two Laurent polynomials in the same variables."""
    if a.num_vars != b.num_vars:
        raise DimensionMismatchError(f"cannot multiply {a.num_vars}- and {b.num_vars}-variable polynomials")
    acc = defaultdict(Fraction)
    for ea, ca in a.items():
        for eb, cb in b.items():
            acc[tuple(x + y for x, y in zip(ea, eb))] += ca * cb
    return LaurentPolynomial._from_trusted(a.num_vars, acc)


def power(f, n):
    """``f**n`` by binary powering; ``f**0`` is the constant 1."""
    if not isinstance(n, int) or n < 0:
        raise DomainValidationError(f"exponent must be a non-negative integer, got {n!r}")
    result = LaurentPolynomial.one(f.num_vars)
    base = f
    while n:
        if n & 1:
            result = multiply(result, base)
        n >>= 1
        if n:
            base = multiply(base, base)
    return result


def constant_term(f):
    """Coefficient of the zero exponent vector (0 if absent)."""
    return f.terms.get((0,) * f.num_vars, Fraction(0))


def _integer_scaling(f):
    """Return (support, integer coefficients, common denominator)."""
    den = 1
    for _, c in f.items():
        den = den * c.denominator // math.gcd(den, c.denominator)
    support = [e for e, _ in f.items()]
    ints = [int(c * den) for _, c in f.items()]
    return support, ints, den


def _cst_by_multiplication(f, n_max):
    # Packed-key convolution: exponent vectors are encoded as one integer
    # in a mixed radix wide enough for degree n_max, so a shift is an add.
    support, ints, den = _integer_scaling(f)
    m = f.num_vars
    reach = max((abs(e) for v in support for e in v), default=0) * max(n_max, 1)
    base = 2 * reach + 1
    radix = [base**i for i in range(m)]
    origin = sum(reach * r for r in radix)
    shifts = [(sum(e * r for e, r in zip(v, radix)), c) for v, c in zip(support, ints)]

    out = [Fraction(1)]
    current = {origin: 1}
    den_pow = 1
    for _ in range(n_max):
        nxt = defaultdict(int)
        for key, c in current.items():
            for s, cs in shifts:
                nxt[key + s] += c * cs
        current = nxt
        den_pow *= den
        out.append(Fraction(current.get(origin, 0), den_pow))
    return out


class _CompositionSolver:
    """Constant terms of ``f^n`` by summing multinomials over compositions.

    ``Cst(f^n) = sum n!/prod(k_j!) prod(c_j^k_j)`` over ``k >= 0`` with
    ``sum k_j = n`` and ``sum k_j l_j = 0``. Solving the linear constraints
    for ``m + 1`` pivot multiplicities leaves ``s - m - 1`` free ones to
    enumerate, which is cheap when the support is small.
    """

    def __init__(self, f):
        self.support, self.ints, self.den = _integer_scaling(f)
        s = len(self.support)
        m = f.num_vars
        A = [[v[i] for v in self.support] for i in range(m)] + [[1] * s]
        piv = pivot_columns(A)
        if len(piv) < m + 1:
            raise DomainValidationError("support is not affinely full-dimensional")
        self.pivots = piv
        self.free = [j for j in range(s) if j not in piv]
        AP = [[A[i][j] for j in piv] for i in range(m + 1)]
        u = solve_rational(AP, [0] * m + [1])
        ws = [solve_rational(AP, [A[i][j] for i in range(m + 1)]) for j in self.free]
        scale = 1
        for val in itertools.chain(u, *ws):
            scale = scale * val.denominator // math.gcd(scale, val.denominator)
        self.scale = scale
        self.U = [int(val * scale) for val in u]
        self.W = [[int(val * scale) for val in w] for w in ws]
        self._fact = [1]

    @property
    def free_dim(self):
        return len(self.free)

    def _factorial(self, n):
        fact = self._fact
        while len(fact) <= n:
            fact.append(fact[-1] * len(fact))
        return fact[n]

    def __call__(self, n):
        if n == 0:
            return Fraction(1)
        total = 0
        fn = self._factorial(n)
        scale = self.scale
        nf = len(self.free)
        for kf in _bounded_compositions(nf, n):
            kp = []
            for idx in range(len(self.pivots)):
                num = n * self.U[idx] - sum(k * w[idx] for k, w in zip(kf, self.W))
                if num < 0 or num % scale:
                    break
                kp.append(num // scale)
            else:
                term = fn
                weight = 1
                for j, k in zip(self.pivots, kp):
                    term //= self._factorial(k)
                    weight *= self.ints[j] ** k
                for j, k in zip(self.free, kf):
                    term //= self._factorial(k)
                    weight *= self.ints[j] ** k
                total += term * weight
        return Fraction(total, self.den**n)


def _bounded_compositions(dim, n):
    """All non-negative integer vectors of length ``dim`` with sum <= n."""
    if dim == 0:
        yield ()
        return
    for first in range(n + 1):
        for rest in _bounded_compositions(dim - 1, n - first):
            yield (first,) + rest


def constant_term_of_power(f, n):
    """``Cst(f^n)`` for a single ``n`` without forming ``f^n``."""
    if n < 0:
        raise DomainValidationError("n must be non-negative")
    try:
        solver = _CompositionSolver(f)
    except DomainValidationError:
        return constant_term(power(f, n))
    return solver(n)


def cst_sequence(f, n_max, method="multiply"):
    """Constant terms ``Cst(f^n)`` for ``n = 0..n_max``.

    ``method="multiply"`` runs the running power through repeated
    multiplication by ``f``. ``"compositions"`` sums multinomial weights
    over the solutions of the balancing equations, which is far faster for
    models whose support has at most ``m + 2`` points. ``"auto"`` picks the
    composition route when at most one multiplicity is free.
    """
    if not isinstance(n_max, int) or n_max < 0:
        raise DomainValidationError(f"n_max must be a non-negative integer, got {n_max!r}")
    if f.is_zero():
        return [Fraction(1)] + [Fraction(0)] * n_max
    if method == "auto":
        try:
            solver = _CompositionSolver(f)
        except DomainValidationError:
            method = "multiply"
        else:
            method = "compositions" if solver.free_dim <= 1 else "multiply"
    if method == "multiply":
        return _cst_by_multiplication(f, n_max)
    if method == "compositions":
        solver = _CompositionSolver(f)
        return [solver(n) for n in range(n_max + 1)]
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class NewtonPolytopeInfo:
    vertices: tuple
    contains_origin_interior: bool
    support_lattice_rank: int


def newton_info(f):
    """Vertices, interior-origin test and lattice rank of the support.

    The origin is interior exactly when the support spans ``R^m`` and the
    origin is a strictly positive combination of all support points; both
    are decided in exact arithmetic.
    """
    if f.is_zero():
        raise DomainValidationError("Newton polytope of the zero polynomial is empty")
    pts = f.support
    m = f.num_vars
    rank = integer_rank(pts)

    vertices = []
    for i, v in enumerate(pts):
        others = pts[:i] + pts[i + 1 :]
        if not others:
            vertices.append(v)
            continue
        A = [[u[k] for u in others] for k in range(m)] + [[1] * len(others)]
        if not is_feasible(A, list(v) + [1]):
            vertices.append(v)

    interior = False
    if rank == m:
        # lambda = 1 + mu with mu >= 0 and sum lambda_v v = 0
        A = [[v[k] for v in pts] for k in range(m)]
        b = [-sum(v[k] for v in pts) for k in range(m)]
        interior = is_feasible(A, b)
    return NewtonPolytopeInfo(tuple(vertices), interior, rank)


def is_convenient(f):
    if f.is_zero():
        return False
    info = newton_info(f)
    return info.contains_origin_interior and info.support_lattice_rank == f.num_vars


def detect_index(cst, horizon=DEFAULT_INDEX_HORIZON):
    """Index ``r`` of a model from its constant-term sequence.

    ``r`` is the gcd of all ``1 <= n <= horizon`` with ``Cst(f^n) != 0``.
    The divisibility pattern is re-checked afterwards and a warning is
    issued if the last multiple of ``r`` in range has a zero constant term
    (eventual positivity is expected).
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if len(cst) - 1 < horizon:
        raise IndexDetectionError(
            f"sequence covers n <= {len(cst) - 1}, shorter than the horizon {horizon}"
        )
    r = 0
    for n in range(1, horizon + 1):
        if cst[n] != 0:
            r = math.gcd(r, n)
    if r == 0:
        raise IndexDetectionError(f"index undetectable at this horizon ({horizon})")
    for n in range(1, horizon + 1):
        if n % r and cst[n] != 0:
            raise IndexDetectionError(f"internal inconsistency: Cst(f^{n}) != 0 but {r} does not divide {n}")
    last = (horizon // r) * r
    if cst[last] == 0:
        warnings.warn(f"Cst(f^{last}) = 0 at the last multiple of r={r}; horizon may be too short")
    return r
