"""Real polynomials with positive leading coefficient (concentration locations)."""

from dataclasses import dataclass

from mpmath import mpf

from ._mp import to_mpf
from .exceptions import DomainValidationError


@dataclass(frozen=True)
class LocationPolynomial:
    """``f(x) = c_0 + c_1 x + ... + c_d x^d`` with ``c_d > 0``.

    Coefficients are stored as given (ints, Fractions or decimal strings)
    and converted to mpf on use, so the stored value never loses precision.
    """

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(self.coefficients)
        while len(coeffs) > 1 and to_mpf(coeffs[-1]) == 0:
            coeffs = coeffs[:-1]
        if not coeffs or to_mpf(coeffs[-1]) <= 0:
            raise DomainValidationError("location polynomial needs a positive leading coefficient")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def linear(cls, slope, intercept=0):
        return cls((intercept, slope))

    @property
    def degree(self):
        return len(self.coefficients) - 1

    @property
    def leading(self):
        return to_mpf(self.coefficients[-1])

    def __call__(self, x):
        x = mpf(x)
        total = mpf(0)
        for c in reversed(self.coefficients):
            total = total * x + to_mpf(c)
        return total

    def scaled(self, factor):
        return LocationPolynomial(tuple(to_mpf(c) * to_mpf(factor) for c in self.coefficients))
