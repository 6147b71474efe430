"""Built-in Laurent polynomial models.

Each entry's expected record is produced on first use by the slow routes in
:mod:`._bruteforce` (walk counting for constant terms, BFGS in double
precision for the conifold point), never typed in by hand.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ._bruteforce import conifold_double, cst_by_walk_counting
from .exceptions import DomainValidationError
from .laurent import LaurentPolynomial

BOOTSTRAP_N = 24
N_NONZERO = 5


def _model(num_vars, exps):
    return LaurentPolynomial(num_vars, {tuple(e): 1 for e in exps})


@dataclass
class CatalogEntry:
    name: str
    model: LaurentPolynomial
    description: str = ""
    _expected: dict = field(default=None, repr=False)

    @property
    def expected(self):
        """``conifold_point``, ``T_con``, ``index_r`` and the first nonzero ``n! G_n``."""
        if self._expected is None:
            cst = cst_by_walk_counting(self.model, BOOTSTRAP_N)
            nz = [(n, c) for n, c in enumerate(cst) if n and c]
            r = 0
            for n, _ in nz:
                r = math.gcd(r, n)
            point, value = conifold_double(self.model)
            self._expected = {
                "conifold_point": point,
                "T_con": value,
                "index_r": r,
                "nfact_G": tuple((n, Fraction(c)) for n, c in nz[:N_NONZERO]),
            }
        return self._expected


CATALOG = {
    "p1": CatalogEntry("p1", _model(1, [(1,), (-1,)]), "x + 1/x"),
    "p2": CatalogEntry("p2", _model(2, [(1, 0), (0, 1), (-1, -1)]), "x + y + 1/(xy)"),
    "p1xp1": CatalogEntry("p1xp1", _model(2, [(1, 0), (-1, 0), (0, 1), (0, -1)]), "x + 1/x + y + 1/y"),
    "p3": CatalogEntry(
        "p3", _model(3, [(1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, -1, -1)]), "x + y + z + 1/(xyz)"
    ),
}


def get(name):
    try:
        return CATALOG[name]
    except KeyError:
        raise DomainValidationError(f"unknown catalog model {name!r}; choose from {sorted(CATALOG)}") from None
