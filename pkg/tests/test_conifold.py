from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mp, mpf

from qperiods._bruteforce import conifold_double
from qperiods.catalog import CATALOG
from qperiods.conifold import find_conifold, leading_principal_minors, step_distribution
from qperiods.exceptions import ConvergenceError, NotConvenientError
from qperiods.laurent import LaurentPolynomial, power

from conftest import poly

TOL = mpf(2) ** -180


def rel(a, b):
    return abs(a - b) / abs(b)


def test_p1(p1):
    res = find_conifold(p1)
    with mp.workprec(256):
        assert rel(res.point[0], mpf(1)) <= TOL
        assert rel(res.value, mpf(2)) <= TOL
        assert res.hessian_log_det > 0
        assert res.gradient_norm <= mpf(2) ** -200


def test_p2(p2):
    res = find_conifold(p2)
    with mp.workprec(256):
        assert all(rel(x, mpf(1)) <= TOL for x in res.point)
        assert rel(res.value, mpf(3)) <= TOL
        # Hessian of x + y + 1/(xy) in log coordinates at (1,1) is [[2,1],[1,2]]
        assert rel(res.hessian_log_det, mpf(3)) <= TOL


def test_asymmetric_closed_form():
    f = poly(1, {(1,): 2, (-1,): 1})
    res = find_conifold(f)
    with mp.workprec(256):
        assert rel(res.point[0], 1 / mpmath.sqrt(2)) <= TOL
        assert rel(res.value, 2 * mpmath.sqrt(2)) <= TOL
    assert res.iterations <= 50


def test_high_precision(p1):
    res = find_conifold(p1, prec=512)
    with mp.workprec(512):
        assert abs(res.value - 2) < mpf(10) ** -150


def test_rejects_non_convenient():
    with pytest.raises(NotConvenientError):
        find_conifold(poly(2, {(1, 0): 1, (0, 1): 1}))
    with pytest.raises(NotConvenientError):
        find_conifold(poly(2, {(1, 1): 1, (-1, -1): 1}))
    with pytest.raises(NotConvenientError):
        find_conifold(LaurentPolynomial(1, {}))


def test_non_convergence_reports_best_iterate():
    f = poly(1, {(5,): 1, (-1,): 100})
    with pytest.raises(ConvergenceError) as info:
        find_conifold(f, max_iter=1)
    assert info.value.best is not None
    assert info.value.best.iterations == 1


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_against_double_precision_oracle(name):
    entry = CATALOG[name]
    res = find_conifold(entry.model)
    exp = entry.expected
    assert float(res.value) == pytest.approx(exp["T_con"], rel=1e-9)
    assert [float(x) for x in res.point] == pytest.approx(list(exp["conifold_point"]), rel=1e-6)


def test_lopsided_model_against_double_oracle():
    f = poly(2, {(3, 0): "1/7", (0, 2): 5, (-1, -1): 2, (1, -2): "1/3", (0, 0): 1})
    res = find_conifold(f)
    point, value = conifold_double(f)
    assert float(res.value) == pytest.approx(value, rel=1e-9)
    assert [float(x) for x in res.point] == pytest.approx(list(point), rel=1e-5)


def test_power_agreement(p1, p2):
    for f, r in ((p1, 2), (p2, 3)):
        a = find_conifold(f)
        b = find_conifold(power(f, r))
        with mp.workprec(256):
            assert rel(b.value, a.value**r) <= mpf(10) ** -20


positive_rationals = st.fractions(min_value=Fraction(1, 10), max_value=10, max_denominator=20)


def _lopsided():
    return poly(2, {(1, 0): 3, (0, 1): "1/2", (-1, -1): 2, (-1, 1): "1/5"})


@given(positive_rationals)
def test_coefficient_scaling(lam):
    f = _lopsided()
    a, b = find_conifold(f), find_conifold(f.scale(lam))
    with mp.workprec(256):
        assert all(rel(x, y) <= TOL for x, y in zip(a.point, b.point))
        assert rel(b.value, a.value * mpf(lam.numerator) / lam.denominator) <= TOL


@given(positive_rationals, positive_rationals)
def test_variable_scaling(l1, l2):
    f = _lopsided()
    a, b = find_conifold(f), find_conifold(f.rescale_variables((l1, l2)))
    with mp.workprec(256):
        for x, y, lam in zip(a.point, b.point, (l1, l2)):
            assert rel(y, x / (mpf(lam.numerator) / lam.denominator)) <= TOL
        assert rel(b.value, a.value) <= TOL


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_hessian_positive_definite(name):
    res = find_conifold(CATALOG[name].model)
    assert all(d > 0 for d in leading_principal_minors(res))


def test_step_distribution_examples(p1, p2):
    g = power(p1, 2)
    dist = step_distribution(g, find_conifold(p1))
    with mp.workprec(256):
        probs = dict(dist.steps)
        assert rel(probs[(2,)], mpf(1) / 4) <= TOL
        assert rel(probs[(0,)], mpf(1) / 2) <= TOL
        assert rel(probs[(-2,)], mpf(1) / 4) <= TOL
    dist = step_distribution(p2, find_conifold(p2))
    with mp.workprec(256):
        assert all(rel(p, mpf(1) / 3) <= TOL for p in dist.probabilities)
    unit = step_distribution(LaurentPolynomial.one(1), find_conifold(p1))
    assert dict(unit.steps) == {(0,): 1}


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_step_distribution_mean_zero(name):
    f = CATALOG[name].model
    r = CATALOG[name].expected["index_r"]
    dist = step_distribution(power(f, r), find_conifold(f))
    with mp.workprec(256):
        assert abs(dist.total - 1) <= mpf(2) ** -200
        # mean of g = f^r is r times the normalised gradient of f
        assert dist.mean_norm <= 10 * r * mpf(2) ** -200
        assert dist.lattice_rank == f.num_vars
