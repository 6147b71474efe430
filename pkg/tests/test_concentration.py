import math
import random
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mp, mpf
from sklearn.base import clone

from qperiods.catalog import CATALOG
from qperiods.concentration import (
    EXPONENTIAL,
    INCONSISTENT,
    ConcentrationConfig,
    ConcentrationEstimator,
    default_grid,
    floor_multiplicity_holds,
    head_tail_subset_monotone,
    lem0_diagnostics,
    location_equivalence,
    measure,
    power_two_tail,
    root_gamma_sequence,
    weighted_tail_check,
    window_transform,
)
from qperiods.exceptions import DegenerateWindowError, DomainValidationError, WhitelistError
from qperiods.location import LocationPolynomial
from qperiods.series import FiniteOracle, PeriodOracle, ReciprocalFactorial, SubpolynomialWeight, evaluate

EXP_CONFIG = ConcentrationConfig(LocationPolynomial.linear(1), "1", "0.25")


def poisson_head(n, x):
    """P(N <= n) for N ~ Poisson(x): the head ratio of e^x, independently of the summation engine."""
    return mpmath.gammainc(n + 1, x, mpmath.inf, regularized=True)


def poisson_tail(n, x):
    """P(N >= n) for N ~ Poisson(x)."""
    return mpmath.gammainc(n, 0, x, regularized=True)


def test_exp_ratios_match_poisson_oracle():
    rep = measure(ReciprocalFactorial(), EXP_CONFIG, [25, 50, 100, 200])
    with mp.workprec(256):
        for r in rep.records:
            assert abs(r.head_ratio - poisson_head(r.n_minus, r.x)) <= mpf(2) ** -200
            assert abs(r.tail_ratio - poisson_tail(r.n_plus, r.x)) <= mpf(2) ** -200


def test_exp_window_example():
    rep = measure(ReciprocalFactorial(), EXP_CONFIG, [25, 50, 100, 200])
    at100 = rep.records[2]
    assert (at100.n_minus, at100.n_plus) == (68, 131)
    assert at100.head_ratio <= 1e-3
    # the tail at x = 100 is 1.7e-3: the upper window edge 131 is only 3.1 sd above the mean
    assert float(at100.tail_ratio) == pytest.approx(1.7067e-3, rel=1e-3)
    assert 0.3 <= rep.fitted_beta_head <= 0.7


def test_exp_verdict_on_longer_grid():
    rep = measure(ReciprocalFactorial(), EXP_CONFIG, [25, 50, 100, 200, 400])
    assert rep.verdict == EXPONENTIAL
    assert rep.head_fit.alpha > 0 and rep.tail_fit.alpha > 0
    assert 0.3 <= rep.fitted_beta_head <= 0.7 and 0.3 <= rep.fitted_beta_tail <= 0.7


def test_finite_oracle_inconsistent():
    rep = measure(FiniteOracle([1]), EXP_CONFIG, [25, 50, 100, 200])
    assert rep.verdict == INCONSISTENT
    assert all(r.head_ratio == 1 for r in rep.records)


def test_p2_period_ratios_decreasing():
    cfg = ConcentrationConfig(LocationPolynomial.linear(3), mpf(3) ** mpf("-0.25"), "0.25")
    rep = measure(PeriodOracle(CATALOG["p2"].model), cfg, [20, 40, 80, 160])
    heads = [r.head_ratio for r in rep.records]
    tails = [r.tail_ratio for r in rep.records]
    assert all(b < a for a, b in zip(heads, heads[1:]))
    assert all(b < a for a, b in zip(tails, tails[1:]))
    # total is 0F2(;1,1;x^3)
    ev = evaluate(PeriodOracle(CATALOG["p2"].model), 20)
    with mp.workprec(256):
        assert abs(ev.total / mpmath.hyper([], [1, 1], mpf(20) ** 3) - 1) <= mpf(2) ** -200


def test_degenerate_window():
    cfg = ConcentrationConfig(LocationPolynomial.linear(1), "100", "0.25")
    with pytest.raises(DegenerateWindowError):
        measure(ReciprocalFactorial(), cfg, [1, 2, 3, 4])


def test_grid_validation():
    with pytest.raises(DomainValidationError):
        measure(ReciprocalFactorial(), EXP_CONFIG, [10, 5, 20, 40])
    with pytest.raises(DomainValidationError):
        measure(ReciprocalFactorial(), EXP_CONFIG, [10, 20])


def test_config_validation_and_warnings():
    with pytest.raises(DomainValidationError):
        LocationPolynomial((1, -1))
    with pytest.raises(DomainValidationError):
        ConcentrationConfig(LocationPolynomial.linear(1), "0", "0.25")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ConcentrationConfig(LocationPolynomial.linear(1), "1", "1.5")
    assert any("exceeds" in str(w.message) for w in caught)


def test_window_exact_floor():
    # f(x) (1 - C x^-nu) lands exactly on an integer at x = 16: 16 * (1 - 2/2) = 0, 16 * 2 = 32
    cfg = ConcentrationConfig(LocationPolynomial.linear(1), "2", "0.25")
    assert cfg.window(16) == (0, 32)


@pytest.mark.parametrize("name", ["p1", "p2", "p3"])
def test_peak_inside_window_after_onset(name):
    f = CATALOG[name].model
    T = CATALOG[name].expected["T_con"]
    cfg = ConcentrationConfig(LocationPolynomial.linear(round(T)), "1", "0.25")
    rep = measure(PeriodOracle(f), cfg, [5, 10, 20, 40, 80])
    onset = rep.peak_onset
    assert onset is not None
    for r in rep.records:
        assert 0 <= r.head_ratio <= 1 and 0 <= r.tail_ratio <= 1
        assert r.head_ratio + r.tail_ratio <= 1
        if r.x >= onset:
            assert r.n_minus < r.peak_index < r.n_plus


# ------------------------------------------------------------ window widening


def test_window_transform_examples():
    base = ConcentrationConfig(LocationPolynomial.linear(1), "1", "0.4")
    assert window_transform(base, "2", "0.25").inherited
    base = ConcentrationConfig(LocationPolynomial.linear(1), "1", "0.25")
    assert not window_transform(base, "1", "0.4").inherited
    t = window_transform(base, "1", "0.25")
    assert t.inherited and t.config == base
    with pytest.raises(DomainValidationError):
        window_transform(base, "-1", "0.25")


def test_location_equivalence_examples():
    assert location_equivalence(LocationPolynomial.linear(3), LocationPolynomial.linear(3, 7))
    assert not location_equivalence(LocationPolynomial.linear(3), LocationPolynomial.linear(2))
    assert location_equivalence(LocationPolynomial((0, 0, 1)), LocationPolynomial((0, 1, 1)))


@given(
    st.integers(5, 300),
    st.sampled_from(["1", "1.5", "2"]),
    st.sampled_from(["0.1", "0.25", "0.4"]),
    st.sampled_from(["1", "2", "3"]),
    st.sampled_from(["0.05", "0.1", "0.25"]),
)
def test_window_monotonicity(x, C, nu, C_extra, nu_drop):
    narrow = ConcentrationConfig(LocationPolynomial.linear(1), C, nu)
    C2 = str(mpf(C) * mpf(C_extra))
    nu2 = str(max(mpf(nu) - mpf(nu_drop), mpf("0.01")))
    wide = window_transform(narrow, C2, nu2).config
    ev = evaluate(ReciprocalFactorial(), x)
    assert head_tail_subset_monotone(ev, narrow, wide) == (True, True)


def test_floor_identities_random_samples():
    rng = random.Random(0)
    with mp.workprec(256):
        for _ in range(10_000):
            x = mpf(rng.uniform(0.5, 1e4))
            C1, C2, nu = mpf(rng.uniform(0.1, 5)), mpf(rng.uniform(0, 2)), mpf(rng.uniform(0.05, 0.5))
            sign = rng.choice((-1, 1))
            u = C1 * x * (1 + sign * C2 * x ** (-nu))
            if u < 0:
                continue
            for kappa in (1, 2, 3, 5):
                assert floor_multiplicity_holds(u, kappa) == (True, True)


@pytest.mark.parametrize("K", [64, 128, 256])
def test_power_two_tail(K):
    s = power_two_tail(lambda n: n**3, K)
    with mp.workprec(256):
        assert s < mpf(2) ** (-K / 2)
        # closed form of sum_{n>K} n^3 2^-n via mpmath's nsum as a second route
        ref = mpmath.nsum(lambda n: n**3 * mpf(2) ** (-n), [K + 1, mpmath.inf])
        assert abs(s - ref) <= ref * mpf(2) ** -150


# ------------------------------------------------------------ growth diagnostics


def test_lem0_exp():
    diag = lem0_diagnostics(ReciprocalFactorial(), EXP_CONFIG, [50, 100, 200], n_root_max=100)
    assert abs(diag.logI_over_xd[-1] - 1) <= 0.05
    assert diag.target_growth == 1 and diag.target_root == 1
    assert all(v == 1 for v in diag.root_gamma.values())
    assert diag.root_gamma_limsup == 1


def test_root_gamma_exact_for_exp():
    seq = root_gamma_sequence(ReciprocalFactorial(), 1, 300)
    assert len(seq) == 300 and all(v == 1 for v in seq.values())


def test_lem0_p1_root_gamma():
    cfg = ConcentrationConfig(LocationPolynomial.linear(2), "1", "0.25")
    diag = lem0_diagnostics(PeriodOracle(CATALOG["p1"].model), cfg, [50, 100, 200], n_root_max=400)
    assert diag.target_root == 2
    assert abs(diag.root_gamma_extrapolated - 2) <= 0.03
    assert abs(diag.logI_over_xd_limit - 2) <= 0.05


# ------------------------------------------------------------ weighted tails


def test_weighted_tail_unit_weight_matches_measure():
    grid = [25, 50, 100, 200]
    rows, _ = weighted_tail_check(ReciprocalFactorial(), SubpolynomialWeight("one"), EXP_CONFIG, grid, p_list=(0,))
    rep = measure(ReciprocalFactorial(), EXP_CONFIG, grid)
    with mp.workprec(256):
        for row, rec in zip(rows, rep.records):
            assert abs(row.head_scaled - rec.head_ratio) <= rec.head_ratio * mpf(2) ** -200
            assert abs(row.tail_scaled - rec.tail_ratio) <= rec.tail_ratio * mpf(2) ** -200


def test_weighted_tail_log_weight_eventually_decreases():
    # x^4 times the ratio still grows on {50,...,400} (decay only overtakes x^4 near x ~ 225);
    # the decreasing trend shows on a longer grid.
    weight = SubpolynomialWeight("log_power", 1)
    _, verdicts = weighted_tail_check(ReciprocalFactorial(), weight, EXP_CONFIG, [50, 100, 200, 400], p_list=(4,))
    assert verdicts[4] == (False, False)
    rows, verdicts = weighted_tail_check(
        ReciprocalFactorial(), weight, EXP_CONFIG, [400, 800, 1600, 3200], p_list=(4,)
    )
    assert verdicts[4] == (True, True)


def test_weighted_tail_log_cubed_p8():
    weight = SubpolynomialWeight("log_power", 3)
    _, verdicts = weighted_tail_check(
        ReciprocalFactorial(), weight, EXP_CONFIG, [1600, 3200, 6400, 12800], p_list=(8,)
    )
    assert verdicts[8][0]


def test_weighted_tail_whitelist():
    with pytest.raises(WhitelistError):
        weighted_tail_check(ReciprocalFactorial(), lambda n: 1, EXP_CONFIG, [10, 20])


# ------------------------------------------------------------ estimator facade


def test_estimator():
    est = ConcentrationEstimator(coeff=ReciprocalFactorial(), location=(0, 1), window_C="1", window_nu="0.25")
    est.fit(np.array([25, 50, 100, 200, 400]))
    assert est.verdict_ == EXPONENTIAL
    assert 0.3 <= est.beta_[0] <= 0.7
    out = est.transform([100])
    assert out.shape == (1, 2)
    assert out[0, 0] == pytest.approx(float(poisson_head(68, 100)), rel=1e-12)
    params = clone(est).get_params()
    assert params["window_nu"] == "0.25" and params["location"] == (0, 1)


def test_default_grid_window_span():
    grid = default_grid(EXP_CONFIG)
    assert len(grid) == 8
    lo = grid[0]
    assert lo * lo ** mpf("-0.25") >= 5
    assert all(math.isclose(float(b / a), 2) for a, b in zip(grid, grid[1:]))
