from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coalhaus.coalescent import LambdaMeasure, merge_rate
from coalhaus.offspring import OffspringLaw
from coalhaus.population import RegimeConfig
from coalhaus.rates import (
    RateQuery,
    convergence_report,
    effective_size,
    level_selection_prob,
    level_selection_prob_exact,
    level_selection_prob_lgamma,
    limit_measure,
    rate_limit,
    rate_prelimit,
)

FV = RegimeConfig(2.0, 1.0, 1.0, 100, "finite_variance", OffspringLaw.geometric(0.5))
STABLE = RegimeConfig(1.0, 0.0, 1.0, 100, "stable", OffspringLaw.stable(1.5))
NEVEU = RegimeConfig(1.0, 0.0, 1.0, 100, "neveu", OffspringLaw.neveu())


def test_level_selection_examples():
    assert level_selection_prob(5, 1, 2, 2) == pytest.approx(1 / 15, rel=1e-14)
    assert level_selection_prob(5, 2, 2, 1) == pytest.approx(2 / 7, rel=1e-14)
    for ell in range(1, 6):
        assert level_selection_prob(9, ell, 3, ell + 1 if ell < 3 else 3) > 0
        assert level_selection_prob(9, ell, ell + 1, ell + 1) == pytest.approx(
            1 / math.comb(9 + ell, ell + 1), rel=1e-13)


def test_level_selection_rejects_bad_arguments():
    with pytest.raises(ValueError):
        level_selection_prob(5, 1, 2, 3)
    with pytest.raises(ValueError):
        level_selection_prob(5, 0, 2, 2)
    with pytest.raises(ValueError):
        level_selection_prob(1, 1, 2, 2)


@pytest.mark.parametrize("N", range(2, 9))
@pytest.mark.parametrize("ell", range(1, 4))
def test_level_selection_sums_to_one_exactly(N, ell):
    for k in range(1, N + 1):
        total = sum(math.comb(k, j) * level_selection_prob_exact(N, ell, k, j)
                    for j in range(0, min(k, ell + 1) + 1))
        assert total == Fraction(1)
        for j in range(0, min(k, ell + 1) + 1):
            assert level_selection_prob(N, ell, k, j) == pytest.approx(
                float(level_selection_prob_exact(N, ell, k, j)), rel=1e-13)


@given(st.integers(4, 10**6), st.integers(1, 40), st.integers(2, 4))
def test_product_form_is_exact_for_large_populations(N, ell, k):
    # log-Gamma differences cancel badly for large N; the product form does not
    for j in range(2, min(k, ell + 1) + 1):
        exact = float(level_selection_prob_exact(N, ell, k, j))
        assert level_selection_prob(N, ell, k, j) == pytest.approx(exact, rel=1e-12)
        assert level_selection_prob_lgamma(N, ell, k, j) == pytest.approx(exact, rel=1e-6)


def test_rate_limit_examples():
    fv = rate_limit(RateQuery.from_config(FV, 4, 2, 3.0))
    assert fv == pytest.approx(16 / 3)
    assert rate_limit(RateQuery.from_config(FV, 4, 4, 3.0)) == 0.0
    st_ = rate_limit(RateQuery.from_config(STABLE, 2, 2, 1.0))
    assert st_ == pytest.approx(1.5 * math.pi / 2, rel=1e-13)
    assert rate_limit(RateQuery.from_config(NEVEU, 3, 3, 1.0)) == pytest.approx(0.5)


def test_fv_prelimit_approaches_limit():
    vals = [rate_prelimit(RateQuery.from_config(FV, 4, 2, 3.0, K=K)) for K in (1e2, 1e3, 1e4)]
    gaps = [abs(v - 16 / 3) for v in vals]
    assert gaps[0] > gaps[1] > gaps[2]
    j3 = [rate_prelimit(RateQuery.from_config(FV, 4, 3, 3.0, K=K)) for K in (1e2, 1e3, 1e4)]
    assert j3[0] > j3[1] > j3[2] > 0


def test_adaptive_truncation_matches_brute_force():
    q = RateQuery.from_config(STABLE, 4, 2, 2.0, K=1e3)
    oracle = rate_prelimit(q, l_max=10**7)
    assert rate_prelimit(q) == pytest.approx(oracle, rel=1e-9)


def test_prelimit_is_positive_and_finite():
    for cfg in (FV, STABLE, NEVEU):
        for j in (2, 3, 4):
            for n in (0.3, 1.0, 7.5):
                v = rate_prelimit(RateQuery.from_config(cfg, 4, j, n, K=500))
                assert np.isfinite(v) and v > 0


def test_neveu_prelimit_is_exact():
    # the canonical Neveu law makes the prelimit sum telescope onto the limit
    for K in (50.0, 1e4):
        for j in (2, 3, 4):
            q = RateQuery.from_config(NEVEU, 4, j, 1.3, K=K)
            assert rate_prelimit(q) == pytest.approx(rate_limit(q), rel=1e-12)


def test_rounding_mode_uses_integer_population():
    q = RateQuery.from_config(STABLE, 4, 2, 1.234, K=100, rounding=True)
    assert q.size() == 123


def test_stable_limit_matches_coalescent_rate():
    lam = limit_measure(STABLE)
    for n in (0.7, 1.0, 3.0):
        for j in range(2, 5):
            lim = rate_limit(RateQuery.from_config(STABLE, 4, j, n))
            scaled = merge_rate(lam, 4, j) * (STABLE.n_star / n) ** 0.5
            assert lim == pytest.approx(scaled, rel=1e-12)
    assert rate_limit(RateQuery.from_config(STABLE, 4, 2, STABLE.n_star)) == pytest.approx(
        merge_rate(lam, 4, 2), rel=1e-12)


def test_limit_measures():
    assert effective_size(FV) == pytest.approx(3 / 16)
    assert limit_measure(FV) == LambdaMeasure.kingman(3 / 16)
    assert limit_measure(NEVEU) == LambdaMeasure.uniform(1.0)


def test_convergence_report_stable():
    rep = convergence_report(STABLE, 4, [1e2, 1e3, 1e4])
    assert rep.strictly_decreasing()
    assert rep.sup_gap[-1] < rep.sup_gap[0]
    rows = list(rep.rows())
    assert rows[0][0] == 100.0 and rows[3][1] == "sup"
    with pytest.raises(ValueError):
        convergence_report(STABLE, 4, [1e2], c0=10.0)
