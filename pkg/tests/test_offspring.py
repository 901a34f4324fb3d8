from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coalhaus import stats
from coalhaus.offspring import INFINITE, OffspringLaw, zeta_sum

LAWS = [OffspringLaw.geometric(0.5), OffspringLaw.geometric(0.8), OffspringLaw.stable(1.5),
        OffspringLaw.stable(1.1), OffspringLaw.neveu(), OffspringLaw.explicit(0.2, 0.5, 0.3)]


def test_pmf_examples():
    assert OffspringLaw.neveu().pmf(1) == pytest.approx(0.5, abs=1e-15)
    assert OffspringLaw.stable(1.5).pmf(1) == pytest.approx(1 - 2**-1.5, rel=1e-14)
    assert OffspringLaw.explicit(1.0).pmf(1) == 1.0


def test_survival_examples():
    assert OffspringLaw.stable(1.5).survival(2) == pytest.approx(0.3535534, abs=1e-7)
    assert OffspringLaw.neveu().survival(3) == pytest.approx(1 / 3, rel=1e-15)
    assert OffspringLaw.geometric(0.5).survival(2) == pytest.approx(0.5)


def test_inverse_cdf_examples():
    assert OffspringLaw.neveu().from_uniform(0.3) == 3
    assert OffspringLaw.stable(1.5).from_uniform(0.1) == 4
    assert OffspringLaw.geometric(0.5).from_uniform(0.6) == 2
    assert OffspringLaw.geometric(0.5).from_uniform(0.4) == 1


def test_moment_examples():
    g = OffspringLaw.geometric(0.5)
    assert g.mean() == pytest.approx(2.0)
    assert g.second_moment() == pytest.approx(6.0)
    assert OffspringLaw.stable(1.5).tail_constant() == 1.5
    neveu = OffspringLaw.neveu()
    assert neveu.tail_constant() == 1.0
    assert neveu.mean() == INFINITE and math.isinf(neveu.mean())


@pytest.mark.parametrize("law", LAWS, ids=str)
def test_pmf_is_survival_difference(law):
    ell = np.arange(1, 10_001)
    assert np.max(np.abs(law.pmf(ell) - (law.survival(ell) - law.survival(ell + 1)))) < 1e-14


@pytest.mark.parametrize("law", LAWS, ids=str)
def test_sampling_matches_pmf(law):
    rng = np.random.default_rng(20240)
    draws = law.sample(rng, 10**6)
    cut = 30
    obs = np.bincount(np.minimum(draws, cut), minlength=cut + 1)[1:]
    probs = np.append(law.pmf(np.arange(1, cut)), law.survival(cut))
    stat, df = stats.chi_square_gof(obs, probs)
    assert stat < stats.chi2_threshold(df, 1e-3)


def test_stable_tail_constant_approach_is_monotone():
    law = OffspringLaw.stable(1.5)
    err = [abs(law.pmf(x) * x**2.5 / 1.5 - 1) for x in (1e2, 1e3, 1e4)]
    assert err[0] > err[1] > err[2]


def test_geometric_moments_against_truncated_sums():
    for q in (0.2, 0.5, 0.9):
        law = OffspringLaw.geometric(q)
        ell = np.arange(1, 10**6 + 1, dtype=float)
        p = law.pmf(ell)
        assert law.mean() == pytest.approx(np.sum(ell * p), abs=1e-9)
        assert law.second_moment() == pytest.approx(np.sum(ell * ell * p), abs=1e-9)


def test_zeta_sum_against_scipy():
    from scipy.special import zeta

    for a in (1.1, 1.5, 1.9):
        assert zeta_sum(a) == pytest.approx(zeta(a), rel=1e-10)


@given(st.floats(min_value=1e-12, max_value=1.0))
def test_heavy_tail_inverse_cdf_is_consistent(u):
    for law in (OffspringLaw.stable(1.5), OffspringLaw.neveu()):
        ell = int(law.from_uniform(u))
        # floor(u^(-1/alpha)) = ell  <=>  S(ell + 1) < u <= S(ell)
        assert law.survival(ell + 1) < u * (1 + 1e-12)
        assert u <= law.survival(ell) * (1 + 1e-12)


def test_parse_round_trip():
    for law in LAWS:
        assert OffspringLaw.parse(str(law)) == law
    with pytest.raises(ValueError):
        OffspringLaw.parse("stable(alpha=2.5)")
    with pytest.raises(ValueError):
        OffspringLaw.parse("poisson(lam=1)")


def test_invalid_laws_rejected():
    with pytest.raises(ValueError):
        OffspringLaw.explicit(0.5, 0.6)
    with pytest.raises(ValueError):
        OffspringLaw.geometric(1.0)
