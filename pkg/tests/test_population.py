from __future__ import annotations

import math

import numpy as np
import pytest

from coalhaus.offspring import OffspringLaw
from coalhaus.population import (
    EXTINCT_LABEL,
    Band,
    LowerBarrier,
    PopulationState,
    RegimeConfig,
    lyapunov,
    occupation_measure,
    simulate_population,
    stopping_time,
)


def fv(K=10, b=2.0, d=1.0, c=1.0):
    return RegimeConfig(b, d, c, K, "finite_variance", OffspringLaw.geometric(0.5))


def test_event_rate_example():
    assert fv(K=10).event_rate(10) == 40.0


def test_regime_scales():
    s = RegimeConfig(1.0, 0.0, 1.0, 100, "stable", OffspringLaw.stable(1.5))
    assert s.time_scale == pytest.approx(10.0)
    assert s.mass_scale == 100
    n = RegimeConfig(1.0, 0.0, 1.0, 100, "neveu", OffspringLaw.neveu())
    assert n.time_scale == 1.0
    assert n.mass_scale == pytest.approx(100 * math.log(100))
    assert n.n_star == 1.0
    assert fv().n_star == 3.0


def test_regime_validation():
    with pytest.raises(ValueError):
        RegimeConfig(1.0, 5.0, 1.0, 10, "finite_variance", OffspringLaw.geometric(0.5))
    with pytest.raises(ValueError):
        RegimeConfig(1.0, 0.0, 1.0, 10, "stable", OffspringLaw.neveu())
    with pytest.raises(ValueError):
        RegimeConfig(1.0, 0.0, 1.0, 10, "neveu", OffspringLaw.stable(1.5))


def test_empty_population_is_absorbing():
    rng = np.random.default_rng(1)
    tr = simulate_population(fv(), PopulationState(np.zeros(3, dtype=np.int64)), 2.0, rng,
                             grid=np.linspace(0, 2, 5))
    assert tr.extinct
    assert np.all(tr.sizes == 0)
    assert np.all(tr.frequencies[:, EXTINCT_LABEL] == 1.0)


def test_zero_horizon_returns_initial_snapshot():
    tr = simulate_population(fv(), None, 0.0, np.random.default_rng(2))
    assert tr.sizes.tolist() == [30, 30]
    assert tr.births == tr.deaths == 0


@pytest.mark.parametrize("seed", range(5))
def test_mass_conservation(seed):
    cfg = fv(K=20)
    tr = simulate_population(cfg, PopulationState.iid(60, 3, np.random.default_rng(seed)), 1.0,
                             np.random.default_rng(seed + 100))
    assert tr.sizes[-1] == tr.initial_size + tr.offspring_total - tr.deaths
    assert tr.final_counts.sum() == tr.sizes[-1]
    assert np.allclose(tr.frequencies.sum(axis=1), 1.0)


def test_first_event_matches_generator_rates():
    # N = 3, K = 10: birth rate b N = 6, death rate N (d + c N / K) = 3.9
    cfg = fv(K=10)
    reps = 4000
    times, births = np.empty(reps), np.empty(reps, dtype=bool)
    for r in range(reps):
        tr = simulate_population(cfg, PopulationState.distinct(3), 1.0, np.random.default_rng(r),
                                 record_types=False, record_path=True)
        times[r] = tr.path_t[1] * cfg.time_scale
        births[r] = tr.path_n[1] > tr.path_n[0]
    total = 6.0 + 3.9
    se_t = (1 / total) / math.sqrt(reps)
    assert abs(times.mean() - 1 / total) < 3 * se_t
    p = 6.0 / total
    assert abs(births.mean() - p) < 3 * math.sqrt(p * (1 - p) / reps)


def test_long_run_mean_near_carrying_capacity():
    cfg = fv(K=100)
    tr = simulate_population(cfg, None, 5.0, np.random.default_rng(7),
                             grid=np.linspace(1, 5, 41), record_types=False)
    assert abs(tr.n.mean() - 3.0) < 0.15


def test_stopping_time_examples():
    t = np.array([0.0, 0.3, 0.7, 1.0])
    assert stopping_time(t, np.full(4, 3.0), Band(3.0, 0.1)) is None
    assert stopping_time(t, np.array([3.0, 3.05, 3.2, 3.0]), Band(3.0, 0.1)) == 0.7
    t2 = np.array([0.0, 0.5, 1.2, 1.5])
    assert stopping_time(t2, np.array([1.5, 1.1, 0.9, 1.4]), LowerBarrier(1.0)) == 1.2
    assert LowerBarrier.default(4.0).level == 1.0


def test_occupation_measure_examples():
    occ = occupation_measure([0.0], [3.0], [2.5, 3.5], 2.0)
    assert occ.mass.tolist() == [2.0]
    rng = np.random.default_rng(3)
    t = np.concatenate([[0.0], np.sort(rng.random(50) * 4)])
    n = rng.random(51) * 4
    stop = LowerBarrier(0.5)
    occ = occupation_measure(t, n, np.linspace(-1, 5, 13), 4.0, stop)
    tau = stopping_time(t, n, stop)
    assert occ.mass.sum() == pytest.approx(min(4.0, tau if tau is not None else 4.0))
    assert occ.total == pytest.approx(occ.mass.sum())


def test_lyapunov_examples():
    assert lyapunov(3.5, 3.0, 0.5) == pytest.approx(-0.336472, abs=1e-6)
    assert lyapunov(2.5, 3.0, 0.5) == pytest.approx(2.5 / 3.5 - 1)
    assert lyapunov(1e-300, 3.0, 0.5) > 600
    with pytest.raises(ValueError):
        lyapunov(0.0, 3.0, 0.5)
    with pytest.raises(ValueError):
        lyapunov(1.0, 3.0, 3.0)


def test_grid_reports_left_limits():
    cfg = fv(K=5)
    tr = simulate_population(cfg, None, 0.5, np.random.default_rng(11), record_path=True,
                             record_types=False)
    jump_t = tr.path_t[1]
    again = simulate_population(cfg, None, 0.5, np.random.default_rng(11),
                                grid=[0.0, jump_t, 0.5], record_types=False)
    assert again.sizes[1] == tr.initial_size


def test_reproducible_given_seed():
    a = simulate_population(fv(K=30), None, 1.0, np.random.default_rng(5), grid=np.linspace(0, 1, 6))
    b = simulate_population(fv(K=30), None, 1.0, np.random.default_rng(5), grid=np.linspace(0, 1, 6))
    assert np.array_equal(a.sizes, b.sizes)
    assert np.array_equal(a.frequencies, b.frequencies)
