from __future__ import annotations

import numpy as np
import pytest

from coalhaus.coalescent import PartitionPath
from coalhaus.experiments import kingman_config, oracle_equivalence
from coalhaus.genealogy import (
    CountingPath,
    first_merger_size,
    genealogy,
    pair_coalescence_times,
    psi,
    trace_ancestry_oracle,
)
from coalhaus.lookdown import BIRTH, LookdownEventLog, simulate_lookdown


def one_event_log(J, k=3, n0=3):
    lv = np.array(J, dtype=np.int64)
    return LookdownEventLog("oracle", k, np.array([0.5]), np.array([BIRTH], dtype=np.int8),
                            np.array([len(J) - 1]), np.array([0, len(J)]), lv, 1.0, 1.0, n0,
                            n0 + len(J) - 1, n0)


def test_psi_single_pair_event():
    path = psi(CountingPath.from_events(3, 1.0, [(0.5, (1, 2))]))
    assert [str(s) for s in path.states] == ["1|2|3", "1,2|3"]
    assert path.times == [0.5]


def test_psi_shift_rule():
    # lineages at levels 1 and 3 (samples 1 and 2 after an earlier merge), event J = {1, 2}
    # moves level 3 to 2; a later (backward) event J = {1, 2} then merges them.
    events = [(0.2, (1, 2)), (0.6, (1, 2))]
    path = psi(CountingPath.from_events(3, 1.0, events))
    assert [str(s) for s in path.states] == ["1|2|3", "1,2|3", "1,2,3"]
    assert path.times == pytest.approx([0.4, 0.8])


def test_psi_empty_path():
    path = psi(CountingPath(4, 2.0))
    assert path.jumps == [] and str(path.at(1.0)) == "1|2|3|4"


def test_counting_path_rejects_simultaneous_events():
    with pytest.raises(ValueError):
        CountingPath(3, 1.0, {(1, 2): np.array([0.5]), (2, 3): np.array([0.5])})


def test_oracle_agrees_on_single_event():
    log = one_event_log((1, 2))
    assert trace_ancestry_oracle(log) == genealogy(log.restrict(3))


def test_oracle_without_low_coalescence():
    log = one_event_log((2, 4), k=2, n0=4)
    assert trace_ancestry_oracle(log).jumps == []
    assert genealogy(log.restrict(2)).jumps == []


def test_oracle_equivalence_small_runs():
    check = oracle_equivalence(60, 5, 3, 0.5, 2024)
    assert check.mismatches == 0
    assert check.runs == 60 and check.attempted >= 60


def test_restricted_log_gives_same_genealogy_as_full_log():
    cfg = kingman_config(6)
    for seed in range(20):
        full, _ = simulate_lookdown(cfg, 3, None, 0.4, np.random.default_rng(seed), mode="oracle")
        if full.final_size >= 3:
            direct = psi(CountingPath.from_events(3, full.horizon, full.counting_events()))
            assert direct == genealogy(full.restrict(3))


def test_psi_only_coarsens_and_keeps_levels_compact():
    rng = np.random.default_rng(1)
    for _ in range(50):
        k = 5
        times = np.sort(rng.random(8))
        sets = [tuple(sorted(rng.choice(np.arange(1, k + 1), rng.integers(2, 4), replace=False)))
                for _ in times]
        path = psi(CountingPath.from_events(k, 1.0, zip(times, sets)))
        states = path.states
        for a, b in zip(states, states[1:]):
            assert b.is_coarsening_of(a) and len(b) < len(a)


def test_psi_is_continuous_under_jitter():
    events = [(0.1, (1, 3)), (0.35, (2, 3)), (0.7, (1, 2, 4))]
    a = psi(CountingPath.from_events(4, 1.0, events))
    b = psi(CountingPath.from_events(4, 1.0, [(t + 1e-3, J) for t, J in events]))
    assert a.jump_chain() == b.jump_chain()


def test_pair_times_and_censoring():
    from coalhaus.coalescent import Partition

    merged = PartitionPath(Partition.singletons(2), [(0.4, (0, 1))], 5.0)
    never = PartitionPath(Partition.singletons(2), [], 5.0)
    times, censored = pair_coalescence_times([merged, never])
    assert times.tolist() == [0.4, 5.0]
    assert censored.tolist() == [False, True]
    assert first_merger_size(merged) == 2 and first_merger_size(never) is None
