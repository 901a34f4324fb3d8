"""The limiting Poisson lookdown, projected onto the lowest k levels.

Restricted to [k], the Poisson-driven construction is a finite-rate Markov
jump process: each subset J of [k] with |J| = j >= 2 fires at rate

    a 1{j = 2} + int_0^1 u^j (1-u)^(k-j) Lambda_0(du) / u^2,

which is exactly the k-coalescent rate lambda(k, j). At an event the type at
min J is copied onto J minus min J; the other types keep their order and
whatever is pushed above k is discarded.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from coalhaus.coalescent import LambdaMeasure, merge_rate


def restricted_event_rates(lam: LambdaMeasure, k: int) -> dict[tuple[int, ...], float]:
    """Rate of every J subset of [k] with |J| >= 2."""
    if k < 2:
        raise ValueError("need k >= 2")
    rates = {}
    for j in range(2, k + 1):
        r = merge_rate(lam, k, j)
        for J in itertools.combinations(range(1, k + 1), j):
            rates[J] = r
    return rates


def apply_restricted(types, J) -> list:
    """Insert copies of the type at min J at the other levels of J, truncated to len(types)."""
    J = sorted(J)
    parent = types[J[0] - 1]
    inserted = set(J[1:])
    old = iter(types)
    return [parent if pos in inserted else next(old) for pos in range(1, len(types) + 1)]


@dataclass
class LimitEventLog:
    k: int
    horizon: float
    times: list
    sets: list

    def counting_events(self):
        return list(zip(self.times, self.sets))


def simulate_limit_lookdown(lam: LambdaMeasure, k: int, types, horizon: float,
                            rng: np.random.Generator):
    """Returns ``(LimitEventLog, type_path)``; type_path[i] follows event i (entry 0 is the start)."""
    if k < 2:
        raise ValueError("need k >= 2")
    types = list(types)
    if len(types) != k:
        raise ValueError("need one initial type per level")
    by_size = np.array([math.comb(k, j) * merge_rate(lam, k, j) for j in range(2, k + 1)])
    total = by_size.sum()
    probs = by_size / total if total > 0 else None
    t = 0.0
    times, sets, path = [], [], [tuple(types)]
    while total > 0:
        t += rng.exponential(1.0 / total)
        if t > horizon:
            break
        j = 2 + int(rng.choice(k - 1, p=probs))
        J = tuple(sorted(int(i) + 1 for i in rng.choice(k, size=j, replace=False)))
        types = apply_restricted(types, J)
        times.append(t)
        sets.append(J)
        path.append(tuple(types))
    return LimitEventLog(k, horizon, times, sets), path
