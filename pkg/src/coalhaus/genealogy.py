"""Ancestral partition processes read off lookdown event records.

Time in the returned partition paths runs backward from the sampling time:
backward time ``T - t`` for a forward (rescaled) event at ``t``. Paths are
right-continuous in backward time, so the merger caused by a birth is
already visible at the birth's own backward time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from coalhaus.coalescent import Partition, PartitionPath
from coalhaus.lookdown import BIRTH, LookdownEventLog


@dataclass
class CountingPath:
    """Event times (rescaled, forward) of every level set J subset of [k], |J| >= 2."""

    k: int
    horizon: float
    events: dict[tuple[int, ...], np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for J, ts in self.events.items():
            if len(J) < 2 or min(J) < 1 or max(J) > self.k:
                raise ValueError(f"bad level set {J} for k={self.k}")
            self.events[J] = np.sort(np.asarray(ts, dtype=float))
        times = self.merged_times()
        if np.any(np.diff(times) == 0):
            raise ValueError("two counting processes jump simultaneously")
        if times.size and (times[0] < 0 or times[-1] > self.horizon):
            raise ValueError("event times must lie in [0, horizon]")

    @classmethod
    def from_events(cls, k: int, horizon: float, pairs) -> "CountingPath":
        """From (time, J) pairs; J is cut down to [k]."""
        events: dict[tuple[int, ...], list[float]] = {}
        for t, J in pairs:
            low = tuple(sorted(j for j in J if j <= k))
            if len(low) >= 2:
                events.setdefault(low, []).append(float(t))
        return cls(k, horizon, {J: np.array(ts) for J, ts in events.items()})

    @classmethod
    def from_log(cls, log: LookdownEventLog) -> "CountingPath":
        return cls.from_events(log.k, log.horizon, log.counting_events())

    def merged_times(self) -> np.ndarray:
        if not self.events:
            return np.zeros(0)
        return np.sort(np.concatenate(list(self.events.values())))

    def sorted_events(self) -> list[tuple[float, tuple[int, ...]]]:
        return sorted((float(t), J) for J, ts in self.events.items() for t in ts)

    def count(self, J, t: float | None = None) -> int:
        ts = self.events.get(tuple(sorted(J)), np.zeros(0))
        return int(ts.size if t is None else np.searchsorted(ts, t, side="right"))


def psi(path: CountingPath) -> PartitionPath:
    """Ancestral partition process of the lowest k levels.

    Backward through an event J: lineages on levels in J coalesce onto min J,
    and a lineage on a level v outside J drops by the number of inserted
    levels (J minus min J) below v. Occupied levels stay {1, ..., #blocks}.
    """
    k, T = path.k, path.horizon
    lineages: list[tuple[int, ...]] = [(i,) for i in range(1, k + 1)]  # index = level - 1
    part = Partition.singletons(k)
    jumps = []
    for t, J in reversed(path.sorted_events()):
        m = len(lineages)
        hit = [j for j in J if j <= m]
        if len(hit) < 2:
            continue
        lo = J[0]
        merged = tuple(sorted(i for j in hit for i in lineages[j - 1]))
        lineages = [merged if v == lo else lineages[v - 1]
                    for v in range(1, m + 1) if v == lo or v not in J]
        idx = tuple(n for n, b in enumerate(part.blocks) if b[0] in merged)
        jumps.append((T - t, idx))
        part = part.merge(idx)
    return PartitionPath(Partition.singletons(k), jumps, T)


def genealogy(log: LookdownEventLog) -> PartitionPath:
    """psi applied to the (possibly restricted) log of one lookdown run."""
    return psi(CountingPath.from_log(log))


def trace_ancestry_oracle(log: LookdownEventLog, k: int | None = None) -> PartitionPath:
    """Ancestral partition of the particles on levels 1..k at the horizon, from a full log.

    Independent of ``psi``: every particle ever alive gets an identity with a
    recorded parent and birth time, the whole log is replayed forward, and
    "i and j share an ancestor at time s" is evaluated directly.
    """
    if log.mode != "oracle":
        raise ValueError("the oracle needs a full (oracle-mode) log")
    k = log.k if k is None else k
    if log.final_size < k:
        raise ValueError("fewer than k particles at the sampling time")
    parent = [-1] * log.initial_size
    born = [-math.inf] * log.initial_size
    alive = list(range(log.initial_size))
    for t, kind, ell, lv in log.entries():
        if kind == BIRTH:
            p = alive[lv[0] - 1]
            inserted = set(lv[1:])
            old = iter(alive)
            nxt = []
            for pos in range(1, len(alive) + ell + 1):
                if pos in inserted:
                    parent.append(p)
                    born.append(t)
                    nxt.append(len(parent) - 1)
                else:
                    nxt.append(next(old))
            alive = nxt
        else:
            alive.pop()
    sample = alive[:k]
    r_K, T = log.time_scale, log.horizon

    def ancestor(x: int, s: float) -> int:
        # left limit at a birth instant: the newborn's ancestor at its birth time is its parent
        while born[x] >= s:
            x = parent[x]
        return x

    candidates = set()
    for x in sample:
        while parent[x] >= 0:
            candidates.add(born[x])
            x = parent[x]
    prev = Partition.singletons(k)
    transitions = []
    for s in sorted(candidates, reverse=True):
        groups: dict[int, list[int]] = {}
        for i, x in enumerate(sample, start=1):
            groups.setdefault(ancestor(x, s), []).append(i)
        part = Partition(tuple(tuple(g) for g in groups.values()))
        if part != prev:
            transitions.append((T - s / r_K, part))
            prev = part
    return PartitionPath.from_states(Partition.singletons(k), transitions, T)


def pair_coalescence_times(paths) -> tuple[np.ndarray, np.ndarray]:
    """First merger time of each path, censored at the horizon. Returns (times, censored)."""
    times, censored = [], []
    for p in paths:
        t = p.first_merge_time()
        times.append(p.horizon if t is None else t)
        censored.append(t is None)
    return np.array(times, dtype=float), np.array(censored, dtype=bool)


def first_merger_size(path: PartitionPath) -> int | None:
    """Number of blocks in the first merger, None if nothing merged."""
    return len(path.jumps[0][1]) if path.jumps else None
