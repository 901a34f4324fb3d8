"""Modified (type-II) lookdown construction of the logistic branching process.

Particles sit on levels 1..N. At rate ``b p_l N`` a birth picks a uniform
(l+1)-subset J of [N + l]; the particle at min J is the parent and copies of
it are inserted at the other levels of J, everyone else keeping their order.
At rate ``N (d + c N / K)`` the particle at the top level N is removed.

Two simulation modes are provided:

``oracle``
    the full level vector is evolved and every event is logged with its full
    level set J. Memory grows with N, so this is for small populations.
``scalable``
    only N and the types at levels 1..k are evolved. A birth is logged (with
    J restricted to [k]) only when |J & [k]| >= 2, and a death only when it
    removes a level <= k.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from coalhaus import _kernels
from coalhaus.population import RegimeConfig

ORACLE, SCALABLE = "oracle", "scalable"
ORACLE_MAX_CAPACITY = 10**4
ORACLE_SIZE_CAP = 10**7


@dataclass
class LookdownState:
    """Level-ordered types (``levels[0]`` is level 1) plus retired extended coordinates.

    ``extended[i]`` is the type of coordinate ``len(levels) + 1 + i``: the last
    type held while that level was alive, or its initial type.
    """

    levels: list
    t: float = 0.0
    extended: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.levels)

    def coordinate(self, j: int):
        """Type of the extended coordinate j (1-based); None if never set."""
        if j <= len(self.levels):
            return self.levels[j - 1]
        i = j - len(self.levels) - 1
        return self.extended[i] if i < len(self.extended) else None


def validate_level_set(J, N: int, ell: int) -> tuple[int, ...]:
    J = tuple(int(j) for j in J)
    if len(J) != ell + 1 or len(set(J)) != len(J):
        raise ValueError(f"a birth of size {ell} needs {ell + 1} distinct levels, got {J}")
    if min(J) < 1 or max(J) > N + ell:
        raise ValueError(f"levels {J} fall outside [1, {N + ell}]")
    return tuple(sorted(J))


def step_birth(state: LookdownState, ell: int, J) -> LookdownState:
    """Apply B_J: copies of the type at min J go to J minus min J, others keep their order."""
    N = state.size
    J = validate_level_set(J, N, ell)
    parent = state.levels[J[0] - 1]
    inserted = set(J[1:])
    old = iter(state.levels)
    new = [parent if pos in inserted else next(old) for pos in range(1, N + ell + 1)]
    # coordinates above N + l were not touched; the first l extended slots are now alive
    return LookdownState(new, state.t, list(state.extended[ell:]))


def step_death(state: LookdownState) -> LookdownState:
    """Remove the top level; it lives on as a frozen extended coordinate."""
    if state.size == 0:
        raise ValueError("cannot remove a particle from an empty state")
    return LookdownState(state.levels[:-1], state.t, [state.levels[-1]] + list(state.extended))


def empirical_measure(state) -> Counter:
    """Type counts of the living levels (forgets the order)."""
    levels = state.levels if isinstance(state, LookdownState) else state
    return Counter(np.asarray(levels).tolist())


def uniform_level_set(rng: np.random.Generator, m: int, s: int) -> np.ndarray:
    """Sorted uniform s-subset of {1, ..., m}."""
    if not 0 < s <= m:
        raise ValueError("need 0 < s <= m")
    return _kernels.uniform_subset(rng, m, s, np.zeros(m, dtype=np.bool_))


# ---------------------------------------------------------------------------
# event logs


BIRTH, DEATH = 1, 0


@dataclass
class LookdownEventLog:
    """Time-ordered birth/death records of one lookdown run.

    For entry i, ``levels[offsets[i]:offsets[i+1]]`` is the level set J of a
    birth (restricted to [k] in scalable mode) or the removed level of a death.
    ``times`` are model times; ``time_scale`` converts to rescaled time.
    """

    mode: str
    k: int
    times: np.ndarray
    kinds: np.ndarray
    sizes: np.ndarray
    offsets: np.ndarray
    levels: np.ndarray
    time_scale: float
    horizon: float  # rescaled
    initial_size: int
    final_size: int
    min_size: int

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("event times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    def entries(self):
        """Yield (model time, kind, l, levels) per event."""
        for i in range(len(self.times)):
            lv = tuple(int(v) for v in self.levels[self.offsets[i]:self.offsets[i + 1]])
            yield float(self.times[i]), int(self.kinds[i]), int(self.sizes[i]), lv

    @property
    def degenerate(self) -> bool:
        """Fewer than k individuals at the sampling time."""
        return self.final_size < self.k

    def restrict(self, k: int | None = None) -> "LookdownEventLog":
        """The scalable-mode log that the same run would have produced."""
        k = self.k if k is None else k
        if self.mode == SCALABLE and k > self.k:
            raise ValueError("cannot widen a restricted log")
        rows = []
        for t, kind, ell, lv in self.entries():
            if kind == BIRTH:
                low = tuple(j for j in lv if j <= k)
                if len(low) >= 2:
                    rows.append((t, BIRTH, ell, low))
            elif lv[0] <= k:
                rows.append((t, DEATH, 0, lv))
        return _log_from_rows(SCALABLE, k, rows, self.time_scale, self.horizon,
                              self.initial_size, self.final_size, self.min_size)

    def counting_events(self):
        """(rescaled time, J) for every birth touching >= 2 of the lowest k levels."""
        out = []
        for t, kind, _, lv in self.entries():
            if kind == BIRTH:
                low = tuple(j for j in lv if j <= self.k)
                if len(low) >= 2:
                    out.append((t / self.time_scale, low))
        return out


def _log_from_rows(mode, k, rows, time_scale, horizon, n0, n_end, n_min) -> LookdownEventLog:
    offsets = np.zeros(len(rows) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(r[3]) for r in rows])
    levels = np.array([j for r in rows for j in r[3]], dtype=np.int64)
    return LookdownEventLog(
        mode, k, np.array([r[0] for r in rows], dtype=float),
        np.array([r[1] for r in rows], dtype=np.int8),
        np.array([r[2] for r in rows], dtype=np.int64), offsets, levels,
        time_scale, horizon, n0, n_end, n_min)


@dataclass
class LookdownSnapshots:
    times: np.ndarray  # rescaled
    sizes: np.ndarray
    types: list  # full living vector (oracle) or lowest k coordinates (scalable)


def simulate_lookdown(cfg: RegimeConfig, k: int, initial=None, horizon: float = 1.0,
                      rng: np.random.Generator | None = None, mode: str = SCALABLE,
                      grid=None, extended_initial=None, keep_log: bool = True):
    """Simulate the prelimit lookdown up to rescaled time ``horizon``.

    ``initial`` is the level-ordered type vector (default: distinct labels
    1..N(0) with N(0) = round(s_K n_*)). ``extended_initial`` optionally gives
    the initial types of coordinates above N(0); unset coordinates carry
    label 0. Returns ``(LookdownEventLog, LookdownSnapshots)``.
    """
    if k < 1:
        raise ValueError("sample size k must be positive")
    if rng is None:
        rng = np.random.default_rng()
    if initial is None:
        initial = np.arange(1, cfg.initial_size() + 1)
    x0 = np.asarray(initial, dtype=np.int64)
    n0 = len(x0)
    if extended_initial is not None:
        x0 = np.concatenate([x0, np.asarray(extended_initial, dtype=np.int64)])
    r_K = cfg.time_scale
    grid = np.array([0.0, horizon] if grid is None else grid, dtype=float)
    code, param, cdf = cfg.offspring.kernel_args()
    args = (float(cfg.b), float(cfg.d), float(cfg.c), float(cfg.K), code, param, cdf)
    if mode == ORACLE:
        if cfg.mass_scale * cfg.n_star > ORACLE_MAX_CAPACITY:
            raise ValueError("oracle mode is limited to s_K n_* <= 1e4")
        (_, N, n_min, snap_n, snap_off, snap_flat, log_t, log_kind, log_off,
         log_lv) = _kernels.lookdown_full_run(rng, *args, x0, n0, horizon * r_K,
                                              grid * r_K, keep_log, ORACLE_SIZE_CAP)
        sizes = np.where(log_kind == BIRTH, np.diff(log_off) - 1, 0)
        log = LookdownEventLog(ORACLE, k, log_t, log_kind, sizes, log_off, log_lv,
                               r_K, horizon, n0, int(N), int(n_min))
        types = [snap_flat[snap_off[i]:snap_off[i + 1]].copy() for i in range(len(grid))]
    elif mode == SCALABLE:
        if k > 62:
            raise ValueError("scalable mode supports k <= 62")
        y0 = np.zeros(k, dtype=np.int64)
        m = min(k, len(x0))
        y0[:m] = x0[:m]
        (_, N, n_min, snap_n, snap_y, log_t, log_kind, log_val,
         log_ell) = _kernels.lookdown_low_run(rng, *args, y0, n0, k, horizon * r_K, grid * r_K)
        rows = []
        for t, kind, val, ell in zip(log_t, log_kind, log_val, log_ell):
            if kind == BIRTH:
                lv = tuple(i + 1 for i in range(k) if (int(val) >> i) & 1)
            else:
                lv = (int(val),)
            rows.append((float(t), int(kind), int(ell), lv))
        log = _log_from_rows(SCALABLE, k, rows, r_K, horizon, n0, int(N), int(n_min))
        types = [row.copy() for row in snap_y]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return log, LookdownSnapshots(grid, snap_n, types)
