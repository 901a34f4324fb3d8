"""Logistic branching process: regime parameters and exact Gillespie simulation.

Each individual gives birth at rate ``b`` to a random number of children
drawn from the offspring law (children copy the parent's type) and dies at
rate ``d + c N / K``. The three regimes differ in how size and time are
rescaled:

============== ============ ============== =====================
regime          time r_K     mass s_K       carrying capacity n_*
============== ============ ============== =====================
finite_variance K            K              (b m - d) / c
stable          K^(alpha-1)  K              (b m - d) / c
neveu           1            K log K        b p0 / c
============== ============ ============== =====================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from coalhaus import _kernels
from coalhaus.offspring import EXPLICIT, GEOMETRIC, NEVEU, STABLE, OffspringLaw

FINITE_VARIANCE, STABLE_REGIME, NEVEU_REGIME = "finite_variance", "stable", "neveu"
REGIMES = (FINITE_VARIANCE, STABLE_REGIME, NEVEU_REGIME)

#: type label standing for x_0 in the extinction convention rho = delta_{x_0}
EXTINCT_LABEL = 0


@dataclass(frozen=True)
class RegimeConfig:
    b: float
    d: float
    c: float
    K: float
    regime: str
    offspring: OffspringLaw

    def __post_init__(self) -> None:
        if self.b <= 0 or self.c <= 0 or self.d < 0:
            raise ValueError("need b > 0, c > 0, d >= 0")
        if self.K <= 1:
            raise ValueError("scaling parameter K must exceed 1")
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        kind = self.offspring.kind
        if self.regime == FINITE_VARIANCE:
            if kind not in (EXPLICIT, GEOMETRIC):
                raise ValueError("finite-variance regime needs an explicit or geometric law")
            if self.b * self.offspring.mean() - self.d <= 0:
                raise ValueError("finite-variance regime needs b m - d > 0")
        elif self.regime == STABLE_REGIME:
            if kind != STABLE:
                raise ValueError("stable regime needs a stable(alpha) offspring law")
            if self.b * self.offspring.mean() - self.d <= 0:
                raise ValueError("stable regime needs b m - d > 0")
        elif kind != NEVEU:
            raise ValueError("neveu regime needs the neveu offspring law")

    @property
    def alpha(self) -> float:
        return self.offspring.alpha if self.regime == STABLE_REGIME else float("nan")

    @property
    def time_scale(self) -> float:
        """r_K: model time per unit of rescaled time."""
        if self.regime == FINITE_VARIANCE:
            return float(self.K)
        if self.regime == STABLE_REGIME:
            return float(self.K) ** (self.alpha - 1.0)
        return 1.0

    @property
    def mass_scale(self) -> float:
        """s_K: individuals per unit of rescaled size."""
        if self.regime == NEVEU_REGIME:
            return float(self.K) * math.log(self.K)
        return float(self.K)

    @property
    def n_star(self) -> float:
        law = self.offspring
        if self.regime == NEVEU_REGIME:
            return self.b * law.tail_constant() / self.c
        return (self.b * law.mean() - self.d) / self.c

    def initial_size(self) -> int:
        return int(round(self.mass_scale * self.n_star))

    def with_K(self, K: float) -> "RegimeConfig":
        return RegimeConfig(self.b, self.d, self.c, K, self.regime, self.offspring)

    def event_rate(self, N: int) -> float:
        """Total jump rate b N + N (d + c N / K) in model time."""
        return self.b * N + N * (self.d + self.c * N / self.K)


@dataclass
class PopulationState:
    """Counts per opaque type label (index = label) at model time ``t``."""

    counts: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(self.counts < 0):
            raise ValueError("negative type count")

    @property
    def size(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def distinct(cls, n: int) -> "PopulationState":
        """n individuals carrying the distinct labels 1..n (label 0 stays reserved)."""
        counts = np.ones(n + 1, dtype=np.int64)
        counts[0] = 0
        return cls(counts)

    @classmethod
    def iid(cls, n: int, ntypes: int, rng: np.random.Generator) -> "PopulationState":
        """n individuals with i.i.d. uniform labels in 1..ntypes."""
        labels = rng.integers(1, ntypes + 1, size=n)
        return cls(np.bincount(labels, minlength=ntypes + 1))

    @classmethod
    def from_labels(cls, labels) -> "PopulationState":
        labels = np.asarray(labels, dtype=np.int64)
        return cls(np.bincount(labels, minlength=int(labels.max(initial=0)) + 1))


@dataclass
class TrajectorySummary:
    times: np.ndarray  # rescaled grid
    sizes: np.ndarray  # N at each grid point
    n: np.ndarray  # rescaled size N / s_K
    frequencies: np.ndarray | None  # (grid, labels); delta at EXTINCT_LABEL after extinction
    extinct: bool
    time_scale: float
    mass_scale: float
    # event-resolution path (rescaled time, rescaled size), when requested
    path_t: np.ndarray | None = None
    path_n: np.ndarray | None = None
    births: int = 0
    offspring_total: int = 0
    deaths: int = 0
    initial_size: int = 0
    final_counts: np.ndarray | None = field(default=None, repr=False)


def simulate_population(cfg: RegimeConfig, initial: PopulationState | None, horizon: float,
                        rng: np.random.Generator, grid=None, record_types: bool = True,
                        record_path: bool = False) -> TrajectorySummary:
    """Exact simulation of the logistic branching process up to rescaled time ``horizon``.

    ``grid`` is in rescaled time (default: 0 and ``horizon``). Grid points
    that coincide with a jump report the left limit.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if initial is None:
        initial = PopulationState.distinct(cfg.initial_size())
    r_K, s_K = cfg.time_scale, cfg.mass_scale
    grid = np.array([0.0, horizon] if grid is None else grid, dtype=float)
    if np.any(np.diff(grid) < 0) or (grid.size and (grid[0] < 0 or grid[-1] > horizon)):
        raise ValueError("grid must be sorted and lie in [0, horizon]")
    code, param, cdf = cfg.offspring.kernel_args()
    counts0 = initial.counts.copy()
    if counts0.size == 0:
        counts0 = np.zeros(1, dtype=np.int64)
    (grid_n, grid_counts, path_t, path_n, N, counts, births, offspring_total,
     deaths, _) = _kernels.population_run(
        rng, float(cfg.b), float(cfg.d), float(cfg.c), float(cfg.K), code, param, cdf,
        counts0, horizon * r_K, grid * r_K, record_types, record_path)
    freqs = None
    if record_types:
        freqs = np.zeros(grid_counts.shape, dtype=float)
        alive = grid_n > 0
        freqs[alive] = grid_counts[alive] / grid_n[alive, None]
        freqs[~alive, EXTINCT_LABEL] = 1.0
    return TrajectorySummary(
        times=grid, sizes=grid_n, n=grid_n / s_K, frequencies=freqs, extinct=bool(N == 0),
        time_scale=r_K, mass_scale=s_K,
        path_t=path_t / r_K if record_path else None,
        path_n=path_n / s_K if record_path else None,
        births=int(births), offspring_total=int(offspring_total), deaths=int(deaths),
        initial_size=int(counts0.sum()), final_counts=counts)


# ---------------------------------------------------------------------------
# stopping times and occupation measures


@dataclass(frozen=True)
class Band:
    """Exit from the band |n - center| <= eps."""

    center: float
    eps: float

    def outside(self, n):
        return np.abs(np.asarray(n) - self.center) > self.eps


@dataclass(frozen=True)
class LowerBarrier:
    """First time n drops strictly below ``level`` (c_0 / 2)."""

    level: float

    def outside(self, n):
        return np.asarray(n) < self.level

    @classmethod
    def default(cls, n_star: float) -> "LowerBarrier":
        # c_0 = n_* / 2, barrier at c_0 / 2
        return cls(n_star / 4.0)


def stopping_time(path_t, path_n, threshold) -> float | None:
    """First event time at which the piecewise-constant path leaves the allowed region.

    Returns None when the path never triggers (``tau_K`` = "not triggered").
    """
    path_t = np.asarray(path_t, dtype=float)
    hit = np.flatnonzero(threshold.outside(path_n))
    return float(path_t[hit[0]]) if hit.size else None


def trajectory_stopping_time(traj: TrajectorySummary, threshold) -> float | None:
    if traj.path_t is None:
        raise ValueError("stopping times need an event-resolution path (record_path=True)")
    return stopping_time(traj.path_t, traj.path_n, threshold)


@dataclass
class OccupationMeasure:
    edges: np.ndarray
    mass: np.ndarray
    total: float
    tau: float | None

    def fraction(self, lo: float, hi: float) -> float:
        """Share of accounted time with lo <= n < hi (bin-aligned query)."""
        sel = (self.edges[:-1] >= lo - 1e-12) & (self.edges[1:] <= hi + 1e-12)
        return float(self.mass[sel].sum() / self.total) if self.total > 0 else float("nan")


def occupation_measure(path_t, path_n, bins, horizon: float, stop=None) -> OccupationMeasure:
    """Time-weighted histogram of the size path over [0, min(horizon, tau)].

    Time spent outside the bins is accounted in ``total`` but in no bin.
    """
    path_t = np.asarray(path_t, dtype=float)
    path_n = np.asarray(path_n, dtype=float)
    edges = np.asarray(bins, dtype=float)
    tau = stopping_time(path_t, path_n, stop) if stop is not None else None
    end = horizon if tau is None else min(horizon, tau)
    keep = path_t < end
    t0 = path_t[keep]
    vals = path_n[keep]
    dt = np.diff(np.append(t0, end))
    mass, _ = np.histogram(vals, bins=edges, weights=dt)
    return OccupationMeasure(edges, mass, float(end), tau)


def lyapunov(n, n_star: float, eps: float):
    """V_eps(n) = n / (n_* + eps) - 1 - log(n / (n_* - eps))."""
    if not 0 < eps < n_star:
        raise ValueError("need 0 < eps < n_*")
    n = np.asarray(n, dtype=float)
    if np.any(n <= 0):
        raise ValueError("V_eps is defined for n > 0 only")
    out = n / (n_star + eps) - 1.0 - np.log(n / (n_star - eps))
    return out[()] if out.ndim == 0 else out
