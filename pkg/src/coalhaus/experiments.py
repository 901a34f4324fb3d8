"""Replicate orchestration and the reference experiments.

Every experiment takes a master seed; replicate ``r`` draws from
``replicate_rng(master, r)`` and results come back in replicate order, so
the thread count never changes an outcome. Sweeps over K use
``derive_master(master, K)`` per value.
"""

from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from coalhaus import stats
from coalhaus.config import KS_POPULATION_LOOKDOWN, ks_population_lookdown_threshold
from coalhaus.coalescent import LambdaMeasure, jump_chain, simulate_coalescent
from coalhaus.genealogy import CountingPath, first_merger_size, genealogy, psi, trace_ancestry_oracle
from coalhaus.limit_lookdown import simulate_limit_lookdown
from coalhaus.lookdown import ORACLE, SCALABLE, simulate_lookdown
from coalhaus.offspring import OffspringLaw
from coalhaus.population import (FINITE_VARIANCE, NEVEU_REGIME, STABLE_REGIME, Band, LowerBarrier,
                                 PopulationState, RegimeConfig, occupation_measure,
                                 simulate_population, stopping_time)
from coalhaus.rates import convergence_report, effective_size, limit_measure
from coalhaus.rng import derive_master, replicate_rng

THREADS_ENV = "COALHAUS_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    """Worker count; the environment variable wins over the argument."""
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        return max(1, int(env))
    return max(1, int(threads or 1))


def map_replicates(fn, reps: int, master: int, threads: int = 1) -> list:
    """``[fn(r, rng_r) for r in range(reps)]``, optionally on a thread pool."""
    def one(r):
        return fn(r, replicate_rng(master, r))

    if threads <= 1 or reps <= 1:
        return [one(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(reps)))


# ---------------------------------------------------------------------------
# reference configurations


def kingman_config(K: float = 100) -> RegimeConfig:
    """b=2, d=1, c=1, geometric(1/2): m=2, m2=6, n_*=3, N_e=3/16."""
    return RegimeConfig(2.0, 1.0, 1.0, K, FINITE_VARIANCE, OffspringLaw.geometric(0.5))


def stable_config(K: float = 200, alpha: float = 1.5) -> RegimeConfig:
    return RegimeConfig(1.0, 0.0, 1.0, K, STABLE_REGIME, OffspringLaw.stable(alpha))


def neveu_config(K: float = 200) -> RegimeConfig:
    return RegimeConfig(1.0, 0.0, 1.0, K, NEVEU_REGIME, OffspringLaw.neveu())


# ---------------------------------------------------------------------------
# lookdown against direct simulation


@dataclass
class LawSample:
    """Per-replicate observables at the horizon."""

    sizes: np.ndarray
    freq1: np.ndarray  # frequency of type 1
    level_types: np.ndarray | None = None  # (reps, 2): types at level 1 and level k


def population_sample(cfg: RegimeConfig, reps: int, horizon: float, ntypes: int, master: int,
                      threads: int = 1) -> LawSample:
    n0 = cfg.initial_size()

    def run(r, rng):
        init = PopulationState.iid(n0, ntypes, rng)
        traj = simulate_population(cfg, init, horizon, rng, grid=[horizon])
        counts = traj.final_counts
        N = int(traj.sizes[-1])
        return N, (counts[1] / N if N > 0 and counts.size > 1 else 0.0)

    out = map_replicates(run, reps, master, threads)
    return LawSample(np.array([o[0] for o in out]), np.array([o[1] for o in out]))


def lookdown_sample(cfg: RegimeConfig, reps: int, horizon: float, ntypes: int, k: int,
                    master: int, threads: int = 1) -> LawSample:
    """Empirical measure of the oracle-mode lookdown at the horizon, plus the types at levels 1 and k."""
    n0 = cfg.initial_size()

    def run(r, rng):
        init = rng.integers(1, ntypes + 1, size=n0)
        _, snaps = simulate_lookdown(cfg, k, init, horizon, rng, mode=ORACLE, grid=[horizon],
                                     keep_log=False)
        x = snaps.types[-1]
        N = x.size
        freq = float(np.count_nonzero(x == 1)) / N if N > 0 else 0.0
        lv = (int(x[0]), int(x[k - 1])) if N >= k else (-1, -1)
        return N, freq, lv

    out = map_replicates(run, reps, master, threads)
    return LawSample(np.array([o[0] for o in out]), np.array([o[1] for o in out]),
                     np.array([o[2] for o in out]))


def frequency_table(a, b, interior_bins: int = 10) -> np.ndarray:
    """2 x (interior_bins + 2) counts: frequency exactly 0, interior bins of (0, 1), exactly 1."""
    edges = np.linspace(0.0, 1.0, interior_bins + 1)

    def row(x):
        x = np.asarray(x, dtype=float)
        inner = x[(x > 0) & (x < 1)]
        mid = np.histogram(inner, bins=edges)[0]
        return np.concatenate([[np.sum(x == 0)], mid, [np.sum(x == 1)]])

    return np.vstack([row(a), row(b)])


def joint_level_table(level_types: np.ndarray, ntypes: int) -> np.ndarray:
    """ntypes x ntypes counts of (type at level 1, type at level k)."""
    lt = level_types[level_types[:, 0] > 0] - 1
    out = np.zeros((ntypes, ntypes))
    np.add.at(out, (lt[:, 0], lt[:, 1]), 1.0)
    return out


def level_table(level_types: np.ndarray, ntypes: int) -> np.ndarray:
    """2 x ntypes counts of the type at level 1 (row 0) and level k (row 1)."""
    ok = level_types[:, 0] > 0
    lt = level_types[ok]
    return np.vstack([np.bincount(lt[:, 0], minlength=ntypes + 1)[1:],
                      np.bincount(lt[:, 1], minlength=ntypes + 1)[1:]])


# ---------------------------------------------------------------------------
# psi against the exhaustive ancestry oracle


@dataclass
class OracleCheck:
    runs: int
    attempted: int
    mismatches: int


def oracle_equivalence(runs: int, K: float, k: int, horizon: float, master: int) -> OracleCheck:
    """Compare psi(restricted log) with the ancestry oracle on ``runs`` runs with N >= k throughout."""
    cfg = kingman_config(K)
    done = mismatches = r = 0
    while done < runs:
        log, _ = simulate_lookdown(cfg, k, None, horizon, replicate_rng(master, r), mode=ORACLE)
        r += 1
        if log.min_size < k:
            continue
        done += 1
        if trace_ancestry_oracle(log) != genealogy(log.restrict()):
            mismatches += 1
    return OracleCheck(runs, r, mismatches)


# ---------------------------------------------------------------------------
# prelimit genealogy


def genealogy_sample(cfg: RegimeConfig, k: int, reps: int, horizon: float, master: int,
                     threads: int = 1) -> list:
    """psi of the scalable lookdown per replicate; None marks a degenerate run (N(T) < k)."""
    def run(r, rng):
        log, _ = simulate_lookdown(cfg, k, None, horizon, rng, mode=SCALABLE)
        return None if log.degenerate else genealogy(log)

    return map_replicates(run, reps, master, threads)


@dataclass
class MergerFraction:
    triples: int
    mergers: int
    degenerate: int
    unmerged: int

    @property
    def fraction(self) -> float:
        return self.triples / self.mergers if self.mergers else math.nan


def first_merger_fraction(paths) -> MergerFraction:
    """Share of triple mergers among the first mergers of k=3 genealogies."""
    sizes = [None if p is None else first_merger_size(p) for p in paths]
    return MergerFraction(sum(s == 3 for s in sizes), sum(s is not None for s in sizes),
                          sum(p is None for p in paths),
                          sum(p is not None and s is None for p, s in zip(paths, sizes)))


def limit_triple_fraction(lam: LambdaMeasure) -> float:
    """P(first merger from three blocks is the triple merger)."""
    return float(jump_chain(lam, 3)[1])


# ---------------------------------------------------------------------------
# size process diagnostics


def exit_times(cfg: RegimeConfig, reps: int, horizon: float, eps: float, master: int,
               threads: int = 1) -> np.ndarray:
    """tau_K for the band |n - n_*| <= eps per replicate; nan when not triggered."""
    band = Band(cfg.n_star, eps)

    def run(r, rng):
        traj = simulate_population(cfg, None, horizon, rng, record_types=False, record_path=True)
        tau = stopping_time(traj.path_t, traj.path_n, band)
        return math.nan if tau is None else tau

    return np.array(map_replicates(run, reps, master, threads))


def occupation_fraction(cfg: RegimeConfig, reps: int, horizon: float, halfwidth: float,
                        master: int, threads: int = 1) -> float:
    """Pooled share of time in [n_* - halfwidth, n_* + halfwidth] up to min(T, tau_K)."""
    edges = [cfg.n_star - halfwidth, cfg.n_star + halfwidth]
    stop = LowerBarrier.default(cfg.n_star)

    def run(r, rng):
        traj = simulate_population(cfg, None, horizon, rng, record_types=False, record_path=True)
        occ = occupation_measure(traj.path_t, traj.path_n, edges, horizon, stop)
        return float(occ.mass.sum()), occ.total

    out = map_replicates(run, reps, master, threads)
    return sum(o[0] for o in out) / sum(o[1] for o in out)


# ---------------------------------------------------------------------------
# limit lookdown against the coalescent


def chain_key(path) -> str:
    return " > ".join(str(s) for s in path.jump_chain())


def limit_lookdown_chains(lam: LambdaMeasure, k: int, reps: int, horizon: float, master: int,
                          threads: int = 1) -> list[str]:
    def run(r, rng):
        log, _ = simulate_limit_lookdown(lam, k, list(range(1, k + 1)), horizon, rng)
        return chain_key(psi(CountingPath.from_events(k, horizon, log.counting_events())))

    return map_replicates(run, reps, master, threads)


def coalescent_chains(lam: LambdaMeasure, k: int, reps: int, horizon: float, master: int,
                      threads: int = 1) -> list[str]:
    def run(r, rng):
        return chain_key(simulate_coalescent(lam, k, horizon, rng))

    return map_replicates(run, reps, master, threads)


def chain_table(a, b) -> np.ndarray:
    ca, cb = Counter(a), Counter(b)
    keys = sorted(set(ca) | set(cb))
    return np.array([[ca[x] for x in keys], [cb[x] for x in keys]], dtype=float)


# ---------------------------------------------------------------------------
# scenario batteries for the command line


def _homogeneity_report(name, table, seed, significance, n):
    pooled = stats.pool_rare(table)
    stat, df = stats.chi_square_homogeneity(pooled)
    return stats.TestReport(name, stat, stats.chi2_threshold(df, significance), n, seed)


def kingman_reports(K: float, reps: int, seed: int, horizon: float = 1.5,
                    significance: float = stats.DEFAULT_SIGNIFICANCE, threads: int = 1):
    """Pair coalescence times of the prelimit genealogy against Exponential(1 / N_e)."""
    cfg = kingman_config(K)
    Ne = effective_size(cfg)
    paths = [p for p in genealogy_sample(cfg, 2, reps, horizon, seed, threads) if p is not None]
    times = np.array([p.horizon if p.first_merge_time() is None else p.first_merge_time()
                      for p in paths])
    ks = stats.ks_statistic(times, lambda x: -np.expm1(-np.asarray(x) / Ne))
    rel = abs(times.mean() / Ne - 1.0)
    return [stats.TestReport(f"kingman_pair_time_ks_K{K:g}", ks,
                             stats.kolmogorov_threshold(times.size, significance), times.size, seed),
            stats.TestReport(f"kingman_pair_time_mean_K{K:g}", rel, 0.15, times.size, seed)]


def triple_fraction_reports(cfg: RegimeConfig, reps: int, seed: int, horizon: float = 3.0,
                            tolerance: float = 0.2, threads: int = 1):
    target = limit_triple_fraction(limit_measure(cfg))
    frac = first_merger_fraction(genealogy_sample(cfg, 3, reps, horizon, seed, threads))
    rel = abs(frac.fraction / target - 1.0)
    return [stats.TestReport(f"{cfg.regime}_triple_fraction_K{cfg.K:g}", rel, tolerance,
                             frac.mergers, seed)]


def limit_reports(lam: LambdaMeasure, k: int, reps: int, seed: int, horizon: float = 30.0,
                  significance: float = stats.DEFAULT_SIGNIFICANCE, threads: int = 1):
    a = limit_lookdown_chains(lam, k, reps, horizon, derive_master(seed, 0), threads)
    b = coalescent_chains(lam, k, reps, horizon, derive_master(seed, 1), threads)
    return [_homogeneity_report("limit_lookdown_vs_coalescent_chain", chain_table(a, b), seed,
                                significance, [reps, reps])]


def law_reports(K: float, reps: int, seed: int, ks_threshold: float, horizon: float = 1.0,
                significance: float = stats.DEFAULT_SIGNIFICANCE, threads: int = 1):
    cfg = kingman_config(K)
    pop = population_sample(cfg, reps, horizon, 2, derive_master(seed, 0), threads)
    ld = lookdown_sample(cfg, reps, horizon, 2, 4, derive_master(seed, 1), threads)
    ks = stats.two_sample_ks(pop.sizes, ld.sizes)
    return [stats.TestReport("lookdown_vs_population_size_ks", ks, ks_threshold, [reps, reps], seed),
            _homogeneity_report("lookdown_vs_population_type_frequency",
                                frequency_table(pop.freq1, ld.freq1), seed, significance,
                                [reps, reps])]


def exchangeability_reports(K: float, reps: int, seed: int, k: int = 4, horizon: float = 1.0,
                            significance: float = stats.DEFAULT_SIGNIFICANCE, threads: int = 1):
    """Level 1 against level k: equal marginals, and a symmetric joint law.

    Both levels are read off the same run, so the marginal homogeneity test
    is conservative; the symmetry test uses the pairing directly.
    """
    cfg = kingman_config(K)
    ld = lookdown_sample(cfg, reps, horizon, 4, k, seed, threads)
    stat, df = stats.symmetry_test(joint_level_table(ld.level_types, 4))
    return [_homogeneity_report("exchangeability_level1_vs_levelk",
                                level_table(ld.level_types, 4), seed, significance, reps),
            stats.TestReport("exchangeability_joint_symmetry", stat,
                             stats.chi2_threshold(max(df, 1), significance), reps, seed)]


def oracle_reports(runs: int, seed: int, K: float = 5, k: int = 3, horizon: float = 0.5):
    chk = oracle_equivalence(runs, K, k, horizon, seed)
    return [stats.TestReport("psi_vs_ancestry_oracle_mismatches", chk.mismatches, 0, chk.runs, seed)]


def rate_reports(regime: str, k: int = 4, K_values=(1e2, 1e3, 1e4, 1e5)):
    """Strict decrease of the sup-gap, reported as the largest ratio of consecutive gaps (< 1 passes)."""
    cfg = {FINITE_VARIANCE: kingman_config, STABLE_REGIME: stable_config,
           NEVEU_REGIME: neveu_config}[regime](K_values[0])
    rep = convergence_report(cfg, k, K_values)
    s = rep.sup_gap
    worst = float(np.max(s[1:] / s[:-1])) if np.all(s[:-1] > 0) else math.inf
    return [stats.TestReport(f"{regime}_rate_gap_consecutive_ratio", worst,
                             np.nextafter(1.0, 0.0), len(K_values), None)], rep


SCENARIOS = ("kingman-default", "beta-default", "bolthausen-sznitman-default",
             "limit-vs-coalescent", "lookdown-vs-population", "exchangeability", "psi-oracle")


def run_scenario(name: str, reps: int | None, seed: int, threads: int = 1,
                 ks_threshold: float | None = None):
    """TestReports for a named scenario at its default (or the given) replicate count."""
    if name == "kingman-default":
        return kingman_reports(300, reps or 5000, seed, threads=threads)
    if name == "beta-default":
        return triple_fraction_reports(stable_config(1000), reps or 3000, seed, threads=threads)
    if name == "bolthausen-sznitman-default":
        return triple_fraction_reports(neveu_config(1000), reps or 3000, seed, horizon=5.0,
                                       threads=threads)
    if name == "limit-vs-coalescent":
        return limit_reports(LambdaMeasure.uniform(1.0), 4, reps or 5000, seed, threads=threads)
    if name == "lookdown-vs-population":
        reps = reps or 2000
        base = KS_POPULATION_LOOKDOWN if ks_threshold is None else ks_threshold
        thr = ks_population_lookdown_threshold(reps, reps, base)
        return law_reports(50, reps, seed, thr, threads=threads)
    if name == "exchangeability":
        return exchangeability_reports(50, reps or 2000, seed, threads=threads)
    if name == "psi-oracle":
        return oracle_reports(reps or 500, seed)
    raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
