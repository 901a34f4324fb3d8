"""Test statistics and pass/fail reports.

All tests reject for large values of a nonnegative statistic: a report
passes when ``statistic <= threshold``. Thresholds are either fixed
quantiles (chi-square, normal) or permutation-calibrated critical values
frozen into the default configuration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

DEFAULT_SIGNIFICANCE = 1e-3


@dataclass
class TestReport:
    test: str
    statistic: float
    threshold: float
    n: int | list
    seed: int | None = None
    passed: bool | None = None
    metadata: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def __post_init__(self) -> None:
        self.statistic = float(self.statistic)
        self.threshold = float(self.threshold)
        ok = bool(self.statistic <= self.threshold)
        if self.passed is None:
            self.passed = ok
        elif self.passed != ok:
            raise ValueError("pass flag disagrees with statistic and threshold")

    def to_dict(self) -> dict:
        return {"test": self.test, "statistic": self.statistic, "threshold": self.threshold,
                "pass": self.passed, "n": self.n, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "TestReport":
        return cls(d["test"], d["statistic"], d["threshold"], d["n"], d.get("seed"), d["pass"])

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.test}: statistic={self.statistic:.6g} threshold={self.threshold:.6g}"


def dumps_reports(reports) -> str:
    """Deterministic JSON (sorted keys, newline-terminated)."""
    return json.dumps([r.to_dict() for r in reports], sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# statistics


def ks_statistic(sample, cdf) -> float:
    """sup |F_n - F| against a reference CDF (callable)."""
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    return float(sps.kstest(x, cdf).statistic)


def two_sample_ks(a, b) -> float:
    """Plain two-sample KS distance; with ties it is conservative, so use a calibrated threshold."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    return float(sps.ks_2samp(a, b).statistic)


def chi_square_gof(observed, probs) -> tuple[float, int]:
    """Pearson statistic and degrees of freedom for counts against cell probabilities."""
    obs = np.asarray(observed, dtype=float)
    p = np.asarray(probs, dtype=float)
    if obs.shape != p.shape or obs.size < 2:
        raise ValueError("need matching count and probability vectors with >= 2 cells")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("cell probabilities must be a probability vector")
    n = obs.sum()
    if n <= 0:
        raise ValueError("no observations")
    if np.any(obs[p == 0] > 0):
        return math.inf, int(np.count_nonzero(p)) - 1
    keep = p > 0
    exp = n * p[keep]
    return float(np.sum((obs[keep] - exp) ** 2 / exp)), int(keep.sum()) - 1


def chi_square_homogeneity(table) -> tuple[float, int]:
    """Pearson statistic and df for equality of the row distributions of a contingency table."""
    t = np.asarray(table, dtype=float)
    if t.ndim != 2 or t.shape[0] < 2:
        raise ValueError("need a table with at least two rows")
    t = t[:, t.sum(axis=0) > 0]
    if t.shape[1] < 2 or np.any(t.sum(axis=1) == 0):
        raise ValueError("degenerate contingency table")
    res = sps.chi2_contingency(t, correction=False)
    return float(res.statistic), int(res.dof)


def symmetry_test(table) -> tuple[float, int]:
    """Bowker's statistic and df for symmetry of a square table of paired categories.

    Pairs of cells with no observations are skipped.
    """
    t = np.asarray(table, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValueError("need a square table")
    i, j = np.triu_indices(t.shape[0], 1)
    a, b = t[i, j], t[j, i]
    keep = a + b > 0
    if not keep.any():
        return 0.0, 0
    return float(np.sum((a[keep] - b[keep]) ** 2 / (a[keep] + b[keep]))), int(keep.sum())


def pool_rare(table, min_expected: float = 5.0) -> np.ndarray:
    """Merge the columns whose smallest expected count is below ``min_expected`` into one."""
    t = np.asarray(table, dtype=float)
    exp = np.outer(t.sum(axis=1), t.sum(axis=0)) / t.sum()
    rare = exp.min(axis=0) < min_expected
    if rare.sum() <= 1:
        return t
    return np.column_stack([t[:, ~rare], t[:, rare].sum(axis=1)])


def chi2_threshold(df: int, significance: float = DEFAULT_SIGNIFICANCE) -> float:
    return float(sps.chi2.ppf(1.0 - significance, df))


def poisson_rate_test(count: int, horizon: float, rate: float) -> float:
    """z = (count - rate T) / sqrt(rate T)."""
    mu = rate * horizon
    if mu <= 0:
        raise ValueError("need a positive expected count")
    return float((count - mu) / math.sqrt(mu))


def normal_threshold(significance: float = DEFAULT_SIGNIFICANCE) -> float:
    """Two-sided critical value for |z|."""
    return float(sps.norm.ppf(1.0 - significance / 2.0))


def kolmogorov_threshold(n: int, significance: float = DEFAULT_SIGNIFICANCE) -> float:
    """Exact one-sample KS critical value for continuous data."""
    return float(sps.kstwo.ppf(1.0 - significance, n))


def permutation_ks_threshold(a, b, significance: float, permutations: int,
                             rng: np.random.Generator) -> float:
    """(1 - significance) quantile of the two-sample KS distance under random relabelling.

    Used once, on pilot data, to fix critical values for discrete samples.
    """
    a = np.asarray(a, dtype=float)
    pooled = np.concatenate([a, np.asarray(b, dtype=float)])
    m = a.size
    stats = np.empty(permutations)
    for i in range(permutations):
        perm = rng.permutation(pooled)
        stats[i] = sps.ks_2samp(perm[:m], perm[m:]).statistic
    return float(np.quantile(stats, 1.0 - significance, method="higher"))


def dispersion_ratio(counts) -> float:
    """Variance over mean of a sample of counts."""
    c = np.asarray(counts, dtype=float)
    if c.size < 2 or c.mean() <= 0:
        raise ValueError("need at least two counts with a positive mean")
    return float(c.var(ddof=1) / c.mean())
