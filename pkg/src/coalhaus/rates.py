"""Merger rates of the lowest k lookdown levels before and after the limit.

In every regime the total rate at which exactly the levels of a given
J subset of [k], |J| = j, receive a birth event is

    R_j(K, n) = r_K N b sum_{l >= j-1} p_l h(N, l, k, j),    N = s_K n,

where h(N, l, k, j) = C(N+l-k, l+1-j) / C(N+l, l+1) is the chance that a
uniform (l+1)-subset of [N+l] meets [k] exactly in J. The limits are

    finite variance  b (m + m2) / n        for j = 2, else 0
    stable           p0 b n^(1-alpha) B(j-alpha, k-j+alpha)
    neveu            b p0 B(j-1, k-j+1)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from coalhaus.coalescent import LambdaMeasure
from coalhaus.offspring import OffspringLaw
from coalhaus.population import FINITE_VARIANCE, NEVEU_REGIME, STABLE_REGIME, RegimeConfig

#: relative size of the neglected tail that stops the direct summation
TAIL_TOLERANCE = 1e-10
#: largest l summed term by term before the remainder is integrated
DIRECT_TERMS = 2**16
_CHUNK = 4096


def _hyper(N, ell, k: int, j: int):
    """h(N, l, k, j) as a product of k ratios; N and l may be real arrays."""
    N = np.asarray(N, dtype=float)
    ell = np.asarray(ell, dtype=float)
    out = np.ones(np.broadcast(N, ell).shape)
    for i in range(j):
        out = out * ((ell + 1.0 - i) / (N + ell - i))
    for i in range(j, k):
        out = out * ((N - (i - j + 1)) / (N + ell - i))
    return out


def level_selection_prob(N: float, ell: int, k: int, j: int) -> float:
    """C(N+l-k, l+1-j) / C(N+l, l+1) for real N >= k.

    The probability that a uniform (l+1)-subset of [N+l] meets [k] in one
    prescribed j-set. Evaluated as a product of k + j factors, which stays
    exact for non-integer N and avoids the cancellation of a log-Gamma
    difference when N is large.
    """
    if not (0 <= j <= k and ell >= max(j - 1, 0) and ell >= 0):
        raise ValueError(f"invalid arguments l={ell}, k={k}, j={j}")
    if N < k:
        raise ValueError("need N >= k")
    return float(_hyper(N, ell, k, j))


def level_selection_prob_lgamma(N: float, ell: int, k: int, j: int) -> float:
    """Same quantity through log-Gamma; kept as an independent cross-check."""
    if not (0 <= j <= k and ell >= max(j - 1, 0)):
        raise ValueError(f"invalid arguments l={ell}, k={k}, j={j}")
    g = special.gammaln
    return math.exp(g(N + ell - k + 1) - g(ell + 2 - j) - g(N - k + j)
                    - g(N + ell + 1) + g(ell + 2) + g(N))


def level_selection_prob_exact(N: int, ell: int, k: int, j: int) -> Fraction:
    """Exact rational value for integer N."""
    return Fraction(math.comb(N + ell - k, ell + 1 - j), math.comb(N + ell, ell + 1))


@dataclass(frozen=True)
class RateQuery:
    regime: str
    b: float
    offspring: OffspringLaw
    k: int
    j: int
    n: float
    K: float | None = None
    rounding: bool = False  # use N = round(s_K n), as the simulator sees it

    def __post_init__(self) -> None:
        if not 2 <= self.j <= self.k:
            raise ValueError("need 2 <= j <= k")
        if self.n <= 0:
            raise ValueError("rescaled size n must be positive")
        if self.b <= 0:
            raise ValueError("need b > 0")
        if self.K is not None and self.K <= 1:
            raise ValueError("K must exceed 1")

    @classmethod
    def from_config(cls, cfg: RegimeConfig, k: int, j: int, n: float, K: float | None = None,
                    rounding: bool = False) -> "RateQuery":
        return cls(cfg.regime, cfg.b, cfg.offspring, k, j, n, cfg.K if K is None else K, rounding)

    def scales(self) -> tuple[float, float]:
        """(r_K, s_K)."""
        K = float(self.K)
        if self.regime == FINITE_VARIANCE:
            return K, K
        if self.regime == STABLE_REGIME:
            return K ** (self.offspring.alpha - 1.0), K
        if self.regime == NEVEU_REGIME:
            return 1.0, K * math.log(K)
        raise ValueError(f"unknown regime {self.regime!r}")

    def size(self) -> float:
        N = self.scales()[1] * self.n
        return float(round(N)) if self.rounding else N


def _pmf_real(law: OffspringLaw, x):
    """p_l extended smoothly to real l >= 1 (used for the integrated tail)."""
    if law.kind == "explicit":
        raise ValueError("explicit laws have no tail to integrate")
    return law.pmf(np.asarray(x, dtype=float))


def _tail_sum(f, a: float) -> float:
    """sum_{l >= a} f(l) by Euler-Maclaurin: integral + f(a)/2 - f'(a)/12.

    The integral over [a, inf) is taken in u = a / x, which maps the
    power-law tails of all regimes onto bounded integrands on (0, 1].
    """
    def g(u):
        return f(a / u) * a / (u * u) if u > 0 else 0.0

    opts = dict(epsabs=0.0, epsrel=1e-12, limit=500)
    integral = integrate.quad(g, 0.0, 1.0, **opts)[0]
    h = 0.5
    deriv = (f(a + h) - f(a - h)) / (2.0 * h)
    return integral + 0.5 * f(a) - deriv / 12.0


def rate_prelimit(q: RateQuery, l_max: int | None = None) -> float:
    """R_j(K, n).

    By default the sum runs term by term until the remainder bound
    prefactor * P(Z > l) drops below ``TAIL_TOLERANCE`` times the partial sum,
    or until ``DIRECT_TERMS``; whatever remains is integrated
    (Euler-Maclaurin). With ``l_max`` the sum is instead cut at l_max
    exactly, which is the brute-force reference.
    """
    if q.K is None:
        raise ValueError("the prelimit rate needs K")
    r_K, _ = q.scales()
    N = q.size()
    if N < q.k:
        raise ValueError(f"N = s_K n = {N} is below the sample size k = {q.k}")
    law = q.offspring
    pref = r_K * N * q.b
    lo = q.j - 1
    if law.kind == "explicit":
        l_max = len(law.probs) if l_max is None else min(l_max, len(law.probs))
    total = 0.0
    start = lo
    stop = DIRECT_TERMS if l_max is None else l_max
    while start <= stop:
        end = min(stop, start + _CHUNK * max(1, start // _CHUNK)) + 1
        ell = np.arange(max(start, 1), end, dtype=float)
        total += float(np.sum(law.pmf(ell) * _hyper(N, ell, q.k, q.j)))
        start = end
        if l_max is None and pref * float(law.survival(start)) < TAIL_TOLERANCE * pref * total:
            return pref * total
    if l_max is not None:
        return pref * total
    tail = _tail_sum(lambda x: float(_pmf_real(law, x) * _hyper(N, x, q.k, q.j)), float(start))
    return pref * (total + tail)


def rate_limit(q: RateQuery) -> float:
    """R_j(n) (independent of K)."""
    law, b, n, k, j = q.offspring, q.b, q.n, q.k, q.j
    if q.regime == FINITE_VARIANCE:
        return b * (law.mean() + law.second_moment()) / n if j == 2 else 0.0
    if q.regime == STABLE_REGIME:
        a = law.alpha
        return law.tail_constant() * b / n ** (a - 1.0) * math.exp(special.betaln(j - a, k - j + a))
    if q.regime == NEVEU_REGIME:
        return b * law.tail_constant() * math.exp(special.betaln(j - 1.0, k - j + 1.0))
    raise ValueError(f"unknown regime {q.regime!r}")


@dataclass
class ConvergenceReport:
    regime: str
    k: int
    K_values: list
    n_grid: np.ndarray
    gaps: np.ndarray  # (len(K_values), k - 1, len(n_grid)): |R_j(K,n) - R_j(n)|, j = 2..k
    prelimit: np.ndarray = field(repr=False, default=None)
    limit: np.ndarray = field(repr=False, default=None)

    @property
    def sup_gap(self) -> np.ndarray:
        """sup over n and j, one value per K."""
        return self.gaps.max(axis=(1, 2))

    def sup_gap_by_j(self) -> np.ndarray:
        """(len(K_values), k - 1) table of sup over n."""
        return self.gaps.max(axis=2)

    def strictly_decreasing(self) -> bool:
        s = self.sup_gap
        return bool(np.all(np.diff(s) < 0))

    def rows(self):
        """CSV rows: K, j ('sup' for the overall value), sup over n of the gap."""
        out = []
        by_j = self.sup_gap_by_j()
        for a, K in enumerate(self.K_values):
            for b in range(self.k - 1):
                out.append((K, str(b + 2), float(by_j[a, b])))
            out.append((K, "sup", float(self.sup_gap[a])))
        return out


def default_n_grid(c0: float, n_max: float = 10.0, step: float = 0.5) -> np.ndarray:
    """[c_0/2, n_max] in steps of ``step``."""
    return np.arange(c0 / 2.0, n_max + 1e-9, step)


def convergence_report(cfg: RegimeConfig, k: int, K_values, n_grid=None,
                       c0: float | None = None) -> ConvergenceReport:
    """Sup-distance between R_j(K, .) and R_j(.) on a grid of n >= c_0/2, per K.

    ``c0`` defaults to n_*/2 and must satisfy 0 < c0 < n_*.
    """
    c0 = cfg.n_star / 2.0 if c0 is None else float(c0)
    if not 0.0 < c0 < cfg.n_star:
        raise ValueError("need 0 < c_0 < n_*")
    if n_grid is None:
        n_grid = default_n_grid(c0)
    n_grid = np.asarray(n_grid, dtype=float)
    if n_grid.size == 0 or np.any(n_grid < c0 / 2.0 - 1e-12):
        raise ValueError(f"the n-grid must lie in [c_0/2, inf) = [{c0 / 2.0:g}, inf)")
    K_values = list(K_values)
    pre = np.zeros((len(K_values), k - 1, n_grid.size))
    lim = np.zeros((k - 1, n_grid.size))
    for b, j in enumerate(range(2, k + 1)):
        for c, n in enumerate(n_grid):
            lim[b, c] = rate_limit(RateQuery.from_config(cfg, k, j, n))
            for a, K in enumerate(K_values):
                pre[a, b, c] = rate_prelimit(RateQuery.from_config(cfg, k, j, n, K=K))
    return ConvergenceReport(cfg.regime, k, K_values, n_grid, np.abs(pre - lim[None]), pre, lim)


def effective_size(cfg: RegimeConfig) -> float:
    """N_e = n_* / (b (m + m2)) of the finite-variance regime."""
    if cfg.regime != FINITE_VARIANCE:
        raise ValueError("the effective population size belongs to the finite-variance regime")
    law = cfg.offspring
    return cfg.n_star / (cfg.b * (law.mean() + law.second_moment()))


def limit_measure(cfg: RegimeConfig) -> LambdaMeasure:
    """The Lambda of the limiting coalescent: R_j(n_*) = lambda(k, j) for every k, j."""
    law = cfg.offspring
    if cfg.regime == FINITE_VARIANCE:
        return LambdaMeasure.kingman(effective_size(cfg))
    if cfg.regime == STABLE_REGIME:
        return LambdaMeasure.beta(law.alpha, cfg.b * law.tail_constant() / cfg.n_star ** (law.alpha - 1.0))
    return LambdaMeasure.uniform(cfg.b * law.tail_constant())
