"""Offspring laws (p_l)_{l>=1} for the three branching regimes.

Four families are supported:

* ``explicit``  -- a finite probability vector (p_1, ..., p_L)
* ``geometric`` -- p_l = (1 - q) q^(l-1)
* ``stable``    -- survival P(Z >= l) = l^(-alpha), alpha in (1, 2)
* ``neveu``     -- survival P(Z >= l) = 1 / l

The two heavy-tailed families are defined through their survival function,
so sampling is a closed-form inverse transform and the tail constant
``p0 = lim p_l l^(1+alpha)`` is exact (``alpha`` resp. ``1``).

Moments that diverge are reported as ``math.inf`` rather than raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from coalhaus._parsing import parse_call

INFINITE = math.inf

EXPLICIT, GEOMETRIC, STABLE, NEVEU = "explicit", "geometric", "stable", "neveu"

# integer codes understood by the numba kernels
KIND_CODES = {EXPLICIT: 0, GEOMETRIC: 1, STABLE: 2, NEVEU: 3}

_ZETA_DIRECT_TERMS = 10**6


@dataclass(frozen=True)
class OffspringLaw:
    kind: str
    q: float = 0.0
    alpha: float = 0.0
    probs: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.kind == EXPLICIT:
            p = np.asarray(self.probs, dtype=float)
            if p.size == 0 or np.any(p < 0):
                raise ValueError("explicit law needs a nonnegative probability vector")
            if abs(p.sum() - 1.0) > 1e-12:
                raise ValueError(f"explicit probabilities sum to {p.sum()!r}, not 1")
        elif self.kind == GEOMETRIC:
            if not 0.0 < self.q < 1.0:
                raise ValueError("geometric law needs 0 < q < 1")
        elif self.kind == STABLE:
            if not 1.0 < self.alpha < 2.0:
                raise ValueError("stable tail index must lie in (1, 2)")
        elif self.kind != NEVEU:
            raise ValueError(f"unknown offspring law {self.kind!r}")

    # constructors -------------------------------------------------------

    @classmethod
    def explicit(cls, *probs: float) -> "OffspringLaw":
        return cls(EXPLICIT, probs=tuple(float(p) for p in probs))

    @classmethod
    def geometric(cls, q: float) -> "OffspringLaw":
        return cls(GEOMETRIC, q=float(q))

    @classmethod
    def stable(cls, alpha: float) -> "OffspringLaw":
        return cls(STABLE, alpha=float(alpha))

    @classmethod
    def neveu(cls) -> "OffspringLaw":
        return cls(NEVEU)

    @classmethod
    def parse(cls, text: str) -> "OffspringLaw":
        """Parse ``geometric(q=0.5)``, ``stable(alpha=1.5)``, ``neveu``, ``explicit(0.2,0.8)``."""
        name, args, kwargs = parse_call(text)
        if name == EXPLICIT and args and not kwargs:
            return cls.explicit(*args)
        if name == GEOMETRIC and set(kwargs) == {"q"} and not args:
            return cls.geometric(kwargs["q"])
        if name == STABLE and set(kwargs) == {"alpha"} and not args:
            return cls.stable(kwargs["alpha"])
        if name == NEVEU and not args and not kwargs:
            return cls.neveu()
        raise ValueError(f"bad offspring law {text!r}")

    def __str__(self) -> str:
        if self.kind == EXPLICIT:
            return "explicit(" + ",".join(repr(p) for p in self.probs) + ")"
        if self.kind == GEOMETRIC:
            return f"geometric(q={self.q!r})"
        if self.kind == STABLE:
            return f"stable(alpha={self.alpha!r})"
        return "neveu"

    # distribution functions -------------------------------------------

    def survival(self, ell):
        """P(Z >= ell); accepts scalars or arrays of positive integers (reals allowed)."""
        x = np.asarray(ell, dtype=float)
        if self.kind == STABLE:
            out = x ** (-self.alpha)
        elif self.kind == NEVEU:
            out = 1.0 / x
        elif self.kind == GEOMETRIC:
            out = self.q ** (x - 1.0)
        else:
            tail = np.concatenate([np.cumsum(np.asarray(self.probs)[::-1])[::-1], [0.0]])
            idx = np.clip(x.astype(np.int64) - 1, 0, len(self.probs))
            out = tail[idx]
        out = np.where(x <= 1.0, 1.0, out)
        return out[()] if out.ndim == 0 else out

    def pmf(self, ell):
        """P(Z = ell)."""
        x = np.asarray(ell, dtype=float)
        if self.kind == EXPLICIT:
            p = np.concatenate([[0.0], self.probs, [0.0]])
            idx = np.clip(x.astype(np.int64), 0, len(self.probs) + 1)
            out = np.where(x >= 1, p[idx], 0.0)
        elif self.kind == GEOMETRIC:
            out = np.where(x >= 1, (1.0 - self.q) * self.q ** (x - 1.0), 0.0)
        else:
            # survival(x) - survival(x+1) without cancellation for large x
            a = self.alpha if self.kind == STABLE else 1.0
            with np.errstate(divide="ignore", invalid="ignore"):
                diff = -np.expm1(-a * np.log1p(1.0 / x)) * x ** (-a)
            out = np.where(x >= 1, diff, 0.0)
        return out[()] if out.ndim == 0 else out

    def from_uniform(self, u):
        """Inverse-transform map from uniforms to offspring counts.

        Heavy-tailed families take ``u`` in (0, 1] and return floor(u^(-1/alpha))
        (resp. floor(1/u)); the others return min{l : F(l) >= u}.
        """
        u = np.asarray(u, dtype=float)
        if self.kind == STABLE:
            out = np.floor(u ** (-1.0 / self.alpha))
        elif self.kind == NEVEU:
            out = np.floor(1.0 / u)
        elif self.kind == GEOMETRIC:
            with np.errstate(divide="ignore"):
                out = np.maximum(1.0, np.ceil(np.log1p(-u) / math.log(self.q)))
        else:
            cdf = np.cumsum(self.probs)
            cdf[-1] = 1.0
            out = np.searchsorted(cdf, u, side="left") + 1.0
        out = out.astype(np.int64)
        return out[()] if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, size=None):
        if self.kind in (STABLE, NEVEU):
            u = 1.0 - rng.random(size)
        else:
            u = rng.random(size)
        return self.from_uniform(u)

    # moments ------------------------------------------------------------

    def mean(self) -> float:
        if self.kind == EXPLICIT:
            return float(np.dot(np.arange(1, len(self.probs) + 1), self.probs))
        if self.kind == GEOMETRIC:
            return 1.0 / (1.0 - self.q)
        if self.kind == STABLE:
            return zeta_sum(self.alpha)
        return INFINITE

    def second_moment(self) -> float:
        if self.kind == EXPLICIT:
            ell = np.arange(1, len(self.probs) + 1)
            return float(np.dot(ell * ell, self.probs))
        if self.kind == GEOMETRIC:
            return (1.0 + self.q) / (1.0 - self.q) ** 2
        return INFINITE

    def tail_constant(self) -> float:
        """p0 with p_l ~ p0 / l^(1+alpha); zero for light-tailed laws."""
        if self.kind == STABLE:
            return self.alpha
        if self.kind == NEVEU:
            return 1.0
        return 0.0

    @property
    def heavy_tailed(self) -> bool:
        return self.kind in (STABLE, NEVEU)

    # kernel encoding ----------------------------------------------------

    def kernel_args(self) -> tuple[int, float, np.ndarray]:
        """(code, parameter, cdf) triple consumed by ``coalhaus._kernels``.

        The parameter is pre-transformed for the inverse-CDF draw: 1 / log q
        (geometric) or -1 / alpha (stable).
        """
        if self.kind == EXPLICIT:
            cdf = np.cumsum(np.asarray(self.probs, dtype=float))
            cdf[-1] = 1.0
            return KIND_CODES[EXPLICIT], 0.0, cdf
        if self.kind == GEOMETRIC:
            param = 1.0 / math.log(self.q)
        elif self.kind == STABLE:
            param = -1.0 / self.alpha
        else:
            param = 1.0
        return KIND_CODES[self.kind], float(param), np.ones(1)


def zeta_sum(alpha: float, terms: int = _ZETA_DIRECT_TERMS) -> float:
    """sum_{l>=1} l^(-alpha) by direct summation plus an Euler-Maclaurin tail.

    The tail from ``terms + 1`` onwards uses the integral, the half-endpoint
    and the first derivative correction; the neglected remainder is
    O(terms^(-alpha-3)).
    """
    if alpha <= 1.0:
        return INFINITE
    ell = np.arange(terms, 0, -1, dtype=float)  # small terms first
    head = math.fsum(ell ** (-alpha))
    L = float(terms + 1)
    tail = L ** (1.0 - alpha) / (alpha - 1.0) + 0.5 * L ** (-alpha) + alpha * L ** (-alpha - 1.0) / 12.0
    return head + tail
