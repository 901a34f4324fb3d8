"""Partitions of [k], Lambda-measures and the Lambda-coalescent.

A k-coalescent with n blocks merges any particular j of them at rate

    lambda(n, j) = int_0^1 u^(j-2) (1-u)^(n-j) Lambda(du),

the atom a = Lambda({0}) contributing only to pairwise mergers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from coalhaus._parsing import parse_call

# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class Partition:
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        blocks = tuple(sorted(tuple(sorted(b)) for b in self.blocks))
        if any(len(b) == 0 for b in blocks):
            raise ValueError("empty block")
        elems = [i for b in blocks for i in b]
        if sorted(elems) != list(range(1, len(elems) + 1)):
            raise ValueError("blocks must partition {1, ..., k}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def singletons(cls, k: int) -> "Partition":
        return cls(tuple((i,) for i in range(1, k + 1)))

    @classmethod
    def parse(cls, text: str) -> "Partition":
        return cls(tuple(tuple(int(i) for i in b.split(",")) for b in text.split("|")))

    @property
    def k(self) -> int:
        return sum(len(b) for b in self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def __str__(self) -> str:
        return "|".join(",".join(str(i) for i in b) for b in self.blocks)

    def merge(self, indices: Sequence[int]) -> "Partition":
        """Merge the blocks at the given (0-based, canonical-order) indices."""
        idx = set(indices)
        if len(idx) < 2 or max(idx) >= len(self.blocks) or min(idx) < 0:
            raise ValueError(f"invalid merger {sorted(idx)} of {len(self.blocks)} blocks")
        merged = tuple(i for j in sorted(idx) for i in self.blocks[j])
        rest = tuple(b for j, b in enumerate(self.blocks) if j not in idx)
        return Partition(rest + (merged,))

    def restrict(self, m: int) -> "Partition":
        """The induced partition of {1, ..., m}."""
        return Partition(tuple(r for r in (tuple(i for i in b if i <= m) for b in self.blocks) if r))

    def is_coarsening_of(self, other: "Partition") -> bool:
        where = {i: n for n, b in enumerate(self.blocks) for i in b}
        return all(len({where[i] for i in b}) == 1 for b in other.blocks)


@dataclass
class PartitionPath:
    """Piecewise-constant, right-continuous path of partitions on [0, horizon].

    ``jumps`` holds (time, merged block indices) pairs; the indices refer to the
    canonical block order of the partition just before the jump.
    """

    initial: Partition
    jumps: list[tuple[float, tuple[int, ...]]] = field(default_factory=list)
    horizon: float = math.inf

    def __post_init__(self) -> None:
        times = [t for t, _ in self.jumps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("jump times must be strictly increasing")
        self._states = [self.initial]
        for _, idx in self.jumps:
            self._states.append(self._states[-1].merge(idx))

    @classmethod
    def from_states(cls, initial: Partition, transitions, horizon: float = math.inf) -> "PartitionPath":
        """Build from (time, partition) pairs, each a single merger of the previous state."""
        jumps = []
        prev = initial
        for t, part in transitions:
            where = {i: n for n, b in enumerate(part.blocks) for i in b}
            groups: dict[int, list[int]] = {}
            for j, b in enumerate(prev.blocks):
                groups.setdefault(where[b[0]], []).append(j)
            merged = [g for g in groups.values() if len(g) > 1]
            if len(merged) != 1 or prev.merge(merged[0]) != part:
                raise ValueError("transition is not a single merger")
            jumps.append((float(t), tuple(merged[0])))
            prev = part
        return cls(initial, jumps, horizon)

    @property
    def times(self) -> list[float]:
        return [t for t, _ in self.jumps]

    @property
    def states(self) -> list[Partition]:
        return list(self._states)

    def at(self, t: float) -> Partition:
        i = int(np.searchsorted(self.times, t, side="right"))
        return self._states[i]

    def jump_chain(self) -> tuple[Partition, ...]:
        return tuple(self._states)

    def first_merge_time(self) -> float | None:
        return self.jumps[0][0] if self.jumps else None

    def restrict(self, m: int) -> "PartitionPath":
        """The induced path on {1, ..., m}; jumps invisible on [m] are dropped."""
        prev = self.initial.restrict(m)
        out = []
        for t, state in zip(self.times, self._states[1:]):
            r = state.restrict(m)
            if r != prev:
                out.append((t, r))
                prev = r
        return PartitionPath.from_states(self.initial.restrict(m), out, self.horizon)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PartitionPath):
            return NotImplemented
        return self.initial == other.initial and self.jumps == other.jumps


# ---------------------------------------------------------------------------
# Lambda measures

NONE, BETA, UNIFORM, GENERAL = "none", "beta", "uniform", "general"
_GENERAL_CUTOFF = 1e-12


@dataclass(frozen=True)
class LambdaMeasure:
    """Lambda = a delta_0 + Lambda_0 with Lambda_0 absolutely continuous.

    ``beta`` has density scale (1-u)^(alpha-1) u^(1-alpha); ``uniform`` has
    constant density ``scale``; ``general`` takes any nonnegative density.
    """

    atom: float = 0.0
    kind: str = NONE
    alpha: float = 0.0
    scale: float = 0.0
    density: Callable[[float], float] | None = None

    def __post_init__(self) -> None:
        if self.atom < 0 or self.scale < 0:
            raise ValueError("Lambda must be a nonnegative measure")
        if self.kind == BETA and not 1.0 < self.alpha < 2.0:
            raise ValueError("beta density needs alpha in (1, 2)")
        if self.kind == GENERAL and self.density is None:
            raise ValueError("general Lambda needs a density")
        if self.kind not in (NONE, BETA, UNIFORM, GENERAL):
            raise ValueError(f"unknown Lambda kind {self.kind!r}")

    @classmethod
    def kingman(cls, effective_size: float = 1.0) -> "LambdaMeasure":
        """Lambda = (1 / N_e) delta_0."""
        return cls(atom=1.0 / effective_size)

    @classmethod
    def dirac(cls, a: float) -> "LambdaMeasure":
        return cls(atom=float(a))

    @classmethod
    def beta(cls, alpha: float, scale: float = 1.0) -> "LambdaMeasure":
        return cls(kind=BETA, alpha=float(alpha), scale=float(scale))

    @classmethod
    def uniform(cls, scale: float = 1.0) -> "LambdaMeasure":
        return cls(kind=UNIFORM, scale=float(scale))

    @classmethod
    def general(cls, density: Callable[[float], float], atom: float = 0.0) -> "LambdaMeasure":
        return cls(atom=float(atom), kind=GENERAL, scale=1.0, density=density)

    @classmethod
    def parse(cls, text: str) -> "LambdaMeasure":
        """``beta(alpha=1.5,scale=1.0)``, ``uniform(scale=1)``, ``kingman(ne=0.1875)``, ``dirac(a=0.5)``."""
        name, args, kw = parse_call(text)
        if args:
            raise ValueError(f"Lambda arguments must be keywords: {text!r}")
        if name == "beta" and set(kw) <= {"alpha", "scale"} and "alpha" in kw:
            return cls.beta(kw["alpha"], kw.get("scale", 1.0))
        if name == "uniform" and set(kw) <= {"scale"}:
            return cls.uniform(kw.get("scale", 1.0))
        if name == "kingman" and set(kw) <= {"ne"}:
            return cls.kingman(kw.get("ne", 1.0))
        if name == "dirac" and set(kw) == {"a"}:
            return cls.dirac(kw["a"])
        raise ValueError(f"bad Lambda specification {text!r}")

    def __str__(self) -> str:
        if self.kind == BETA:
            return f"beta(alpha={self.alpha!r},scale={self.scale!r})"
        if self.kind == UNIFORM:
            return f"uniform(scale={self.scale!r})"
        if self.kind == NONE:
            return f"dirac(a={self.atom!r})"
        return "general"

    def density_at(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == BETA:
            return self.scale * (1.0 - u) ** (self.alpha - 1.0) * u ** (1.0 - self.alpha)
        if self.kind == UNIFORM:
            return self.scale * np.ones_like(u)
        if self.kind == GENERAL:
            return np.vectorize(self.density, otypes=[float])(u)
        return np.zeros_like(u)

    def total_mass(self) -> float:
        if self.kind == BETA:
            return self.atom + self.scale * special.beta(2.0 - self.alpha, self.alpha)
        if self.kind == UNIFORM:
            return self.atom + self.scale
        if self.kind == GENERAL:
            return self.atom + integrate.quad(self.density, 0.0, 1.0, limit=500)[0]
        return self.atom

    def rate(self, n: int, j: int) -> float:
        return merge_rate(self, n, j)


def _check_nj(n: int, j: int) -> None:
    if not 2 <= j <= n:
        raise ValueError(f"need 2 <= j <= n, got n={n}, j={j}")


@lru_cache(maxsize=4096)
def merge_rate(lam: LambdaMeasure, n: int, j: int) -> float:
    """Rate at which one given set of j out of n blocks merges."""
    _check_nj(n, j)
    atom = lam.atom if j == 2 else 0.0
    if lam.kind == BETA:
        return atom + lam.scale * math.exp(special.betaln(j - lam.alpha, n - j + lam.alpha))
    if lam.kind == UNIFORM:
        # B(j-1, n-j+1) = (j-2)! (n-j)! / (n-1)!
        return atom + lam.scale * math.factorial(j - 2) * math.factorial(n - j) / math.factorial(n - 1)
    if lam.kind == GENERAL:
        return atom + _quad_density(lam, n, j, _GENERAL_CUTOFF)
    return atom


def quadrature_rate(lam: LambdaMeasure, n: int, j: int) -> float:
    """merge_rate by adaptive quadrature of the density part (an independent route)."""
    _check_nj(n, j)
    atom = lam.atom if j == 2 else 0.0
    if lam.kind == NONE:
        return atom
    return atom + _quad_density(lam, n, j, 0.0)


def _quad_density(lam: LambdaMeasure, n: int, j: int, lo: float) -> float:
    def f(u):
        return u ** (j - 2) * (1.0 - u) ** (n - j) * float(lam.density_at(u))

    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=500)
    return integrate.quad(f, lo, 0.5, **opts)[0] + integrate.quad(f, 0.5, 1.0, **opts)[0]


def jump_chain(lam: LambdaMeasure, n: int) -> np.ndarray:
    """P(next merger involves j blocks), j = 2..n, from n blocks."""
    if n < 2:
        raise ValueError("need at least two blocks")
    w = np.array([math.comb(n, j) * merge_rate(lam, n, j) for j in range(2, n + 1)])
    return w / w.sum()


def total_rate(lam: LambdaMeasure, n: int) -> float:
    return float(sum(math.comb(n, j) * merge_rate(lam, n, j) for j in range(2, n + 1)))


def simulate_coalescent(lam: LambdaMeasure, initial: Partition | int, horizon: float,
                        rng: np.random.Generator) -> PartitionPath:
    """Exact simulation on [0, horizon] by competing exponential clocks."""
    part = Partition.singletons(initial) if isinstance(initial, int) else initial
    start = part
    t = 0.0
    jumps = []
    while len(part) >= 2:
        n = len(part)
        rate = total_rate(lam, n)
        if rate <= 0:
            break
        t += rng.exponential(1.0 / rate)
        if t > horizon:
            break
        j = 2 + int(rng.choice(n - 1, p=jump_chain(lam, n)))
        idx = tuple(sorted(int(i) for i in rng.choice(n, size=j, replace=False)))
        jumps.append((t, idx))
        part = part.merge(idx)
    return PartitionPath(start, jumps, horizon)
