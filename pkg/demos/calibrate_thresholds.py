"""Calibrating the critical value for comparing population sizes.

N(t) is integer valued, so the two-sample Kolmogorov-Smirnov distance
between the population simulator and the lookdown has no exact
distribution-free p-value. Instead we fix the critical value once: simulate
pilot samples from both simulators, pool them, and read off the 1 - 1e-3
quantile of the KS distance under random relabelling.

The pilot seeds below are used nowhere else. The printed value is the one
frozen as ``coalhaus.config.KS_POPULATION_LOOKDOWN``.
"""

from __future__ import annotations

import numpy as np

from coalhaus import stats
from coalhaus.experiments import kingman_config, lookdown_sample, population_sample

PILOT_SEED = 9_001
REPS = 2000
PERMUTATIONS = 20_000

cfg = kingman_config(50)
pop = population_sample(cfg, REPS, 1.0, 2, PILOT_SEED)
ld = lookdown_sample(cfg, REPS, 1.0, 2, 4, PILOT_SEED + 1)
print(f"pilot mean N(1): population {pop.sizes.mean():.2f}, lookdown {ld.sizes.mean():.2f}")
print(f"pilot KS distance: {stats.two_sample_ks(pop.sizes, ld.sizes):.4f}")

rng = np.random.default_rng(PILOT_SEED + 2)
crit = stats.permutation_ks_threshold(pop.sizes, ld.sizes, 1e-3, PERMUTATIONS, rng)
asym = 1.9495 * np.sqrt(2.0 / REPS)  # continuous-data asymptotic value at 1e-3
print(f"permutation critical value at 1e-3: {crit:.4f} (asymptotic continuous value {asym:.4f})")
