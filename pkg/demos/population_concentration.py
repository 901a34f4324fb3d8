"""How tightly does the rescaled size stay near n_*?

In the finite-variance setup (b=2, d=1, c=1, geometric(1/2), n_* = 3) the
stationary spread of n^K is about sqrt(8/K) and the size relaxes at rate
about 3K in rescaled time. Over one unit of time the path therefore makes
of order K independent attempts to leave the band n_* +- 0.5, and for
K <= 200 it always succeeds: the exit probability only starts to fall
once sqrt(8/K) is well below 0.5 / 3, i.e. K in the thousands. What does
grow with K is the typical exit time, shown below.
"""

from __future__ import annotations

import numpy as np

from coalhaus.experiments import exit_times, kingman_config, occupation_fraction, stable_config
from coalhaus.population import simulate_population

for K in (50, 100, 200):
    cfg = kingman_config(K)
    tr = simulate_population(cfg, None, 2.0, np.random.default_rng(K), record_types=False,
                             grid=np.linspace(0.5, 2.0, 301))
    tau = exit_times(cfg, 100, 1.0, 0.5, master=K)
    print(f"K={K:4d}  sd(n) {tr.n.std():.3f} (sqrt(8/K) = {np.sqrt(8 / K):.3f})  "
          f"P(tau <= 1) {np.mean(~np.isnan(tau)):.2f}  median tau {np.nanmedian(tau):.4f}")

# %% In the stable regime the occupation measure visibly concentrates
for K in (100, 1000):
    share = occupation_fraction(stable_config(K), 100, 3.0, 0.25, master=K)
    print(f"stable K={K:5d}: share of time within n_* +- 0.25 = {share:.3f}")
