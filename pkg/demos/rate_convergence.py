"""How fast do prelimit merger rates approach their limits?

For each regime we tabulate sup over n >= c_0/2 and j of |R_j(K,n) - R_j(n)|
for K = 10^2 .. 10^5. The finite-variance and stable regimes converge at
visibly different speeds. The Neveu regime is special: with survival
function 1/l the level-selection sum telescopes, and the prelimit rate
equals its limit for every K, so the table shows rounding noise only.
"""

from __future__ import annotations

from coalhaus.experiments import kingman_config, neveu_config, stable_config
from coalhaus.rates import RateQuery, convergence_report, rate_limit, rate_prelimit

K_VALUES = [1e2, 1e3, 1e4, 1e5]

for name, cfg in [("finite variance", kingman_config()), ("stable 1.5", stable_config()),
                  ("neveu", neveu_config())]:
    rep = convergence_report(cfg, 4, K_VALUES)
    gaps = "  ".join(f"{g:9.3e}" for g in rep.sup_gap)
    print(f"{name:16s} {gaps}   strictly decreasing: {rep.strictly_decreasing()}")

# %% A single rate, close up: j = 2 in the finite-variance regime at n = n_* = 3
cfg = kingman_config()
print("\nlimit b(m + m2)/n =", rate_limit(RateQuery.from_config(cfg, 4, 2, 3.0)))
for K in K_VALUES:
    print(f"  K={K:8.0f}  R_2(K, 3) = {rate_prelimit(RateQuery.from_config(cfg, 4, 2, 3.0, K=K)):.6f}")

# %% Neveu: prelimit minus limit at a few sizes, already at K = 10
cfg = neveu_config()
for n in (0.5, 1.0, 4.0):
    q = RateQuery.from_config(cfg, 4, 3, n, K=10)
    print(f"n={n}: R_3(10, n) - R_3 = {rate_prelimit(q) - rate_limit(q):+.2e}")
