"""From a lookdown run to a genealogy.

The lookdown keeps the population as a vector ordered by level. A birth of
size l picks l + 1 levels J, the lowest one is the parent and copies of its
type are inserted at the others; a death removes the top level. Reading the
birth sets backwards gives the ancestral partition of the lowest k levels.
"""

from __future__ import annotations

import numpy as np

from coalhaus.coalescent import LambdaMeasure
from coalhaus.experiments import kingman_config
from coalhaus.genealogy import genealogy, trace_ancestry_oracle
from coalhaus.limit_lookdown import simulate_limit_lookdown
from coalhaus.lookdown import LookdownState, simulate_lookdown, step_birth, step_death

# %% The two moves by hand
state = LookdownState(list("abc"))
print("start            ", state.levels)
state = step_birth(state, 2, {2, 3, 5})
print("birth l=2 J={2,3,5}", state.levels)
state = step_death(state)
print("death             ", state.levels, "| retired coordinate 5 keeps", state.coordinate(5))

# %% A small prelimit run in oracle mode keeps every level set
cfg = kingman_config(K=8)
rng = np.random.default_rng(2)
log, snaps = simulate_lookdown(cfg, k=3, horizon=0.3, rng=rng, mode="oracle")
print(f"\n{len(log)} events, N went {log.initial_size} -> {log.final_size}")
for t, kind, ell, lv in list(log.entries())[:5]:
    print(f"  t={t:7.4f}  {'birth' if kind else 'death'}  levels={lv}")

# %% psi on the restricted log agrees with brute-force ancestor tracing
fast = genealogy(log.restrict(3))
slow = trace_ancestry_oracle(log)
print("\npsi path   :", [(round(t, 4), str(p)) for t, p in zip(fast.times, fast.states[1:])])
print("oracle path:", [(round(t, 4), str(p)) for t, p in zip(slow.times, slow.states[1:])])
print("identical  :", fast == slow)

# %% The limiting lookdown on four levels under the uniform measure
log, path = simulate_limit_lookdown(LambdaMeasure.uniform(1.0), 4, list("wxyz"), 1.0,
                                    np.random.default_rng(5))
for t, J, types in zip(log.times, log.sets, path[1:]):
    print(f"t={t:.3f}  J={J}  types={''.join(types)}")
