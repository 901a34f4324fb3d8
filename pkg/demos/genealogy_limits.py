"""Prelimit genealogies against their limiting coalescents.

Three samples of three individuals; the first merger is either a pair or a
triple. The limit predicts the triple share from the jump chain of the
Lambda-coalescent: 1/4 for Bolthausen-Sznitman and 0.1 for the
Beta(1/2, 3/2)-coalescent. The Kingman regime never shows a triple.
Replicate counts here are small; the acceptance suite uses 3000.
"""

from __future__ import annotations

import numpy as np

from coalhaus.experiments import (first_merger_fraction, genealogy_sample, kingman_config,
                                  limit_triple_fraction, neveu_config, stable_config)
from coalhaus.genealogy import pair_coalescence_times
from coalhaus.rates import effective_size, limit_measure

REPS = 400

for label, cfg, horizon in [("beta", stable_config(1000), 3.0), ("neveu", neveu_config(1000), 5.0)]:
    frac = first_merger_fraction(genealogy_sample(cfg, 3, REPS, horizon, master=11))
    target = limit_triple_fraction(limit_measure(cfg))
    print(f"{label:6s} triple share {frac.fraction:.3f} (limit {target:.3f}, "
          f"{frac.mergers} mergers, {frac.degenerate} degenerate)")

# %% Kingman: pair coalescence times against Exponential with mean N_e
cfg = kingman_config(100)
paths = [p for p in genealogy_sample(cfg, 2, REPS, 1.5, master=12) if p is not None]
times, censored = pair_coalescence_times(paths)
print(f"\nN_e = {effective_size(cfg):.4f}; mean pair time {times.mean():.4f}; censored {censored.sum()}")
print("quartiles", np.round(np.quantile(times, [0.25, 0.5, 0.75]), 4),
      "vs", np.round(-effective_size(cfg) * np.log([0.75, 0.5, 0.25]), 4))
