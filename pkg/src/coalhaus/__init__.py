"""Simulation and verification tools for logistic branching processes and their genealogies."""

from __future__ import annotations

from coalhaus.coalescent import LambdaMeasure, Partition, PartitionPath, merge_rate, simulate_coalescent
from coalhaus.genealogy import CountingPath, genealogy, psi, trace_ancestry_oracle
from coalhaus.limit_lookdown import simulate_limit_lookdown
from coalhaus.lookdown import LookdownEventLog, LookdownState, simulate_lookdown
from coalhaus.offspring import OffspringLaw
from coalhaus.population import PopulationState, RegimeConfig, simulate_population
from coalhaus.rates import RateQuery, rate_limit, rate_prelimit
from coalhaus.rng import replicate_rng

__version__ = "0.1.0"

__all__ = [
    "CountingPath", "LambdaMeasure", "LookdownEventLog", "LookdownState", "OffspringLaw",
    "Partition", "PartitionPath", "PopulationState", "RateQuery", "RegimeConfig",
    "genealogy", "merge_rate", "psi", "rate_limit", "rate_prelimit", "replicate_rng",
    "simulate_coalescent", "simulate_limit_lookdown", "simulate_lookdown",
    "simulate_population", "trace_ancestry_oracle",
]
