"""Offline throughput-optimal power schedules for an energy-harvesting
source and half-duplex relay."""
from .core import (SHANNON, EnergyProfile, Instance, Policy, RateFunctionSpec, Segment,
                   canonicalize, check_feasibility, check_optimality_properties,
                   evaluate_policy, make_instance, normalize)
from .estimator import SlottedBaseline, TwoHopScheduler, check_instance
from .exceptions import TwoHopError
from .oracle import GridConfig, SlotDpConfig, grid_oracle, slot_dp_oracle
from .single_link import single_link_schedule
from .solver import RegionLabel, RegionSolution, solve

__all__ = [
    "SHANNON", "EnergyProfile", "Instance", "Policy", "RateFunctionSpec", "Segment",
    "canonicalize", "check_feasibility", "check_optimality_properties", "evaluate_policy",
    "make_instance", "normalize", "SlottedBaseline", "TwoHopScheduler", "check_instance",
    "TwoHopError", "GridConfig", "SlotDpConfig", "grid_oracle", "slot_dp_oracle",
    "single_link_schedule", "RegionLabel", "RegionSolution", "solve",
]
__version__ = "0.1.0"
