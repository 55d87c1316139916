"""Exact cake cutting among families: valuations, fairness checks, division procedures and lower bounds."""

from .core import (Agent, Allocation, ExactRational, Family, Instance, Interval, Piece, StepMeasure,
                   component_count, evaluate, family_average_measure, mark, validate_partition)
from .exact import ExactDivisionProblem, solve_consensus_split, solve_exact, verify_exact
from .fairness import (Criterion, FairnessReport, check, check_average_ef, check_democratic_ef,
                       check_individually_proportional, check_proportional, check_unanimous_ef,
                       positive_agent_tally)
from .protocols import (ProtocolResult, average_ef_connected, democratic_general, democratic_two_families,
                        unanimous_ef_divide, unef_to_exact_harness)

__version__ = "0.1.0"

__all__ = [
    "Agent", "Allocation", "ExactRational", "Family", "Instance", "Interval", "Piece", "StepMeasure",
    "component_count", "evaluate", "family_average_measure", "mark", "validate_partition",
    "ExactDivisionProblem", "solve_consensus_split", "solve_exact", "verify_exact",
    "Criterion", "FairnessReport", "check", "check_average_ef", "check_democratic_ef",
    "check_individually_proportional", "check_proportional", "check_unanimous_ef", "positive_agent_tally",
    "ProtocolResult", "average_ef_connected", "democratic_general", "democratic_two_families",
    "unanimous_ef_divide", "unef_to_exact_harness",
]
