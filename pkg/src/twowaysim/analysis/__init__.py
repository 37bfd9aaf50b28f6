"""Verification machinery: events, matchings, transition times and attacks."""

from .attacks import (AttackPlan, AttackReplay, CapExceeded, lemma1_attack, replay_plan,
                      theorem3_rewrite)
from .events import (DerivedExecution, EventRef, EventSeq, Matching, MatchReport,
                     construct_matching, derive_execution, extract_events, verify_matching)
from .checks import (KnOStats, NamingStats, SimulationReport, check_simulation, kno_bounds,
                     naming_checks, pairing_instance_for, pending_locks)
from .timing import FTTResult, fastest_transition_time, transition_time

__all__ = [
    "AttackPlan", "AttackReplay", "CapExceeded", "lemma1_attack", "replay_plan",
    "theorem3_rewrite", "DerivedExecution", "EventRef", "EventSeq", "Matching", "MatchReport",
    "construct_matching", "derive_execution", "extract_events", "verify_matching", "FTTResult",
    "fastest_transition_time", "transition_time", "KnOStats", "NamingStats",
    "SimulationReport", "check_simulation", "kno_bounds", "naming_checks",
    "pairing_instance_for", "pending_locks",
]
