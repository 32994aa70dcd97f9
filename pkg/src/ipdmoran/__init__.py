"""Evolutionary dynamics of the iterated prisoner's dilemma.

Moran process simulation over strategy rosters, exact fixation probabilities
for the two-type birth-death chain, finite state machine training, and
invasion/resistance rankings across population sizes.
"""

from .game import Action, PayoffMatrix, DEFAULT_MATRIX, score_round, validate_matrix
from .strategies import (
    FsmSpec,
    History,
    LookupSpec,
    MemoryOneSpec,
    StrategySpec,
    builtin_roster,
    fsm_step,
    next_action,
)
from .strategy_io import parse_roster, parse_strategy, serialize_roster, serialize_strategy
from .match import MatchConfig, MatchResult, PayoffCache, build_cache, cooperation_rate, play_match
from .moran import (
    FixationEstimate,
    PairGame,
    PopulationState,
    estimate_fixation,
    exact_fixation,
    expected_payoffs,
    moran_step,
    run_to_fixation,
    fixation_vector,
    transition_probs,
)
from .trainer import MeanPayoff, MoranFixation, TrainerConfig, evaluate, evolve, handshake_report
from .analysis import (
    RankTable,
    SweepResult,
    correlation_matrix,
    rank,
    rank_all,
    rank_correlation,
    sweep,
    validation_report,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "PayoffMatrix",
    "DEFAULT_MATRIX",
    "score_round",
    "validate_matrix",
    "FsmSpec",
    "History",
    "LookupSpec",
    "MemoryOneSpec",
    "StrategySpec",
    "builtin_roster",
    "fsm_step",
    "next_action",
    "parse_roster",
    "parse_strategy",
    "serialize_roster",
    "serialize_strategy",
    "MatchConfig",
    "MatchResult",
    "PayoffCache",
    "build_cache",
    "cooperation_rate",
    "play_match",
    "FixationEstimate",
    "PairGame",
    "PopulationState",
    "estimate_fixation",
    "exact_fixation",
    "expected_payoffs",
    "moran_step",
    "run_to_fixation",
    "fixation_vector",
    "transition_probs",
    "MeanPayoff",
    "MoranFixation",
    "TrainerConfig",
    "evaluate",
    "evolve",
    "handshake_report",
    "RankTable",
    "SweepResult",
    "correlation_matrix",
    "rank",
    "rank_all",
    "rank_correlation",
    "sweep",
    "validation_report",
]
