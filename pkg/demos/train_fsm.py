"""
Evolving a finite state machine
===============================

A small genetic algorithm searches over 4-state machines for one that
takes over a population of size 6 starting from half the individuals.
Candidates face the same random draws, so the best fitness never drops.
"""

import logging

from ipdmoran import builtin_roster, evolve, handshake_report
from ipdmoran.strategies import StrategySpec, roster_by_name
from ipdmoran.strategy_io import serialize_strategy
from ipdmoran.trainer import MoranFixation, TrainerConfig

logging.basicConfig(level=logging.INFO, format="%(message)s")

by_name = roster_by_name(builtin_roster())
opponents = [by_name[n] for n in ("Cooperator", "Defector", "Tit For Tat", "Grudger", "Alternator")]

cfg = TrainerConfig(
    opponents,
    num_states=4,
    population_size=12,
    generations=10,
    objective=MoranFixation(N=6, reps=20),
    seed=2,
)
result = evolve(cfg)

print(serialize_strategy(StrategySpec("Champion", result.best), sep="\n"))
print(handshake_report(result.best).summary())
