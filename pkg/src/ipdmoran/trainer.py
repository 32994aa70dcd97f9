"""Evolving finite state machine strategies.

Candidates are scored either by their mean fixation probability from a
half-and-half Moran start against each opponent of a fixed roster, or by
their mean match payoff against the roster. All randomness used to score a
candidate is derived from the master seed and the opponent alone, so every
candidate faces the same draws and a genotype's fitness is a pure function
of the genotype. Elites therefore keep their fitness across generations and
the best fitness per generation never decreases.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .game import DEFAULT_MATRIX, Action, C, D, PayoffMatrix
from .match import MatchConfig, PayoffCache, build_cache, play_match
from .moran import estimate_fixation
from .seeding import derive_seed
from .strategies import FsmSpec, StrategySpec

log = logging.getLogger(__name__)

CANDIDATE = "Candidate"


@dataclass(frozen=True)
class MoranFixation:
    """Mean fixation from ``N // 2`` candidates against ``N - N // 2`` opponents."""

    N: int = 10
    noise: float = 0.0
    reps: int = 20
    turns: int = 200
    samples: int = 1000

    @property
    def start(self) -> int:
        return self.N // 2


@dataclass(frozen=True)
class MeanPayoff:
    turns: int = 200
    noise: float = 0.0
    samples: int = 10


Objective = Union[MoranFixation, MeanPayoff]


@dataclass
class TrainerConfig:
    opponents: Sequence[StrategySpec]
    num_states: int = 8
    population_size: int = 20
    generations: int = 50
    mutation_rate: float = 0.1
    crossover: bool = True
    elitism: int = 2
    objective: Objective = field(default_factory=MoranFixation)
    matrix: PayoffMatrix = DEFAULT_MATRIX
    seed: int = 0
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if not 0 <= self.elitism < self.population_size:
            raise ValueError("elitism must be in [0, population_size)")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if not self.opponents:
            raise ValueError("opponent roster is empty")


# --------------------------------------------------------------------------
# variation


def random_genotype(num_states: int, rng: np.random.Generator) -> FsmSpec:
    rows = tuple(
        tuple((int(rng.integers(num_states)), Action(int(rng.integers(2)))) for _ in (D, C))
        for _ in range(num_states)
    )
    return FsmSpec(num_states, int(rng.integers(num_states)), Action(int(rng.integers(2))), rows)


def mutate(g: FsmSpec, rate: float, rng: np.random.Generator) -> FsmSpec:
    """Redraw each table entry, the initial state and the initial action
    independently with probability ``rate``.

    A redrawn entry is uniform over all ``(next_state, action)`` pairs and
    may coincide with the old one.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must lie in [0, 1]")
    n = g.num_states
    rows = []
    for row in g.transitions:
        new = []
        for entry in row:
            if rng.random() < rate:
                entry = (int(rng.integers(n)), Action(int(rng.integers(2))))
            new.append(entry)
        rows.append(tuple(new))
    state = int(rng.integers(n)) if rng.random() < rate else g.initial_state
    action = Action(int(rng.integers(2))) if rng.random() < rate else g.initial_action
    return FsmSpec(n, state, action, tuple(rows))


def crossover(g1: FsmSpec, g2: FsmSpec, rng: np.random.Generator) -> FsmSpec:
    """Rows before a random cut from ``g1``, the rest from ``g2``; the initial
    state and action come together from one parent picked at random."""
    if g1.num_states != g2.num_states:
        raise ValueError(f"shape mismatch: {g1.num_states} vs {g2.num_states} states")
    n = g1.num_states
    cut = int(rng.integers(1, n)) if n > 1 else 1
    rows = g1.transitions[:cut] + g2.transitions[cut:]
    start = g1 if rng.random() < 0.5 else g2
    return FsmSpec(n, start.initial_state, start.initial_action, rows)


# --------------------------------------------------------------------------
# evaluation


def _as_spec(candidate: FsmSpec | StrategySpec) -> StrategySpec:
    if isinstance(candidate, StrategySpec):
        return candidate.relabel(CANDIDATE)
    return StrategySpec(CANDIDATE, candidate)


class Evaluator:
    """Scores candidates against a fixed roster, memoizing by genotype.

    The opponents' self-pair samples are built once and shared by every
    candidate.
    """

    def __init__(
        self,
        objective: Objective,
        roster: Sequence[StrategySpec],
        seed: int = 0,
        matrix: PayoffMatrix = DEFAULT_MATRIX,
    ) -> None:
        if not roster:
            raise ValueError("opponent roster is empty")
        if any(s.name == CANDIDATE for s in roster):
            raise ValueError(f"opponent name {CANDIDATE!r} is reserved")
        self.objective = objective
        self.roster = list(roster)
        self.seed = seed
        self.cfg = MatchConfig(objective.turns, objective.noise, matrix, derive_seed(seed, "matches"))
        self.memo: dict = {}
        self._base: PayoffCache | None = None

    def _base_cache(self) -> PayoffCache:
        if self._base is None:
            self._base = build_cache(
                self.roster, self.objective.samples, self.cfg, pairs=[(s, s) for s in self.roster]
            )
        return self._base

    def __call__(self, candidate: FsmSpec | StrategySpec) -> float:
        key = candidate.rule if isinstance(candidate, StrategySpec) else candidate
        if key not in self.memo:
            self.memo[key] = self._score(_as_spec(candidate))
        return self.memo[key]

    def _score(self, cand: StrategySpec) -> float:
        obj = self.objective
        if isinstance(obj, MeanPayoff):
            total = 0.0
            for opp in self.roster:
                reps = 1 if not (cand.stochastic or opp.stochastic or obj.noise) else obj.samples
                total += sum(
                    play_match(cand, opp, self.cfg, seed=derive_seed(self.seed, "payoff", opp.name, r)).means[0]
                    for r in range(reps)
                ) / reps
            return total / len(self.roster)
        base = self._base_cache()
        cache = PayoffCache(base.config, list(base.names), dict(base.samples), base.roster_hash)
        pairs = [(cand, cand)] + [(cand, opp) for opp in self.roster]
        build_cache([cand, *self.roster], obj.samples, self.cfg, pairs=pairs, cache=cache)
        probs = [
            estimate_fixation(
                cand, opp, obj.start, obj.N, obj.reps, cache, derive_seed(self.seed, "moran", opp.name)
            ).probability
            for opp in self.roster
        ]
        return float(np.mean(probs))


def evaluate(
    candidate: FsmSpec | StrategySpec,
    objective: Objective,
    roster: Sequence[StrategySpec],
    seed: int = 0,
    matrix: PayoffMatrix = DEFAULT_MATRIX,
) -> float:
    """Fitness of one candidate: mean fixation probability or mean match payoff."""
    return Evaluator(objective, roster, seed, matrix)(candidate)


def _score_job(args):
    evaluator, genotype = args
    return evaluator._score(_as_spec(genotype))


# --------------------------------------------------------------------------
# generational loop


@dataclass
class TrainingResult:
    best: FsmSpec
    best_fitness: float
    history: list[tuple[int, float, float]]
    population: list[FsmSpec]
    fitness: list[float]


def _evaluate_all(evaluator: Evaluator, genotypes: list[FsmSpec], jobs: int) -> list[float]:
    todo = list(dict.fromkeys(g for g in genotypes if g not in evaluator.memo))
    if jobs > 1 and len(todo) > 1:
        evaluator._base_cache()
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for g, score in zip(todo, pool.map(_score_job, [(evaluator, g) for g in todo])):
                evaluator.memo[g] = score
    return [evaluator(g) for g in genotypes]


def evolve(cfg: TrainerConfig) -> TrainingResult:
    """Evolve FSM genotypes under ``cfg.objective``.

    Each generation keeps the ``elitism`` best genotypes unchanged and fills
    the rest of the population with mutated crossovers of parents drawn
    uniformly from the better half.
    """
    rng = np.random.default_rng(derive_seed(cfg.seed, "evolve"))
    evaluator = Evaluator(cfg.objective, cfg.opponents, cfg.seed, cfg.matrix)
    pop = [random_genotype(cfg.num_states, rng) for _ in range(cfg.population_size)]
    fit = _evaluate_all(evaluator, pop, cfg.jobs)
    history = [(0, max(fit), float(np.mean(fit)))]
    log.info("generation 0: best %.4f mean %.4f", history[-1][1], history[-1][2])
    n_parents = max(2, cfg.population_size // 2)
    for gen in range(1, cfg.generations + 1):
        order = sorted(range(len(pop)), key=lambda k: (-fit[k], k))
        elites = [pop[k] for k in order[: cfg.elitism]]
        parents = [pop[k] for k in order[:n_parents]]
        children = []
        while len(elites) + len(children) < cfg.population_size:
            p1 = parents[int(rng.integers(len(parents)))]
            if cfg.crossover:
                p2 = parents[int(rng.integers(len(parents)))]
                p1 = crossover(p1, p2, rng)
            children.append(mutate(p1, cfg.mutation_rate, rng))
        pop = elites + children
        fit = _evaluate_all(evaluator, pop, cfg.jobs)
        history.append((gen, max(fit), float(np.mean(fit))))
        log.info("generation %d: best %.4f mean %.4f", gen, history[-1][1], history[-1][2])
    k = min(range(len(pop)), key=lambda k: (-fit[k], k))
    return TrainingResult(pop[k], fit[k], history, pop, fit)


def write_history(path: str | Path, history: Sequence[tuple[int, float, float]]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["generation", "best", "mean"])
        for gen, best, mean in history:
            w.writerow([gen, repr(float(best)), repr(float(mean))])


# --------------------------------------------------------------------------
# handshake detection


@dataclass(frozen=True)
class HandshakeReport:
    opening_vs_self: str
    defects_early: bool
    mutual_cooperation_vs_self: bool
    cooperates_with_cooperator: bool
    cooperates_with_defector: bool

    @property
    def has_handshake(self) -> bool:
        return self.defects_early and self.mutual_cooperation_vs_self

    def summary(self) -> str:
        return (
            f"opening vs self: {self.opening_vs_self}; "
            f"defects within first 3 moves vs self: {self.defects_early}; "
            f"reaches mutual cooperation vs self: {self.mutual_cooperation_vs_self}; "
            f"handshake: {self.has_handshake}"
        )


def handshake_report(
    spec: StrategySpec | FsmSpec, turns: int = 200, tail: int = 10, matrix: PayoffMatrix = DEFAULT_MATRIX, seed: int = 0
) -> HandshakeReport:
    """Does ``spec`` defect early against a copy of itself and still settle
    into mutual cooperation? ``tail`` is the number of closing rounds that
    must all be mutual cooperation."""
    from .strategies import Scripted

    spec = _as_spec(spec)
    cfg = MatchConfig(turns, 0.0, matrix, seed)
    self_play = play_match(spec, spec.relabel("Copy"), cfg).actions
    mine = [x for x, _ in self_play]
    closing = self_play[-min(tail, turns):]

    def closing_coop(opponent: str) -> bool:
        res = play_match(spec, StrategySpec(opponent, Scripted(opponent)), cfg).actions
        return all(x == C for x, _ in res[-min(tail, turns):])

    return HandshakeReport(
        opening_vs_self="".join(a.name for a in mine[:5]),
        defects_early=D in mine[:3],
        mutual_cooperation_vs_self=all(x == C and y == C for x, y in closing),
        cooperates_with_cooperator=closing_coop("Cooperator"),
        cooperates_with_defector=closing_coop("Defector"),
    )
