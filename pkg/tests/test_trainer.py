import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ipdmoran.game import C, D
from ipdmoran.match import MatchConfig, build_cache
from ipdmoran.moran import PairGame, exact_fixation
from ipdmoran.strategies import FsmSpec, StrategySpec
from ipdmoran.strategy_io import parse_strategy
from ipdmoran.trainer import (
    MeanPayoff,
    MoranFixation,
    TrainerConfig,
    crossover,
    evaluate,
    evolve,
    handshake_report,
    mutate,
    random_genotype,
    write_history,
)

from conftest import scripted

ALL_C = FsmSpec.from_table(1, 0, C, {(0, C): (0, C), (0, D): (0, C)})
ALL_D = FsmSpec.from_table(1, 0, D, {(0, C): (0, D), (0, D): (0, D)})


def entries(g):
    return [e for row in g.transitions for e in row]


def test_random_genotype_is_total(rng):
    g = random_genotype(8, rng)
    assert g.num_states == 8 and len(entries(g)) == 16
    assert all(0 <= s < 8 for s, _ in entries(g))


def test_mutate_rate_zero_is_identity(rng):
    g = random_genotype(6, rng)
    assert mutate(g, 0.0, rng) == g


def test_mutate_rate_one_redraws_all(rng):
    # every entry is redrawn uniformly, so across many draws each entry
    # changes about 1 - 1/(2n) of the time
    g = random_genotype(4, rng)
    changed = np.mean([sum(a != b for a, b in zip(entries(g), entries(mutate(g, 1.0, rng)))) for _ in range(2000)])
    assert changed == pytest.approx(8 * (1 - 1 / 8), abs=0.15)


@pytest.mark.parametrize("rate", [0.05, 0.3])
def test_mutation_count_expectation(rate, rng):
    n = 5
    g = random_genotype(n, rng)
    draws = [sum(a != b for a, b in zip(entries(g), entries(mutate(g, rate, rng)))) for _ in range(10000)]
    expected = rate * 2 * n * (1 - 1 / (2 * n))
    sd = math.sqrt(np.var(draws) / len(draws))
    assert abs(np.mean(draws) - expected) < 4 * sd + 1e-9


def test_mutate_rejects_bad_rate(rng):
    with pytest.raises(ValueError):
        mutate(ALL_C, 1.5, rng)


@settings(max_examples=100)
@given(st.integers(0, 2**32), st.integers(1, 8))
def test_crossover_properties(seed, n):
    rng = np.random.default_rng(seed)
    g1, g2 = random_genotype(n, rng), random_genotype(n, rng)
    assert crossover(g1, g1, rng) == g1
    child = crossover(g1, g2, rng)
    assert child.num_states == n
    assert all(row in (r1, r2) for row, r1, r2 in zip(child.transitions, g1.transitions, g2.transitions))
    if n > 1:
        assert child.transitions[0] == g1.transitions[0] and child.transitions[-1] == g2.transitions[-1]


def test_crossover_shape_mismatch(rng):
    with pytest.raises(ValueError, match="shape mismatch"):
        crossover(random_genotype(3, rng), random_genotype(4, rng), rng)


def test_self_play_roster_is_neutral():
    # a genotype against a roster of only itself is a neutral Moran process
    opp = StrategySpec("Self", ALL_C)
    f = evaluate(ALL_C, MoranFixation(N=6, reps=2000, samples=1), [opp])
    assert abs(f - 0.5) < 3.5 * math.sqrt(0.25 / 2000)


def test_all_cooperate_vs_defector_matches_exact():
    obj = MoranFixation(N=4, reps=3000)
    f = evaluate(ALL_C, obj, [scripted("Defector")])
    exact = exact_fixation(2, 4, PairGame(3, 0, 5, 1))
    assert abs(f - exact) < 3.5 * math.sqrt(max(exact * (1 - exact), 1e-3) / 3000)


def test_mean_payoff_objective():
    assert evaluate(ALL_D, MeanPayoff(), [scripted("Cooperator")]) == 5.0
    assert evaluate(ALL_C, MeanPayoff(), [scripted("Cooperator"), scripted("Defector")]) == 1.5


def test_evaluation_is_deterministic_given_seed():
    roster = [scripted("Random", 0.5), scripted("TitForTat")]
    obj = MoranFixation(N=4, reps=30, turns=20, samples=50)
    g = random_genotype(3, np.random.default_rng(1))
    assert evaluate(g, obj, roster, seed=4) == evaluate(g, obj, roster, seed=4)


def small_config(**kw):
    base = dict(
        opponents=[scripted("Defector"), scripted("TitForTat"), scripted("Cooperator")],
        num_states=3,
        population_size=8,
        generations=6,
        objective=MoranFixation(N=4, reps=10, turns=30),
        seed=3,
    )
    base.update(kw)
    return TrainerConfig(**base)


def test_generations_zero_returns_best_random_genotype():
    res = evolve(small_config(generations=0))
    assert len(res.history) == 1
    assert res.best_fitness == max(res.fitness)


def test_best_fitness_never_decreases_and_is_reproducible():
    a = evolve(small_config())
    best = [b for _, b, _ in a.history]
    assert all(y >= x for x, y in zip(best, best[1:]))
    b = evolve(small_config())
    assert a.history == b.history and a.best == b.best


def test_parallel_evaluation_matches_serial():
    assert evolve(small_config(jobs=2)).history == evolve(small_config()).history


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(elitism=8)
    with pytest.raises(ValueError):
        small_config(opponents=[])


def test_write_history(tmp_path):
    write_history(tmp_path / "h.csv", [(0, 0.5, 0.25)])
    assert (tmp_path / "h.csv").read_text() == "generation,best,mean\n0,0.5,0.25\n"


def test_handshake_report():
    tf1_like = parse_strategy(
        "fsm 5; start 0 C; 0 C -> 1 C; 0 D -> 4 D; 1 C -> 2 D; 1 D -> 4 D; 2 D -> 3 C; 2 C -> 4 D;"
        " 3 C -> 3 C; 3 D -> 4 D; 4 C -> 4 D; 4 D -> 4 D"
    ).rule
    rep = handshake_report(tf1_like)
    assert rep.has_handshake and rep.opening_vs_self.startswith("CCD")
    assert not rep.cooperates_with_cooperator and not rep.cooperates_with_defector
    assert not handshake_report(ALL_C).has_handshake
