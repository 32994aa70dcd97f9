import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from ipdmoran.match import MatchConfig, PayoffCache, build_cache
from ipdmoran.moran import (
    DegenerateFitnessError,
    PairGame,
    PopulationState,
    StepCapExceeded,
    estimate_fixation,
    exact_fixation,
    expected_payoffs,
    fixation_vector,
    individual_fitness,
    moran_step,
    run_to_fixation,
    start_index,
    transition_probs,
)

from conftest import scripted


def brute_force_fixation(N, g):
    """Absorption probabilities of the full (N+1)-state chain by a dense solve."""
    P = np.zeros((N + 1, N + 1))
    P[0, 0] = P[N, N] = 1.0
    for i in range(1, N):
        fa = (g.a * (i - 1) + g.b * (N - i)) / (N - 1)
        fb = (g.c * i + g.d * (N - i - 1)) / (N - 1)
        birth_a = i * fa / (i * fa + (N - i) * fb)
        up = birth_a * (N - i) / N
        down = (1 - birth_a) * i / N
        P[i, i + 1], P[i, i - 1], P[i, i] = up, down, 1 - up - down
    A = np.eye(N + 1) - P
    A[0] = 0
    A[0, 0] = 1
    A[N] = 0
    A[N, N] = 1
    rhs = np.zeros(N + 1)
    rhs[N] = 1
    return np.linalg.solve(A, rhs)


def constant_cache(table):
    cache = PayoffCache(MatchConfig())
    for (a, b), v in table.items():
        cache.add(a, b, np.array([v], float))
    return cache


DC = constant_cache({("D", "D"): (1, 1), ("D", "C"): (5, 0), ("C", "C"): (3, 3)})


def test_expected_payoffs_example():
    assert expected_payoffs(1, 3, PairGame(1, 5, 0, 3)) == (5.0, 1.5)


def test_transition_probs_example():
    up, down, stay = transition_probs(1, 3, PairGame(1, 5, 0, 3))
    assert up == pytest.approx(5 / 8 * 2 / 3)
    assert down == pytest.approx(3 / 8 * 1 / 3)
    assert up + down + stay == pytest.approx(1.0)


def test_degenerate_fitness():
    with pytest.raises(DegenerateFitnessError):
        transition_probs(1, 3, PairGame(0, 0, 0, 0))


def test_exact_examples():
    g = PairGame(1, 5, 0, 3)
    assert exact_fixation(1, 3, g) == pytest.approx(1 / 1.3)
    assert exact_fixation(1, 2, g) == 1.0
    assert exact_fixation(2, 5, PairGame(2, 2, 2, 2)) == pytest.approx(0.4)
    assert exact_fixation(0, 5, g) == 0.0 and exact_fixation(5, 5, g) == 1.0


def test_payoff_validation():
    with pytest.raises(ValueError):
        PairGame(1, -1, 0, 0)
    with pytest.raises(ValueError):
        PairGame(1, math.nan, 0, 0)
    with pytest.raises(ValueError):
        exact_fixation(1, 1, PairGame(1, 1, 1, 1))


def test_zero_up_probability_uses_absorbing_solve():
    # b = 0 and a = 0: a lone first-type individual has zero fitness
    g = PairGame(0, 0, 1, 1)
    x = fixation_vector(5, g)
    assert x[1] == 0.0
    np.testing.assert_allclose(x, brute_force_fixation(5, PairGame(1e-300, 1e-300, 1, 1)), atol=1e-12)


def test_large_population_is_finite():
    x = fixation_vector(500, PairGame(1, 5, 0, 3))
    assert np.all(np.isfinite(x)) and np.all(np.diff(x) >= 0)


games = st.builds(PairGame, *[st.floats(0.01, 10) for _ in range(4)])


@settings(max_examples=300)
@given(games, st.integers(2, 30))
def test_matches_brute_force_chain(g, N):
    np.testing.assert_allclose(fixation_vector(N, g), brute_force_fixation(N, g), atol=1e-9)


@settings(max_examples=200)
@given(games, st.integers(2, 30), st.floats(0.01, 100))
def test_scale_invariance_and_monotonicity(g, N, k):
    x = fixation_vector(N, g)
    assert x[0] == 0 and x[N] == 1
    assert np.all(np.diff(x) >= -1e-12)
    np.testing.assert_allclose(fixation_vector(N, g.scaled(k)), x, atol=1e-12)


@settings(max_examples=200)
@given(games, st.integers(2, 30), st.data())
def test_complementarity(g, N, data):
    i = data.draw(st.integers(1, N - 1))
    assert exact_fixation(i, N, g) + exact_fixation(N - i, N, g.swapped()) == pytest.approx(1.0, abs=1e-9)


@given(st.floats(0.01, 10), st.integers(2, 40), st.data())
def test_neutral(v, N, data):
    i = data.draw(st.integers(0, N))
    assert exact_fixation(i, N, PairGame(v, v, v, v)) == pytest.approx(i / N, abs=1e-12)


def test_start_index():
    assert [start_index(k, 7) for k in ("invade", "coexist", "resist")] == [1, 3, 6]
    with pytest.raises(ValueError):
        start_index("sideways", 7)


def test_individual_fitness_example(rng):
    pop = PopulationState(("D", "C", "C"))
    assert list(individual_fitness(pop, DC, rng)) == [10, 3, 3]


def test_moran_step_birth_probability(rng):
    # Defector reproduces with probability 10/16 and replaces a Cooperator with 2/3
    pop = PopulationState(("D", "C", "C"))
    n = 20000
    two_d = sum(moran_step(pop, DC, rng).counts()["D"] == 2 for _ in range(n))
    assert abs(two_d / n - 10 / 16 * 2 / 3) < 4 * math.sqrt(0.25 / n)


def test_n2_birth_probabilities(rng):
    cache = build_cache([scripted("TitForTat"), scripted("Defector")], 1, MatchConfig())
    fit = individual_fitness(PopulationState(("TitForTat", "Defector")), cache, rng)
    assert list(fit) == [0.995, 1.02]


def test_homogeneous_start_needs_no_steps(rng):
    assert tuple(run_to_fixation(PopulationState(("C",) * 4), DC, rng)) == ("C", 0)


def test_step_cap():
    cache = constant_cache({("A", "A"): (1, 1), ("A", "B"): (1, 1), ("B", "B"): (1, 1)})
    with pytest.raises(StepCapExceeded) as err:
        estimate_fixation("A", "B", 50, 100, 5, cache, max_steps=3)
    assert err.value.run == 0


def test_estimate_requires_distinct_names():
    with pytest.raises(ValueError, match="distinct"):
        estimate_fixation("D", "D", 1, 3, 10, DC)


@pytest.mark.parametrize("N, i", [(3, 1), (5, 2), (8, 1)])
def test_constant_cache_matches_exact(N, i):
    est = estimate_fixation("D", "C", i, N, 4000, DC, master_seed=1)
    exact = exact_fixation(i, N, PairGame(1, 5, 0, 3))
    assert abs(est.probability - exact) < 3.5 * math.sqrt(exact * (1 - exact) / 4000)


def test_estimate_reproducible_and_complement():
    a = estimate_fixation("D", "C", 1, 5, 300, DC, master_seed=3)
    assert a == estimate_fixation("D", "C", 1, 5, 300, DC, master_seed=3)
    comp = a.complement()
    assert comp.name_a == "C" and comp.i == 4 and comp.wins == 300 - a.wins


def test_count_route_matches_slot_route():
    # Counts-based runs and literal per-slot steps sample the same chain.
    cfg = MatchConfig(turns=20)
    r, t = scripted("Random", 0.5), scripted("TitForTat")
    cache = build_cache([r, t], samples=200, cfg=cfg)
    N, i, reps = 4, 2, 1500
    rng = np.random.default_rng(11)
    slot_wins = 0
    for _ in range(reps):
        pop = PopulationState.two_types("Random", "TitForTat", i, N)
        while not pop.is_homogeneous():
            pop = moran_step(pop, cache, rng)
        slot_wins += pop.slots[0] == "Random"
    est = estimate_fixation(r, t, i, N, reps, cache, master_seed=5)
    p = (slot_wins / reps + est.probability) / 2
    assert abs(slot_wins / reps - est.probability) < 3.5 * math.sqrt(2 * p * (1 - p) / reps)


def test_stochastic_n2_exact():
    # At N = 2 each step draws one sample (ma, mb); the first type is born with
    # probability ma / (ma + mb) and the chain absorbs unless the parent dies.
    cfg = MatchConfig(turns=20)
    cache = build_cache([scripted("Random", 0.5), scripted("Defector")], samples=300, cfg=cfg)
    s = cache[("Random", "Defector")]
    exact = float(np.mean(s[:, 0] / s.sum(axis=1)))
    est = estimate_fixation("Random", "Defector", 1, 2, 5000, cache, master_seed=2)
    assert abs(est.probability - exact) < 3.5 * math.sqrt(exact * (1 - exact) / 5000)


def test_frozen_mode_runs(rng):
    cache = build_cache([scripted("Random", 0.5), scripted("Defector")], samples=50, cfg=MatchConfig(turns=20))
    res = run_to_fixation(PopulationState.two_types("Random", "Defector", 2, 5), cache, rng, frozen=True)
    assert res.winner in {"Random", "Defector"}


def test_from_cache():
    cache = build_cache([scripted("TitForTat"), scripted("Defector")], 1, MatchConfig())
    g = PairGame.from_cache(cache, "TitForTat", "Defector")
    assert g == PairGame(3.0, 0.995, 1.02, 1.0)


def test_bimodal_payoffs_break_the_mean_payoff_chain():
    # A pair whose matches are either mutual defection or a sucker's payoff
    # for the first type: the mean-payoff chain misses the simulated value.
    cache = PayoffCache(MatchConfig())
    cache.add("A", "B", np.array([(1.0, 1.0), (0.0, 5.0)]))
    cache.add("A", "A", np.array([(3.0, 3.0)]))
    cache.add("B", "B", np.array([(1.0, 1.0)]))
    exact = exact_fixation(1, 2, PairGame.from_cache(cache, "A", "B"))
    est = estimate_fixation("A", "B", 1, 2, 5000, cache, master_seed=0)
    assert exact == pytest.approx(0.5 / 3.5)
    assert abs(est.probability - 0.25) < 3.5 * math.sqrt(0.25 * 0.75 / 5000)
    assert abs(est.probability - exact) > 2.576 * math.sqrt(exact * (1 - exact) / 5000)
