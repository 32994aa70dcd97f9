"""Fixation in the pairwise Moran process.

Two routes are provided. The exact route treats the interaction of two types
as a 2x2 game ``(a, b, c, d)`` and solves the resulting birth-death chain in
closed form. The sampled route runs the Moran process itself, with every
interaction's payoff drawn from a :class:`~ipdmoran.match.PayoffCache`, and
estimates fixation from repeated runs.

For deterministic strategy pairs the cache holds a single constant sample
per pair and the two routes describe the same chain. For stochastic pairs
they need not agree.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.linalg import solve_banded

from .seeding import derive_seed

START_KINDS = ("invade", "coexist", "resist")


class DegenerateFitnessError(ValueError):
    """Total population fitness is zero, so selection is undefined."""


class StepCapExceeded(RuntimeError):
    def __init__(self, steps: int, run: int | None = None) -> None:
        where = "" if run is None else f" in run {run}"
        super().__init__(f"no fixation after {steps} steps{where}")
        self.steps = steps
        self.run = run


@dataclass(frozen=True)
class PairGame:
    """Payoffs of type 1 vs 1 (a), 1 vs 2 (b), 2 vs 1 (c) and 2 vs 2 (d)."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self) -> None:
        for name in "abcd":
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"payoff {name}={v} is not finite")
            if v < 0:
                raise ValueError(f"payoff {name}={v} is negative; proportionate selection needs v >= 0")

    def scaled(self, k: float) -> "PairGame":
        return PairGame(self.a * k, self.b * k, self.c * k, self.d * k)

    def swapped(self) -> "PairGame":
        return PairGame(self.d, self.c, self.b, self.a)

    @classmethod
    def from_cache(cls, cache, name_a: str, name_b: str) -> "PairGame":
        """Mean-payoff game of two strategies from their cached samples.

        Same-type entries average both sides of the self-pair samples.
        """
        aa = cache[(name_a, name_a)]
        ab = cache[(name_a, name_b)]
        bb = cache[(name_b, name_b)]
        return cls(
            float(aa.mean()),
            float(ab[:, 0].mean()),
            float(ab[:, 1].mean()),
            float(bb.mean()),
        )


def _check_interior(i: int, N: int) -> None:
    if N < 2:
        raise ValueError(f"population size N={N} must be at least 2")
    if not 1 <= i <= N - 1:
        raise ValueError(f"i={i} outside 1..N-1 for N={N}")


def expected_payoffs(i: int, N: int, g: PairGame) -> tuple[float, float]:
    """Mean payoff of a type-1 and a type-2 individual when there are ``i`` of type 1."""
    _check_interior(i, N)
    f = (g.a * (i - 1) + g.b * (N - i)) / (N - 1)
    h = (g.c * i + g.d * (N - i - 1)) / (N - 1)
    return f, h


def transition_probs(i: int, N: int, g: PairGame) -> tuple[float, float, float]:
    """``(p_up, p_down, p_stay)`` of the birth-death chain at state ``i``."""
    f, h = expected_payoffs(i, N, g)
    total = i * f + (N - i) * h
    if total <= 0:
        raise DegenerateFitnessError(f"total fitness is zero at i={i}, N={N}")
    up = (i * f / total) * (N - i) / N
    down = ((N - i) * h / total) * i / N
    return up, down, 1.0 - up - down


def _absorbing_solve(N: int, g: PairGame) -> np.ndarray:
    """Fixation vector from the tridiagonal absorbing-chain equations."""
    n = N - 1
    ab = np.zeros((3, n))
    rhs = np.zeros(n)
    for i in range(1, N):
        up, down, _ = transition_probs(i, N, g)
        leave = up + down
        k = i - 1
        ab[1, k] = 1.0
        if k + 1 < n:
            ab[0, k + 1] = -up / leave
        else:
            rhs[k] = up / leave
        if k - 1 >= 0:
            ab[2, k - 1] = -down / leave
    x = np.empty(N + 1)
    x[0], x[N] = 0.0, 1.0
    x[1:N] = solve_banded((1, 1), ab, rhs)
    return x


def fixation_vector(N: int, g: PairGame) -> np.ndarray:
    """``x_0 .. x_N`` for the first type.

    The sums of running products of ``gamma_j = p_down / p_up`` are formed in
    the log domain, so long products neither overflow nor underflow. A zero
    ``gamma`` cuts the products after it exactly. If some ``p_up`` is zero the
    ratio is infinite and the absorbing linear system is solved instead.
    """
    if N < 2:
        raise ValueError(f"population size N={N} must be at least 2")
    logs = [0.0]
    for j in range(1, N):
        up, down, _ = transition_probs(j, N, g)
        if up == 0:
            return _absorbing_solve(N, g)
        prev = logs[-1]
        logs.append(-math.inf if down == 0 or prev == -math.inf else prev + math.log(down / up))
    logs = np.array(logs)
    shift = logs.max()
    terms = np.exp(logs - shift)
    csum = np.concatenate(([0.0], np.cumsum(terms)))
    x = csum / csum[-1]
    x[0], x[N] = 0.0, 1.0
    return x


def exact_fixation(i: int, N: int, g: PairGame) -> float:
    """Fixation probability of type 1 starting from ``i`` copies among ``N``."""
    if N < 2:
        raise ValueError(f"population size N={N} must be at least 2")
    if not 0 <= i <= N:
        raise ValueError(f"i={i} outside 0..N")
    if i == 0:
        return 0.0
    if i == N:
        return 1.0
    return float(fixation_vector(N, g)[i])


# --------------------------------------------------------------------------
# sampled process


@dataclass(frozen=True)
class PopulationState:
    slots: tuple[str, ...]

    @classmethod
    def two_types(cls, name_a: str, name_b: str, i: int, N: int) -> "PopulationState":
        if not 0 <= i <= N:
            raise ValueError(f"i={i} outside 0..N")
        return cls((name_a,) * i + (name_b,) * (N - i))

    @property
    def size(self) -> int:
        return len(self.slots)

    def counts(self) -> Counter:
        return Counter(self.slots)

    def is_homogeneous(self) -> bool:
        return len(set(self.slots)) <= 1


@dataclass(frozen=True)
class RunResult:
    winner: str
    steps: int
    zero_fitness_steps: int = 0

    def __iter__(self):
        return iter((self.winner, self.steps))


@dataclass(frozen=True)
class FixationEstimate:
    probability: float
    repetitions: int
    wins: int
    seed: int
    ci95: float
    name_a: str = ""
    name_b: str = ""
    N: int = 0
    i: int = 0
    zero_fitness_runs: int = 0

    @classmethod
    def from_wins(cls, wins: int, repetitions: int, seed: int, **labels) -> "FixationEstimate":
        p = wins / repetitions
        return cls(p, repetitions, wins, seed, 1.96 * math.sqrt(p * (1 - p) / repetitions), **labels)

    def complement(self) -> "FixationEstimate":
        """The same runs seen from the other strategy's side."""
        losses = self.repetitions - self.wins
        return replace(
            self,
            probability=losses / self.repetitions,
            wins=losses,
            name_a=self.name_b,
            name_b=self.name_a,
            i=self.N - self.i,
        )


def individual_fitness(pop: PopulationState, cache, rng: np.random.Generator) -> np.ndarray:
    """Per-individual fitness: the sum over all other individuals of one fresh
    sampled match score for that pair."""
    slots = pop.slots
    n = len(slots)
    fit = np.zeros(n)
    for x in range(n):
        for y in range(x + 1, n):
            samples = cache[(slots[x], slots[y])]
            row = samples[0] if len(samples) == 1 else samples[rng.integers(len(samples))]
            fit[x] += row[0]
            fit[y] += row[1]
    return fit


def _pick(weights: np.ndarray, u: float) -> int:
    cdf = np.cumsum(weights)
    return min(int(np.searchsorted(cdf, u * cdf[-1], side="right")), len(weights) - 1)


def moran_step(pop: PopulationState, cache, rng: np.random.Generator) -> PopulationState:
    """One birth (proportional to fitness) and one uniform death.

    The dying individual is chosen from the population before the birth, so
    the parent itself may be replaced. If every fitness is zero the parent is
    chosen uniformly.
    """
    fit = individual_fitness(pop, cache, rng)
    n = pop.size
    if fit.sum() > 0:
        parent = _pick(fit, rng.random())
    else:
        parent = int(rng.integers(n))
    dead = int(rng.integers(n))
    slots = list(pop.slots)
    slots[dead] = slots[parent]
    return PopulationState(tuple(slots))


class _TypePairs:
    """Per-type fitness totals of a population given only its type counts.

    Every unordered pair of individuals interacts once per step. For types
    ``s`` and ``t`` that is ``c_s * c_t`` interactions (``c_s(c_s-1)/2`` when
    ``s == t``); the type totals are the sums of the sampled scores.
    """

    def __init__(self, types: Sequence[str], cache, rng: np.random.Generator, frozen: bool) -> None:
        self.pairs = []
        for s in range(len(types)):
            for t in range(s, len(types)):
                samples = cache[(types[s], types[t])]
                if frozen and len(samples) > 1:
                    samples = samples[rng.integers(len(samples))][None, :]
                if s == t:
                    self.pairs.append((s, t, samples.sum(axis=1), None))
                else:
                    self.pairs.append((s, t, samples[:, 0].copy(), samples[:, 1].copy()))
        self.constant = all(len(p[2]) == 1 for p in self.pairs)
        self.rng = rng
        self.k = len(types)

    def totals(self, counts: Sequence[int]) -> list[float]:
        out = [0.0] * self.k
        rng = self.rng
        for s, t, col_s, col_t in self.pairs:
            cs = counts[s]
            n = cs * (cs - 1) // 2 if s == t else cs * counts[t]
            if n == 0:
                continue
            if len(col_s) == 1:
                out[s] += n * float(col_s[0])
                if col_t is not None:
                    out[t] += n * float(col_t[0])
            else:
                idx = rng.integers(len(col_s), size=n)
                out[s] += float(col_s[idx].sum())
                if col_t is not None:
                    out[t] += float(col_t[idx].sum())
        return out


def run_to_fixation(
    pop: PopulationState,
    cache,
    rng: np.random.Generator,
    max_steps: int = 10**7,
    frozen: bool = False,
) -> RunResult:
    """Apply Moran steps until one type remains.

    Works on type counts rather than slots: since individuals of a type are
    exchangeable, choosing the parent's type with probability proportional
    to the type's total fitness and the dead individual's type with
    probability proportional to its count is the same process as
    :func:`moran_step`.

    With ``frozen`` every pair of types uses one cache sample drawn at the
    start of the run instead of fresh draws for every interaction.
    """
    types = list(dict.fromkeys(pop.slots))
    if len(types) == 1:
        return RunResult(types[0], 0)
    N = pop.size
    tally = pop.counts()
    counts = [tally[t] for t in types]
    pairs = _TypePairs(types, cache, rng, frozen)
    if len(types) == 2 and pairs.constant:
        return _run_two_constant(types, counts[0], N, pairs, rng, max_steps)

    steps = zero = 0
    while max(counts) < N:
        if steps >= max_steps:
            raise StepCapExceeded(steps)
        totals = pairs.totals(counts)
        u_birth, u_death = rng.random(2)
        if sum(totals) > 0:
            birth = _pick(np.asarray(totals), u_birth)
        else:
            zero += 1
            birth = _pick(np.asarray(counts, float), u_birth)
        death = _pick(np.asarray(counts, float), u_death)
        counts[birth] += 1
        counts[death] -= 1
        steps += 1
    return RunResult(types[counts.index(N)], steps, zero)


def _run_two_constant(types, i, N, pairs, rng, max_steps) -> RunResult:
    # With constant payoffs the birth probability depends on i alone.
    birth_a = [0.0] * (N + 1)
    zero_at = [False] * (N + 1)
    for j in range(1, N):
        fa, fb = pairs.totals([j, N - j])
        if fa + fb > 0:
            birth_a[j] = fa / (fa + fb)
        else:
            birth_a[j] = j / N
            zero_at[j] = True
    steps = zero = 0
    buf: list[float] = []
    pos = 0
    while 0 < i < N:
        if steps >= max_steps:
            raise StepCapExceeded(steps)
        if pos >= len(buf):
            buf = rng.random(2048).tolist()
            pos = 0
        zero += zero_at[i]
        up = buf[pos] < birth_a[i]
        down = buf[pos + 1] * N < i
        pos += 2
        i += up - down
        steps += 1
    return RunResult(types[0] if i == N else types[1], steps, zero)


def start_index(kind: str, N: int) -> int:
    """Focal count for a start kind: 1, floor(N/2) or N - 1."""
    if kind == "invade":
        return 1
    if kind == "coexist":
        return N // 2
    if kind == "resist":
        return N - 1
    raise ValueError(f"unknown start kind {kind!r}; expected one of {START_KINDS}")


def estimate_fixation(
    a,
    b,
    i: int,
    N: int,
    reps: int,
    cache,
    master_seed: int = 0,
    max_steps: int = 10**7,
    frozen: bool = False,
) -> FixationEstimate:
    """Fraction of ``reps`` runs from ``i`` copies of ``a`` and ``N - i`` of ``b`` won by ``a``.

    Run ``r`` draws from ``np.random.default_rng(derive_seed(master_seed, r))``.
    ``a`` and ``b`` may be specs or names; they must have distinct names.
    """
    name_a = getattr(a, "name", a)
    name_b = getattr(b, "name", b)
    if name_a == name_b:
        raise ValueError("the two strategies need distinct names; relabel one of them")
    _check_interior(i, N)
    if reps < 1:
        raise ValueError("reps must be positive")
    start = PopulationState.two_types(name_a, name_b, i, N)
    wins = zero_runs = 0
    for r in range(reps):
        rng = np.random.default_rng(derive_seed(master_seed, r))
        try:
            res = run_to_fixation(start, cache, rng, max_steps, frozen)
        except StepCapExceeded as exc:
            raise StepCapExceeded(exc.steps, run=r) from None
        wins += res.winner == name_a
        zero_runs += res.zero_fitness_steps > 0
    est = FixationEstimate.from_wins(wins, reps, master_seed, name_a=name_a, name_b=name_b, N=N, i=i)
    return replace(est, zero_fitness_runs=zero_runs)
