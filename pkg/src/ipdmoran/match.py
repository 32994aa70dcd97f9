"""Iterated matches, the sampled payoff cache and cooperation-rate traces."""

from __future__ import annotations

import csv
import hashlib
import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .game import DEFAULT_MATRIX, Action, C, PayoffMatrix, validate_matrix
from .seeding import derive_seed
from .strategies import History, StrategySpec, roster_by_name
from .strategy_io import serialize_roster


@dataclass(frozen=True)
class MatchConfig:
    turns: int = 200
    noise: float = 0.0
    matrix: PayoffMatrix = DEFAULT_MATRIX
    seed: int = 0

    def __post_init__(self) -> None:
        if self.turns < 1:
            raise ValueError("turns must be positive")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must lie in [0, 1]")
        validate_matrix(self.matrix)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["matrix"] = list(self.matrix.as_tuple())
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MatchConfig":
        return cls(int(d["turns"]), float(d["noise"]), PayoffMatrix(*d["matrix"]), int(d["seed"]))


@dataclass(frozen=True)
class MatchResult:
    actions: tuple[tuple[Action, Action], ...]
    totals: tuple[float, float]
    turns: int

    @property
    def means(self) -> tuple[float, float]:
        return (self.totals[0] / self.turns, self.totals[1] / self.turns)


def is_deterministic_pair(a: StrategySpec, b: StrategySpec, noise: float) -> bool:
    return noise == 0 and not a.stochastic and not b.stochastic


def play_match(a: StrategySpec, b: StrategySpec, cfg: MatchConfig = MatchConfig(), seed: int | None = None) -> MatchResult:
    """Play ``cfg.turns`` rounds between fresh players of ``a`` and ``b``.

    Each intended action is flipped independently with probability
    ``cfg.noise``; both players observe and are scored on the executed
    actions. Totals are accumulated in the matrix's own number type, so an
    integer matrix gives exact totals.
    """
    rng = random.Random(cfg.seed if seed is None else seed)
    pa, pb = a.player(), b.player()
    ha, hb = History(), History()
    m = cfg.matrix
    table = {
        (C, C): (m.R, m.R),
        (C, Action.D): (m.S, m.T),
        (Action.D, C): (m.T, m.S),
        (Action.D, Action.D): (m.P, m.P),
    }
    noise = cfg.noise
    total_a = total_b = 0
    actions = []
    for _ in range(cfg.turns):
        x = pa.act(ha, rng)
        y = pb.act(hb, rng)
        if noise:
            if rng.random() < noise:
                x = x.flip()
            if rng.random() < noise:
                y = y.flip()
        ha.append(x, y)
        hb.append(y, x)
        sa, sb = table[(x, y)]
        total_a += sa
        total_b += sb
        actions.append((x, y))
    return MatchResult(tuple(actions), (total_a, total_b), cfg.turns)


# --------------------------------------------------------------------------
# payoff cache


@dataclass
class PayoffCache:
    """Sampled per-turn mean scores for every ordered strategy pair.

    ``samples[(a, b)]`` is an array of shape ``(k, 2)`` whose rows are
    ``(mean_a, mean_b)``. The entry for ``(b, a)`` is the column-swapped view
    of the same samples. A pair with a single sample is treated as constant.
    """

    config: MatchConfig
    names: list[str] = field(default_factory=list)
    samples: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)
    roster_hash: str = ""

    def add(self, a: str, b: str, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=float).reshape(-1, 2)
        values.setflags(write=False)
        for name in (a, b):
            if name not in self.names:
                self.names.append(name)
        self.samples[(a, b)] = values
        swapped = np.ascontiguousarray(values[:, ::-1])
        swapped.setflags(write=False)
        self.samples[(b, a)] = swapped if a != b else values

    def __getitem__(self, pair: tuple[str, str]) -> np.ndarray:
        try:
            return self.samples[pair]
        except KeyError:
            raise KeyError(f"payoff cache has no samples for {pair}") from None

    def __contains__(self, pair: tuple[str, str]) -> bool:
        return pair in self.samples

    def is_constant(self, a: str, b: str) -> bool:
        return len(self[(a, b)]) == 1

    def mean(self, a: str, b: str) -> tuple[float, float]:
        s = self[(a, b)]
        return float(s[:, 0].mean()), float(s[:, 1].mean())

    def canonical_pairs(self) -> list[tuple[str, str]]:
        order = {n: i for i, n in enumerate(self.names)}
        return sorted(
            {(a, b) for a, b in self.samples if order[a] <= order[b]},
            key=lambda p: (order[p[0]], order[p[1]]),
        )

    # persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> Path:
        """Write ``<path>.csv`` and a ``<path>.json`` header; returns the CSV path."""
        path = Path(path)
        csv_path = path.with_suffix(".csv")
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with csv_path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["name_a", "name_b", "sample_index", "mean_a", "mean_b"])
            for a, b in self.canonical_pairs():
                for k, (ma, mb) in enumerate(self[(a, b)]):
                    w.writerow([a, b, k, repr(float(ma)), repr(float(mb))])
        header = {"config": self.config.to_dict(), "names": self.names, "roster_hash": self.roster_hash}
        path.with_suffix(".json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
        return csv_path

    @classmethod
    def load(cls, path: str | Path) -> "PayoffCache":
        path = Path(path)
        header = json.loads(path.with_suffix(".json").read_text())
        cache = cls(MatchConfig.from_dict(header["config"]), list(header["names"]), roster_hash=header["roster_hash"])
        rows: dict[tuple[str, str], list[tuple[int, float, float]]] = {}
        with path.with_suffix(".csv").open(newline="") as fh:
            for row in csv.DictReader(fh):
                rows.setdefault((row["name_a"], row["name_b"]), []).append(
                    (int(row["sample_index"]), float(row["mean_a"]), float(row["mean_b"]))
                )
        for (a, b), items in rows.items():
            items.sort()
            if [k for k, _, _ in items] != list(range(len(items))):
                raise ValueError(f"cache file has gaps in the samples of {(a, b)}")
            cache.add(a, b, np.array([(x, y) for _, x, y in items]))
        return cache


def roster_hash(roster: Sequence[StrategySpec]) -> str:
    return hashlib.sha256(serialize_roster(roster).encode("utf-8")).hexdigest()


def sample_pair(a: StrategySpec, b: StrategySpec, samples: int, cfg: MatchConfig) -> np.ndarray:
    """Mean score pairs of ``samples`` independent matches between ``a`` and ``b``.

    Sample ``k`` uses the seed ``derive_seed(cfg.seed, a.name, b.name, k)``,
    so a pair's samples do not depend on the roster around it. Deterministic
    pairs without noise return a single row.
    """
    if is_deterministic_pair(a, b, cfg.noise):
        samples = 1
    out = np.empty((samples, 2))
    for k in range(samples):
        out[k] = play_match(a, b, cfg, seed=derive_seed(cfg.seed, a.name, b.name, k)).means
    return out


def _sample_job(args):
    return sample_pair(*args)


def build_cache(
    roster: Sequence[StrategySpec],
    samples: int = 1000,
    cfg: MatchConfig = MatchConfig(),
    jobs: int = 1,
    pairs: Iterable[tuple[StrategySpec, StrategySpec]] | None = None,
    cache: PayoffCache | None = None,
) -> PayoffCache:
    """Sample every unordered pair of ``roster``, self-pairs included.

    ``pairs`` restricts the work to the given pairs; ``cache`` extends an
    existing cache instead of starting a new one.
    """
    if not roster:
        raise ValueError("roster is empty")
    if samples < 1:
        raise ValueError("samples must be positive")
    roster_by_name(roster)
    if pairs is None:
        pairs = [(roster[i], roster[j]) for i in range(len(roster)) for j in range(i, len(roster))]
    pairs = list(pairs)
    if cache is None:
        cache = PayoffCache(cfg, [s.name for s in roster], roster_hash=roster_hash(roster))
    work = [(a, b, samples, cfg) for a, b in pairs]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sample_job, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        results = [_sample_job(w) for w in work]
    for (a, b), values in zip(pairs, results):
        cache.add(a.name, b.name, values)
    return cache


def cooperation_rate(
    focal: StrategySpec,
    roster: Sequence[StrategySpec],
    reps: int = 1,
    cfg: MatchConfig = MatchConfig(),
) -> np.ndarray:
    """Per-round fraction of (opponent, repetition) matches in which ``focal`` cooperated."""
    if reps < 1:
        raise ValueError("reps must be positive")
    counts = np.zeros(cfg.turns)
    for opp in roster:
        if is_deterministic_pair(focal, opp, cfg.noise):
            res = play_match(focal, opp, cfg)
            counts += reps * np.fromiter((x == C for x, _ in res.actions), float, cfg.turns)
            continue
        for r in range(reps):
            res = play_match(focal, opp, cfg, seed=derive_seed(cfg.seed, "coop", focal.name, opp.name, r))
            counts += np.fromiter((x == C for x, _ in res.actions), float, cfg.turns)
    return counts / (reps * len(roster))
