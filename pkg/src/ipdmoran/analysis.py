"""Pairwise sweeps, rankings, rank correlations and validation tables.

All tables are plain CSV. Sweep files start with ``#`` metadata lines
(package version, master seed, configuration hash) followed by the columns
``name_a,name_b,N,i,reps,wins,probability,ci95``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import norm, rankdata

from .match import MatchConfig, PayoffCache, build_cache, is_deterministic_pair
from .moran import START_KINDS, FixationEstimate, PairGame, estimate_fixation, exact_fixation, start_index
from .seeding import derive_seed
from .strategies import StrategySpec, roster_by_name

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ["name_a", "name_b", "N", "i", "reps", "wins", "probability", "ci95"]


class IncompleteSweepError(ValueError):
    def __init__(self, missing: Sequence[tuple]) -> None:
        shown = "; ".join(f"{a} vs {b} N={n} i={i}" for a, b, n, i in missing[:5])
        more = f" and {len(missing) - 5} more" if len(missing) > 5 else ""
        super().__init__(f"sweep is missing {len(missing)} cell(s): {shown}{more}")
        self.missing = list(missing)


def sweep_starts(N: int, starts: Iterable[str] = START_KINDS) -> list[int]:
    """Focal counts computed for a pair at size ``N``.

    The counts of the requested start kinds plus their complements, so that
    every row has its complementary row (for odd N the coexist start adds
    ``N - N//2``).
    """
    base = {start_index(k, N) for k in starts}
    return sorted({i for i in base | {N - i for i in base} if 1 <= i <= N - 1})


@dataclass
class SweepResult:
    rows: list[FixationEstimate] = field(default_factory=list)
    failures: list[tuple[str, str, int, int, str]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def sorted_rows(self) -> list[FixationEstimate]:
        return sorted(self.rows, key=lambda r: (r.name_a, r.name_b, r.N, r.i))

    def index(self) -> dict[tuple[str, str, int, int], FixationEstimate]:
        return {(r.name_a, r.name_b, r.N, r.i): r for r in self.rows}

    def names(self) -> list[str]:
        return sorted({r.name_a for r in self.rows} | {r.name_b for r in self.rows})

    def sizes(self) -> list[int]:
        return sorted({r.N for r in self.rows})

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.metadata):
            buf.write(f"# {key}={self.metadata[key]}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in self.sorted_rows():
            w.writerow([r.name_a, r.name_b, r.N, r.i, r.repetitions, r.wins, repr(r.probability), repr(r.ci95)])
        return buf.getvalue()

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        return path

    @classmethod
    def from_csv(cls, text: str) -> "SweepResult":
        meta = {}
        body = []
        for line in text.splitlines():
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k] = v
            elif line.strip():
                body.append(line)
        rows = []
        for rec in csv.DictReader(body):
            rows.append(
                FixationEstimate(
                    float(rec["probability"]),
                    int(rec["reps"]),
                    int(rec["wins"]),
                    int(meta.get("seed", 0)),
                    float(rec["ci95"]),
                    rec["name_a"],
                    rec["name_b"],
                    int(rec["N"]),
                    int(rec["i"]),
                )
            )
        return cls(rows, [], meta)

    @classmethod
    def read(cls, path: str | Path) -> "SweepResult":
        return cls.from_csv(Path(path).read_text())


# --------------------------------------------------------------------------
# sweep

_WORKER_CACHE: PayoffCache | None = None


def _init_worker(cache: PayoffCache) -> None:
    global _WORKER_CACHE
    _WORKER_CACHE = cache


def _cell(args) -> tuple[tuple, FixationEstimate | None, str]:
    name_a, name_b, N, i, reps, seed, max_steps = args
    try:
        est = estimate_fixation(name_a, name_b, i, N, reps, _WORKER_CACHE, seed, max_steps)
        return (name_a, name_b, N, i), est, ""
    except Exception as exc:  # surfaced as a failed cell, the sweep goes on
        return (name_a, name_b, N, i), None, f"{type(exc).__name__}: {exc}"


def cell_seed(master: int, name_a: str, name_b: str, N: int, i: int) -> int:
    return derive_seed(master, "sweep", name_a, name_b, N, i)


def config_hash(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def sweep(
    roster: Sequence[StrategySpec],
    n_values: Iterable[int] = range(2, 15),
    reps: int = 1000,
    cfg: MatchConfig = MatchConfig(),
    cache: PayoffCache | None = None,
    samples: int = 1000,
    seed: int = 0,
    jobs: int = 1,
    checkpoint: str | Path | None = None,
    max_steps: int = 10**7,
    starts: Iterable[str] = START_KINDS,
) -> SweepResult:
    """Fixation estimates for every ordered pair of ``roster`` and every size.

    Each unordered pair is simulated once per focal count in
    :func:`sweep_starts`; the reversed ordered pair gets the complementary
    rows from the same runs. Cells are seeded by :func:`cell_seed`, so the
    output does not depend on ``jobs``. With ``checkpoint`` finished cells are
    appended to a JSON-lines file and skipped on a rerun.
    """
    roster_by_name(roster)
    n_values = sorted(set(n_values))
    unknown = set(starts) - set(START_KINDS)
    if unknown:
        raise ValueError(f"unknown start kinds {sorted(unknown)}; expected some of {START_KINDS}")
    starts = sorted(set(starts), key=START_KINDS.index)
    if any(n < 2 for n in n_values):
        raise ValueError("population sizes must be at least 2")
    if cache is None:
        cache = build_cache(roster, samples, cfg, jobs=jobs)
    names = [s.name for s in roster]
    cells = [
        (names[x], names[y], N, i, reps, cell_seed(seed, names[x], names[y], N, i), max_steps)
        for x in range(len(names))
        for y in range(x + 1, len(names))
        for N in n_values
        for i in sweep_starts(N, starts)
    ]
    done: dict[tuple, FixationEstimate] = {}
    ckpt = Path(checkpoint) if checkpoint else None
    if ckpt and ckpt.exists():
        for line in ckpt.read_text().splitlines():
            rec = json.loads(line)
            done[tuple(rec["key"])] = FixationEstimate(**rec["estimate"])
    todo = [c for c in cells if (c[0], c[1], c[2], c[3]) not in done]
    failures = []
    writer = ckpt.open("a") if ckpt else None
    try:
        if jobs > 1 and len(todo) > 1:
            pool = ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(cache,))
            results = pool.map(_cell, todo, chunksize=max(1, len(todo) // (8 * jobs)))
        else:
            pool = None
            _init_worker(cache)
            results = map(_cell, todo)
        for key, est, err in results:
            if est is None:
                failures.append((*key, err))
                log.warning("cell %s failed: %s", key, err)
                continue
            done[key] = est
            if writer:
                writer.write(json.dumps({"key": list(key), "estimate": est.__dict__}) + "\n")
                writer.flush()
        if pool:
            pool.shutdown()
    finally:
        if writer:
            writer.close()
    rows = []
    for est in done.values():
        rows.append(est)
        rows.append(est.complement())
    meta = {
        "version": _version(),
        "seed": seed,
        "config_hash": config_hash(
            {
                "match": cfg.to_dict(),
                "reps": reps,
                "samples": samples,
                "n_values": n_values,
                "starts": starts,
                "roster": cache.roster_hash,
            }
        ),
    }
    return SweepResult(rows, failures, meta)


def _version() -> str:
    from . import __version__

    return __version__


# --------------------------------------------------------------------------
# ranking


@dataclass(frozen=True)
class RankTable:
    N: int
    kind: str
    i: int
    entries: tuple[tuple[str, float, int], ...]

    @property
    def neutral(self) -> float:
        return self.i / self.N

    def means(self) -> dict[str, float]:
        return {name: mean for name, mean, _ in self.entries}

    def ranks(self) -> dict[str, int]:
        return {name: rank for name, _, rank in self.entries}


def rank(sweep_result: SweepResult, kind: str, N: int) -> RankTable:
    """Strategies ordered by mean fixation over all opponents.

    Ties are broken by name.
    """
    if kind not in START_KINDS:
        raise ValueError(f"unknown start kind {kind!r}")
    i = start_index(kind, N)
    idx = sweep_result.index()
    names = sweep_result.names()
    missing = []
    means = {}
    for a in names:
        vals = []
        for b in names:
            if a == b:
                continue
            row = idx.get((a, b, N, i))
            if row is None:
                missing.append((a, b, N, i))
            else:
                vals.append(row.probability)
        means[a] = float(np.mean(vals)) if vals else math.nan
    if missing:
        raise IncompleteSweepError(missing)
    order = sorted(names, key=lambda n: (-means[n], n))
    return RankTable(N, kind, i, tuple((n, means[n], k + 1) for k, n in enumerate(order)))


def rank_all(sweep_result: SweepResult, kind: str) -> dict[int, RankTable]:
    return {N: rank(sweep_result, kind, N) for N in sweep_result.sizes()}


def rank_correlation(t1: RankTable, t2: RankTable) -> float:
    """Spearman correlation of the two tables' mean fixation values.

    Values are converted to midranks and correlated with Pearson's formula.
    Returns NaN when either table is constant.
    """
    m1, m2 = t1.means(), t2.means()
    if set(m1) != set(m2):
        raise ValueError("rank tables cover different strategies")
    names = sorted(m1)
    r1 = rankdata([-m1[n] for n in names])
    r2 = rankdata([-m2[n] for n in names])
    if np.ptp(r1) == 0 or np.ptp(r2) == 0:
        return math.nan
    return float(np.corrcoef(r1, r2)[0, 1])


def correlation_matrix(tables: dict[int, RankTable]) -> tuple[list[int], np.ndarray]:
    sizes = sorted(tables)
    out = np.empty((len(sizes), len(sizes)))
    for x, n1 in enumerate(sizes):
        for y, n2 in enumerate(sizes):
            out[x, y] = rank_correlation(tables[n1], tables[n2])
    return sizes, out


# --------------------------------------------------------------------------
# validation


def z_score(p_hat: float, exact: float, n: int) -> float:
    """Deviation of an estimate from an exact value in units of the binomial
    standard error under the exact value."""
    if 0 < exact < 1:
        return (p_hat - exact) / math.sqrt(exact * (1 - exact) / n)
    return 0.0 if p_hat == exact else math.copysign(math.inf, p_hat - exact)


def z_critical(level: float, cells: int = 1) -> float:
    """Two-sided critical value; ``cells > 1`` gives a Bonferroni
    simultaneous band over that many cells."""
    return float(norm.ppf(1 - (1 - level) / (2 * cells)))


@dataclass(frozen=True)
class ValidationRow:
    name_a: str
    name_b: str
    N: int
    i: int
    reps: int
    simulated: float
    ci95: float
    exact: float
    z: float
    deterministic: bool


def validation_report(
    pairs: Sequence[tuple[StrategySpec, StrategySpec]],
    n_values: Iterable[int],
    reps: int = 1000,
    cfg: MatchConfig = MatchConfig(),
    samples: int = 1000,
    seed: int = 0,
    starts: Iterable[str] = START_KINDS,
    cache: PayoffCache | None = None,
) -> list[ValidationRow]:
    """Simulated fixation next to the exact chain of the mean-payoff game."""
    specs = {}
    for a, b in pairs:
        specs[a.name] = a
        specs[b.name] = b
    roster = list(specs.values())
    if cache is None:
        needed = {(a.name, a.name) for a, _ in pairs} | {(b.name, b.name) for _, b in pairs}
        needed |= {(a.name, b.name) for a, b in pairs}
        cache = build_cache(roster, samples, cfg, pairs=[(specs[x], specs[y]) for x, y in sorted(needed)])
    rows = []
    for a, b in pairs:
        game = PairGame.from_cache(cache, a.name, b.name)
        det = is_deterministic_pair(a, b, cfg.noise)
        for N in sorted(set(n_values)):
            for i in sorted({start_index(k, N) for k in starts}):
                est = estimate_fixation(a, b, i, N, reps, cache, derive_seed(seed, "validate", a.name, b.name, N, i))
                x = exact_fixation(i, N, game)
                rows.append(
                    ValidationRow(a.name, b.name, N, i, reps, est.probability, est.ci95, x, z_score(est.probability, x, reps), det)
                )
    return rows


def validation_csv(rows: Sequence[ValidationRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name_a", "name_b", "N", "i", "reps", "simulated", "ci95", "exact", "z", "deterministic"])
    for r in rows:
        w.writerow([r.name_a, r.name_b, r.N, r.i, r.reps, repr(r.simulated), repr(r.ci95), repr(r.exact), repr(r.z), int(r.deterministic)])
    return buf.getvalue()


# --------------------------------------------------------------------------
# other tables


def rank_csv(tables: Iterable[RankTable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "kind", "i", "rank", "name", "mean", "neutral"])
    for t in tables:
        for name, mean, r in t.entries:
            w.writerow([t.N, t.kind, t.i, r, name, repr(mean), repr(t.neutral)])
    return buf.getvalue()


def read_rank_csv(text: str) -> list[RankTable]:
    groups: dict[tuple[int, str, int], list[tuple[str, float, int]]] = {}
    for rec in csv.DictReader(io.StringIO(text)):
        key = (int(rec["N"]), rec["kind"], int(rec["i"]))
        groups.setdefault(key, []).append((rec["name"], float(rec["mean"]), int(rec["rank"])))
    return [RankTable(N, kind, i, tuple(sorted(e, key=lambda x: x[2]))) for (N, kind, i), e in groups.items()]


def matrix_csv(labels: Sequence[int], values: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", *labels])
    for label, row in zip(labels, values):
        w.writerow([label, *(repr(float(v)) for v in row)])
    return buf.getvalue()


def series_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()
