"""Command line batch tool.

Every subcommand writes CSV files under ``--out``; plots are optional
(``--plot``) and render from the same tables. Options may also come from a
flat ``key=value`` file given with ``--config``, whose keys are the long
option names (``n-max=14``, ``matrix=3,0,5,1``). Exit codes: 0 ok, 1 usage,
2 validation failure, 3 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    SweepResult,
    correlation_matrix,
    matrix_csv,
    rank_all,
    rank_csv,
    series_csv,
    sweep,
    validation_csv,
    validation_report,
    z_critical,
)
from .game import PayoffConstraintError, PayoffMatrix, validate_matrix
from .match import MatchConfig, PayoffCache, build_cache, cooperation_rate
from .moran import START_KINDS, PairGame, estimate_fixation, fixation_vector
from .strategies import StrategyError, builtin_roster, roster_by_name
from .strategy_io import parse_roster, serialize_strategy
from .trainer import MeanPayoff, MoranFixation, TrainerConfig, evolve, handshake_report, write_history

log = logging.getLogger("ipdmoran")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3

DEFAULT_TRAINING_OPPONENTS = (
    "Cooperator",
    "Defector",
    "Alternator",
    "Tit For Tat",
    "Suspicious Tit For Tat",
    "Tit For 2 Tats",
    "Win-Stay Lose-Shift",
    "Random",
    "Grudger",
    "Fool Me Once",
)


class UsageError(Exception):
    pass


def read_config(path: str) -> dict[str, str]:
    out = {}
    for number, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{number}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file with defaults for these options")
    p.add_argument("--roster", help="roster file (default: built-in roster)")
    p.add_argument("--turns", type=int, default=200)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--matrix", type=PayoffMatrix.parse, default=PayoffMatrix(3, 0, 5, 1), help="R,S,T,P")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=14)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--samples", type=int, default=1000, help="match samples per stochastic pair")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--cache", help="payoff cache saved by 'sample' (path without suffix)")
    p.add_argument("--plot", action="store_true", help="also write SVG plots")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ipdmoran", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="build and save the payoff cache")
    _common(p)

    p = sub.add_parser("exact", help="exact fixation probabilities of the birth-death chain")
    _common(p)
    p.add_argument("--abcd", help="raw game a,b,c,d")
    p.add_argument("--pair", nargs=2, metavar=("A", "B"), help="two roster strategies (mean-payoff game)")
    p.add_argument("--N", type=int, required=True)

    p = sub.add_parser("moran", help="estimate fixation for one pair")
    _common(p)
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--frozen", action="store_true", help="one payoff draw per type pair per run")

    p = sub.add_parser("sweep", help="all pairs, all N, starts 1, N/2, N-1")
    _common(p)
    p.add_argument("--checkpoint", help="JSON-lines file of finished cells (resumable)")
    p.add_argument("--starts", nargs="+", choices=START_KINDS, default=list(START_KINDS))

    for name in ("rank", "corr"):
        p = sub.add_parser(name, help="rank tables" if name == "rank" else "rank correlation across N")
        _common(p)
        p.add_argument("--sweep", required=True, help="sweep CSV")
        p.add_argument("--kind", choices=[*START_KINDS, "all"], default="all")

    p = sub.add_parser("validate", help="simulated vs exact fixation")
    _common(p)
    p.add_argument("--pair", nargs=2, action="append", metavar=("A", "B"), required=True)
    p.add_argument("--sizes", type=int, nargs="+", help="explicit N values (default n-min..n-max)")

    p = sub.add_parser("coop-rate", help="per-round cooperation rate of a strategy against the roster")
    _common(p)
    p.add_argument("focal")

    p = sub.add_parser("train", help="evolve an FSM strategy")
    _common(p)
    p.add_argument("--states", type=int, default=8)
    p.add_argument("--population", type=int, default=20)
    p.add_argument("--generations", type=int, default=50)
    p.add_argument("--mutation-rate", type=float, default=0.1)
    p.add_argument("--elitism", type=int, default=2)
    p.add_argument("--no-crossover", action="store_true")
    p.add_argument("--objective", choices=["moran", "payoff"], default="moran")
    p.add_argument("--N", type=int, default=10)
    p.add_argument("--opponents", nargs="+", help="opponent names (default: ten classics)")
    return parser


def parse_args(argv: list[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        defaults = read_config(args.config)
        known = {a.dest for a in sub._actions}
        unknown = set(defaults) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        sub.set_defaults(**{k: _coerce(sub, k, v) for k, v in defaults.items()})
        args = parser.parse_args(argv)
    return args


def _coerce(sub: argparse.ArgumentParser, dest: str, value: str):
    for action in sub._actions:
        if action.dest == dest:
            if action.nargs in ("+", "*") or isinstance(action.nargs, int):
                return [action.type(v) if action.type else v for v in value.split()]
            if action.type:
                return action.type(value)
            if isinstance(action, argparse._StoreTrueAction):
                return value.lower() in ("1", "true", "yes", "on")
            return value
    return value


def _roster(args):
    if args.roster:
        return parse_roster(Path(args.roster).read_text())
    return builtin_roster()


def _cfg(args) -> MatchConfig:
    validate_matrix(args.matrix)
    return MatchConfig(args.turns, args.noise, args.matrix, args.seed)


def _select(roster, names):
    by_name = roster_by_name(roster)
    missing = [n for n in names if n not in by_name]
    if missing:
        raise UsageError(f"not in roster: {', '.join(missing)}")
    return [by_name[n] for n in names]


def _cache(args, roster, cfg) -> PayoffCache:
    if args.cache:
        return PayoffCache.load(args.cache)
    return build_cache(roster, args.samples, cfg, jobs=args.jobs)


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    print(path)
    return path


def _slug(name: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in name).strip("_")


def run(args) -> int:
    out = Path(args.out)
    cfg = _cfg(args)
    cmd = args.command

    if cmd == "sample":
        roster = _roster(args)
        cache = build_cache(roster, args.samples, cfg, jobs=args.jobs)
        print(cache.save(out / "cache"))
        return EXIT_OK

    if cmd == "exact":
        if bool(args.abcd) == bool(args.pair):
            raise UsageError("give exactly one of --abcd or --pair")
        if args.abcd:
            parts = [float(v) for v in args.abcd.split(",")]
            if len(parts) != 4:
                raise UsageError("--abcd needs four numbers")
            game = PairGame(*parts)
        else:
            roster = _roster(args)
            a, b = _select(roster, args.pair)
            cache = PayoffCache.load(args.cache) if args.cache else build_cache([a, b], args.samples, cfg)
            game = PairGame.from_cache(cache, a.name, b.name)
        x = fixation_vector(args.N, game)
        sys.stdout.write(f"# a,b,c,d={game.a!r},{game.b!r},{game.c!r},{game.d!r}\n")
        sys.stdout.write(series_csv(["i", "x_i"], [(i, float(v)) for i, v in enumerate(x)]))
        return EXIT_OK

    if cmd == "moran":
        roster = _roster(args)
        a, b = _select(roster, [args.a, args.b])
        cache = PayoffCache.load(args.cache) if args.cache else build_cache([a, b], args.samples, cfg)
        est = estimate_fixation(a, b, args.i, args.N, args.reps, cache, args.seed, frozen=args.frozen)
        print("name_a,name_b,N,i,reps,wins,probability,ci95")
        print(f"{a.name},{b.name},{args.N},{args.i},{est.repetitions},{est.wins},{est.probability!r},{est.ci95!r}")
        return EXIT_OK

    if cmd == "sweep":
        roster = _roster(args)
        cache = _cache(args, roster, cfg)
        result = sweep(
            roster, range(args.n_min, args.n_max + 1), args.reps, cfg, cache, args.samples,
            args.seed, args.jobs, args.checkpoint, starts=args.starts,
        )
        print(result.write(out / "sweep.csv"))
        for failure in result.failures:
            log.error("failed cell %s", failure)
        return EXIT_RUNTIME if result.failures else EXIT_OK

    if cmd in ("rank", "corr"):
        result = SweepResult.read(args.sweep)
        kinds = START_KINDS if args.kind == "all" else (args.kind,)
        for kind in kinds:
            tables = rank_all(result, kind)
            if cmd == "rank":
                _write(out, f"ranks_{kind}.csv", rank_csv(tables.values()))
                if args.plot:
                    from .plotting import plot_ranks

                    print(plot_ranks(tables, out / f"ranks_{kind}.svg"))
            else:
                sizes, mat = correlation_matrix(tables)
                _write(out, f"corr_{kind}.csv", matrix_csv(sizes, mat))
                if args.plot:
                    from .plotting import plot_heatmap

                    print(plot_heatmap(sizes, mat, out / f"corr_{kind}.svg", f"rank correlation ({kind})"))
        return EXIT_OK

    if cmd == "validate":
        roster = _roster(args)
        pairs = [tuple(_select(roster, p)) for p in args.pair]
        sizes = args.sizes or list(range(args.n_min, args.n_max + 1))
        rows = validation_report(pairs, sizes, args.reps, cfg, args.samples, args.seed)
        _write(out, "validation.csv", validation_csv(rows))
        if args.plot:
            from .plotting import plot_validation

            print(plot_validation(rows, out / "validation.svg"))
        det = [r for r in rows if r.deterministic]
        crit = z_critical(0.95, max(1, len(det)))
        bad = [r for r in det if abs(r.z) > crit]
        for r in rows:
            flag = ("ok" if abs(r.z) <= crit else "DISAGREE") if r.deterministic else f"dev={r.simulated - r.exact:+.4f}"
            print(f"{r.name_a} / {r.name_b} N={r.N} i={r.i}: sim={r.simulated:.4f} exact={r.exact:.4f} z={r.z:+.2f} {flag}")
        return EXIT_VALIDATION if bad else EXIT_OK

    if cmd == "coop-rate":
        roster = _roster(args)
        (focal,) = _select(roster, [args.focal])
        rates = cooperation_rate(focal, roster, args.reps, cfg)
        _write(out, f"coop_rate_{_slug(focal.name)}.csv", series_csv(["round", "rate"], [(t + 1, float(r)) for t, r in enumerate(rates)]))
        if args.plot:
            from .plotting import plot_cooperation

            print(plot_cooperation(rates, out / f"coop_rate_{_slug(focal.name)}.svg", focal.name))
        return EXIT_OK

    if cmd == "train":
        roster = _roster(args)
        opponents = _select(roster, args.opponents or list(DEFAULT_TRAINING_OPPONENTS))
        if args.objective == "moran":
            objective = MoranFixation(args.N, args.noise, args.reps, args.turns, args.samples)
        else:
            objective = MeanPayoff(args.turns, args.noise, min(args.samples, args.reps))
        tcfg = TrainerConfig(
            opponents, args.states, args.population, args.generations, args.mutation_rate,
            not args.no_crossover, args.elitism, objective, args.matrix, args.seed, args.jobs,
        )
        result = evolve(tcfg)
        _write(out, "champion.txt", serialize_strategy(_champion(result.best), sep="\n") + "\n")
        path = out / "history.csv"
        write_history(path, result.history)
        print(path)
        report = handshake_report(result.best, args.turns, matrix=args.matrix)
        print(f"best fitness {result.best_fitness:.4f}")
        print(report.summary())
        return EXIT_OK

    raise UsageError(f"unknown command {cmd}")


def _champion(fsm):
    from .strategies import StrategySpec

    return StrategySpec("Champion", fsm)


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return run(args)
    except (UsageError, StrategyError, PayoffConstraintError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        log.exception("runtime error")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
