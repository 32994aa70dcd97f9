"""Text format for strategies and rosters.

A strategy is one of::

    memone <initial 0|1> <p_cc> <p_cd> <p_dc> <p_dd>
    fsm <n>; start <state> <C|D>; <state> <C|D> -> <state> <C|D>; ...
    lookup <first_k> <depth> <opening> <2**(first_k + 2*depth) probabilities>
    scripted <name> [params]

Directives are separated by ``;`` or newlines and ``#`` starts a comment.
A roster has one strategy per line, ``"<display name>" = <strategy text>``.
Numbers are written with ``repr`` so parsing a serialized strategy gives back
exactly the same floats.
"""

from __future__ import annotations

import re
from typing import Iterable

from .game import Action
from .strategies import (
    SCRIPTED,
    FsmSpec,
    LookupSpec,
    MemoryOneSpec,
    Scripted,
    StrategyError,
    StrategySpec,
    roster_by_name,
)


class StrategySyntaxError(StrategyError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


_TRANSITION = re.compile(r"^(\d+)\s+([CD])\s*->\s*(\d+)\s+([CD])$", re.IGNORECASE)
_ROSTER_LINE = re.compile(r'^"((?:[^"\\]|\\.)+)"\s*=\s*(.+)$')


def _directives(text: str, first_line: int = 1) -> list[tuple[int, str]]:
    out = []
    for offset, raw in enumerate(text.splitlines()):
        line = raw.split("#", 1)[0]
        for part in line.split(";"):
            part = part.strip()
            if part:
                out.append((first_line + offset, part))
    return out


def _number(token: str, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise StrategySyntaxError(line, f"expected a number, got {token!r}") from None


def _integer(token: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise StrategySyntaxError(line, f"expected an integer, got {token!r}") from None


def _action(token: str, line: int) -> Action:
    try:
        return Action.from_char(token)
    except ValueError:
        raise StrategySyntaxError(line, f"expected C or D, got {token!r}") from None


def _parse_fsm(directives: list[tuple[int, str]]) -> FsmSpec:
    line, head = directives[0]
    tokens = head.split()
    if len(tokens) != 2:
        raise StrategySyntaxError(line, "expected 'fsm <num_states>'")
    n = _integer(tokens[1], line)
    start = None
    table: dict[tuple[int, Action], tuple[int, Action]] = {}
    for line, d in directives[1:]:
        tokens = d.split()
        if tokens[0].lower() == "start":
            if len(tokens) != 3:
                raise StrategySyntaxError(line, "expected 'start <state> <C|D>'")
            start = (_integer(tokens[1], line), _action(tokens[2], line))
            continue
        m = _TRANSITION.match(d)
        if not m:
            raise StrategySyntaxError(line, f"expected '<state> <C|D> -> <state> <C|D>', got {d!r}")
        key = (int(m.group(1)), Action.from_char(m.group(2)))
        if key in table:
            raise StrategySyntaxError(line, f"duplicate transition for state {key[0]} on {key[1]}")
        table[key] = (int(m.group(3)), Action.from_char(m.group(4)))
    if start is None:
        raise StrategySyntaxError(directives[0][0], "fsm without a 'start' directive")
    return FsmSpec.from_table(n, start[0], start[1], table)


def _parse_single(line: int, d: str):
    tokens = d.split()
    kind = tokens[0].lower()
    if kind == "memone":
        if len(tokens) != 6:
            raise StrategySyntaxError(line, "expected 'memone <init> <p_cc> <p_cd> <p_dc> <p_dd>'")
        init = tokens[1].upper()
        if init not in ("0", "1", "C", "D"):
            raise StrategySyntaxError(line, f"initial move must be 0 or 1, got {tokens[1]!r}")
        initial = Action.C if init in ("1", "C") else Action.D
        return MemoryOneSpec(initial, *(_number(t, line) for t in tokens[2:]))
    if kind == "lookup":
        if len(tokens) < 4:
            raise StrategySyntaxError(line, "expected 'lookup <first_k> <depth> <opening> <probabilities>'")
        first_k, depth = _integer(tokens[1], line), _integer(tokens[2], line)
        opening = tuple(_action(ch, line) for ch in tokens[3])
        table = tuple(_number(t, line) for t in tokens[4:])
        return LookupSpec(first_k, depth, table, opening)
    if kind == "scripted":
        if len(tokens) < 2:
            raise StrategySyntaxError(line, "expected 'scripted <name> [params]'")
        name = tokens[1]
        if name not in SCRIPTED:
            raise StrategySyntaxError(line, f"unknown scripted strategy {name!r}")
        types = SCRIPTED[name].param_types
        raw = tokens[2:]
        if len(raw) > len(types):
            raise StrategySyntaxError(line, f"{name} takes at most {len(types)} parameter(s)")
        params = tuple(_number(t, line) if typ is float else t for t, typ in zip(raw, types))
        return Scripted(name, params)
    raise StrategySyntaxError(line, f"unknown strategy kind {tokens[0]!r}")


def parse_strategy(text: str, name: str = "", first_line: int = 1) -> StrategySpec:
    """Parse one strategy description into a spec called ``name``."""
    directives = _directives(text, first_line)
    if not directives:
        raise StrategySyntaxError(first_line, "empty strategy")
    line, head = directives[0]
    try:
        if head.split()[0].lower() == "fsm":
            rule = _parse_fsm(directives)
        else:
            if len(directives) > 1:
                raise StrategySyntaxError(directives[1][0], f"unexpected directive {directives[1][1]!r}")
            rule = _parse_single(line, head)
        return StrategySpec(name or head.split()[0], rule)
    except StrategySyntaxError:
        raise
    except StrategyError as exc:
        raise StrategyError(f"line {line}: {exc}") from None


def _fmt(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def serialize_strategy(spec: StrategySpec, sep: str = "; ") -> str:
    rule = spec.rule
    if isinstance(rule, Scripted):
        return " ".join(["scripted", rule.name, *(_fmt(p) if isinstance(p, (int, float)) else p for p in rule.params)])
    if isinstance(rule, MemoryOneSpec):
        return " ".join(["memone", "1" if rule.initial == Action.C else "0", *map(_fmt, rule.four_vector)])
    if isinstance(rule, LookupSpec):
        opening = "".join(a.name for a in rule.opening)
        return " ".join(["lookup", str(rule.first_k), str(rule.depth), opening, *map(_fmt, rule.table)])
    if isinstance(rule, FsmSpec):
        parts = [f"fsm {rule.num_states}", f"start {rule.initial_state} {rule.initial_action.name}"]
        for s in range(rule.num_states):
            for a in (Action.C, Action.D):
                nxt, act = rule.transitions[s][a]
                parts.append(f"{s} {a.name} -> {nxt} {act.name}")
        return sep.join(parts)
    raise StrategyError(f"cannot serialize {rule!r}")


def parse_roster(text: str) -> list[StrategySpec]:
    roster = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _ROSTER_LINE.match(line)
        if not m:
            raise StrategySyntaxError(number, 'expected \'"<display name>" = <strategy>\'')
        name = m.group(1).replace('\\"', '"')
        roster.append(parse_strategy(m.group(2), name, first_line=number))
    roster_by_name(roster)
    return roster


def serialize_roster(roster: Iterable[StrategySpec]) -> str:
    lines = []
    for spec in roster:
        name = spec.name.replace('"', '\\"')
        lines.append(f'"{name}" = {serialize_strategy(spec)}')
    return "\n".join(lines) + "\n"
