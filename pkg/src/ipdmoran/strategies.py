"""Strategy representations and their execution.

Four kinds of rule are supported: scripted classics looked up by name,
memory-one four-vectors, finite state machines driven by the opponent's last
move, and lookup tables keyed on the opponent's opening and the trailing
rounds of both players.

A :class:`StrategySpec` is an immutable description. Executing one inside a
match goes through a :class:`Player`, which owns the per-match state (the FSM
state, running counters) and is discarded when the match ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Callable, Iterable, Mapping, Protocol, Sequence, Union

from .game import Action, C, D


class RandomSource(Protocol):
    def random(self) -> float: ...


class StrategyError(ValueError):
    """An ill-formed strategy description."""


@dataclass
class History:
    """Executed actions of one match, seen from one player's side."""

    own: list[Action] = field(default_factory=list)
    opp: list[Action] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.own) != len(self.opp):
            raise ValueError("own and opponent histories must have equal length")

    def append(self, own: Action, opp: Action) -> None:
        self.own.append(own)
        self.opp.append(opp)

    def __len__(self) -> int:
        return len(self.own)

    def swapped(self) -> "History":
        return History(list(self.opp), list(self.own))


# --------------------------------------------------------------------------
# rule descriptions


@dataclass(frozen=True)
class Scripted:
    name: str
    params: tuple = ()


@dataclass(frozen=True)
class MemoryOneSpec:
    """Cooperation probabilities after each (own, opponent) outcome."""

    initial: Action
    p_cc: float
    p_cd: float
    p_dc: float
    p_dd: float

    def __post_init__(self) -> None:
        for p in self.four_vector:
            if not 0.0 <= p <= 1.0:
                raise StrategyError(f"memory-one probability {p} outside [0, 1]")

    @property
    def four_vector(self) -> tuple[float, float, float, float]:
        return (self.p_cc, self.p_cd, self.p_dc, self.p_dd)

    @property
    def deterministic(self) -> bool:
        return all(p in (0, 1) for p in self.four_vector)

    def probability(self, own: Action, opp: Action) -> float:
        return self.four_vector[2 * (own == D) + (opp == D)]


@dataclass(frozen=True)
class FsmSpec:
    """Finite state machine reading the opponent's last action.

    ``transitions[state][opp_action]`` is ``(next_state, own_action)``, with
    the inner index being ``int(Action)`` (``D`` is 0, ``C`` is 1).
    """

    num_states: int
    initial_state: int
    initial_action: Action
    transitions: tuple[tuple[tuple[int, Action], tuple[int, Action]], ...]

    def __post_init__(self) -> None:
        if self.num_states < 1:
            raise StrategyError("an FSM needs at least one state")
        if not 0 <= self.initial_state < self.num_states:
            raise StrategyError(f"initial state {self.initial_state} out of range")
        if len(self.transitions) != self.num_states or any(len(row) != 2 for row in self.transitions):
            raise StrategyError("non-total transition table")
        for row in self.transitions:
            for nxt, act in row:
                if not 0 <= nxt < self.num_states:
                    raise StrategyError(f"next state {nxt} out of range")
                if not isinstance(act, Action):
                    raise StrategyError(f"transition action {act!r} is not an Action")

    @classmethod
    def from_table(
        cls,
        num_states: int,
        initial_state: int,
        initial_action: Action,
        table: Mapping[tuple[int, Action], tuple[int, Action]],
    ) -> "FsmSpec":
        """Build from a ``(state, opp_action) -> (next_state, action)`` mapping."""
        missing = [(s, a) for s in range(num_states) for a in (C, D) if (s, a) not in table]
        if missing:
            shown = ", ".join(f"{s} {a}" for s, a in missing[:4])
            raise StrategyError(f"non-total transition table (missing {shown})")
        extra = [k for k in table if not (0 <= k[0] < num_states)]
        if extra:
            raise StrategyError(f"transition from unknown state {extra[0][0]}")
        rows = tuple(
            ((table[(s, D)][0], Action(table[(s, D)][1])), (table[(s, C)][0], Action(table[(s, C)][1])))
            for s in range(num_states)
        )
        return cls(num_states, initial_state, Action(initial_action), rows)

    def table(self) -> dict[tuple[int, Action], tuple[int, Action]]:
        return {
            (s, a): self.transitions[s][a] for s in range(self.num_states) for a in (C, D)
        }

    def reachable_states(self) -> set[int]:
        seen = {self.initial_state}
        frontier = [self.initial_state]
        while frontier:
            s = frontier.pop()
            for nxt, _ in self.transitions[s]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return seen


@dataclass(frozen=True)
class LookupSpec:
    """Lookup table strategy.

    The key is a bit string, ``C`` = 1 and ``D`` = 0, made of the opponent's
    first ``first_k`` moves, then the player's own last ``depth`` moves, then
    the opponent's last ``depth`` moves; within each block the oldest move
    comes first. The first bit is the most significant. ``table[key]`` is the
    probability of cooperating. Until ``max(first_k, depth)`` rounds have been
    played the player follows ``opening``.
    """

    first_k: int
    depth: int
    table: tuple[float, ...]
    opening: tuple[Action, ...]

    def __post_init__(self) -> None:
        if self.first_k < 0 or self.depth < 1:
            raise StrategyError("lookup needs first_k >= 0 and depth >= 1")
        if len(self.table) != 2 ** (self.first_k + 2 * self.depth):
            raise StrategyError(
                f"lookup table must have {2 ** (self.first_k + 2 * self.depth)} entries, got {len(self.table)}"
            )
        if len(self.opening) != max(self.first_k, self.depth):
            raise StrategyError(f"lookup opening must have length {max(self.first_k, self.depth)}")
        if any(not 0.0 <= p <= 1.0 for p in self.table):
            raise StrategyError("lookup probabilities must lie in [0, 1]")

    @property
    def deterministic(self) -> bool:
        return all(p in (0, 1) for p in self.table)

    def key(self, own: Sequence[Action], opp: Sequence[Action]) -> int:
        bits = list(opp[: self.first_k]) + list(own[-self.depth :]) + list(opp[-self.depth :])
        k = 0
        for b in bits:
            k = (k << 1) | int(b)
        return k


Rule = Union[Scripted, MemoryOneSpec, FsmSpec, LookupSpec]


@dataclass(frozen=True)
class StrategySpec:
    name: str
    rule: Rule

    def __post_init__(self) -> None:
        if isinstance(self.rule, Scripted):
            _scripted_def(self.rule)  # validates the name and parameters

    @property
    def stochastic(self) -> bool:
        rule = self.rule
        if isinstance(rule, Scripted):
            return _scripted_def(rule).stochastic(rule.params)
        if isinstance(rule, (MemoryOneSpec, LookupSpec)):
            return not rule.deterministic
        return False

    def relabel(self, name: str) -> "StrategySpec":
        return replace(self, name=name)

    def player(self) -> "Player":
        rule = self.rule
        if isinstance(rule, Scripted):
            return _scripted_def(rule).factory(*rule.params)
        if isinstance(rule, MemoryOneSpec):
            return MemoryOnePlayer(rule)
        if isinstance(rule, FsmSpec):
            return FsmPlayer(rule)
        if isinstance(rule, LookupSpec):
            return LookupPlayer(rule)
        raise StrategyError(f"unknown rule {rule!r}")


# --------------------------------------------------------------------------
# players


class Player:
    """Per-match executor of a strategy.

    ``act`` folds any history entries it has not yet seen into the player's
    state, so a fresh player given a long history replays it from the start.
    """

    def __init__(self) -> None:
        self._seen = 0

    def act(self, h: History, rng: RandomSource | None = None) -> Action:
        own, opp = h.own, h.opp
        n = len(opp)
        if n < self._seen:
            raise ValueError("history shrank during a match")
        while self._seen < n:
            self.observe(own[self._seen], opp[self._seen])
            self._seen += 1
        return self.decide(n, rng)

    def observe(self, own: Action, opp: Action) -> None:
        pass

    def decide(self, turn: int, rng: RandomSource | None) -> Action:
        raise NotImplementedError


def _bernoulli(p: float, rng: RandomSource | None) -> Action:
    if p >= 1:
        return C
    if p <= 0:
        return D
    return C if rng.random() < p else D


class Constant(Player):
    def __init__(self, action: Action) -> None:
        super().__init__()
        self.action = action

    def decide(self, turn, rng):
        return self.action


class Cycler(Player):
    def __init__(self, pattern: str = "CD") -> None:
        super().__init__()
        self.pattern = [Action.from_char(c) for c in pattern]

    def decide(self, turn, rng):
        return self.pattern[turn % len(self.pattern)]


class TitForTat(Player):
    def __init__(self, opening: Action = C) -> None:
        super().__init__()
        self.last = opening

    def observe(self, own, opp):
        self.last = opp

    def decide(self, turn, rng):
        return self.last


class TitForTwoTats(Player):
    def __init__(self) -> None:
        super().__init__()
        self.recent = (C, C)

    def observe(self, own, opp):
        self.recent = (self.recent[1], opp)

    def decide(self, turn, rng):
        return D if self.recent == (D, D) else C


class WinStayLoseShift(Player):
    def __init__(self) -> None:
        super().__init__()
        self.next = C

    def observe(self, own, opp):
        self.next = C if own == opp else D

    def decide(self, turn, rng):
        return self.next


class RandomPlayer(Player):
    def __init__(self, p: float = 0.5) -> None:
        super().__init__()
        self.p = p

    def decide(self, turn, rng):
        return _bernoulli(self.p, rng)


class Grudger(Player):
    """Cooperates until the opponent's defections exceed ``tolerance``."""

    def __init__(self, tolerance: int = 0, opening: Sequence[Action] = ()) -> None:
        super().__init__()
        self.tolerance = tolerance
        self.opening = tuple(opening)
        self.defections = 0

    def observe(self, own, opp):
        self.defections += opp == D

    def decide(self, turn, rng):
        if turn < len(self.opening):
            return self.opening[turn]
        return D if self.defections > self.tolerance else C


class GoByMajority(Player):
    def __init__(self) -> None:
        super().__init__()
        self.balance = 0

    def observe(self, own, opp):
        self.balance += 1 if opp == C else -1

    def decide(self, turn, rng):
        return C if self.balance >= 0 else D


class HandshakePlayer(Player):
    """Plays ``handshake``, then judges the opponent's opening.

    With ``forgiving`` the verdict is permanent once the opponent matched the
    handshake. Otherwise any later defection by the opponent ends cooperation
    for good.
    """

    def __init__(self, handshake: str = "CD", forgiving: bool = True) -> None:
        super().__init__()
        self.handshake = [Action.from_char(c) for c in handshake]
        self.forgiving = forgiving
        self.opening: list[Action] = []
        self.later_defection = False

    def observe(self, own, opp):
        if len(self.opening) < len(self.handshake):
            self.opening.append(opp)
        elif opp == D:
            self.later_defection = True

    def decide(self, turn, rng):
        if turn < len(self.handshake):
            return self.handshake[turn]
        if self.opening != self.handshake:
            return D
        if not self.forgiving and self.later_defection:
            return D
        return C


class MemoryOnePlayer(Player):
    def __init__(self, spec: MemoryOneSpec) -> None:
        super().__init__()
        self.spec = spec
        self.last: tuple[Action, Action] | None = None

    def observe(self, own, opp):
        self.last = (own, opp)

    def decide(self, turn, rng):
        if self.last is None:
            return self.spec.initial
        return _bernoulli(self.spec.probability(*self.last), rng)


class FsmPlayer(Player):
    def __init__(self, spec: FsmSpec) -> None:
        super().__init__()
        self.spec = spec
        self.state = spec.initial_state
        self.next = spec.initial_action

    def observe(self, own, opp):
        self.state, self.next = self.spec.transitions[self.state][opp]

    def decide(self, turn, rng):
        return self.next


class LookupPlayer(Player):
    def __init__(self, spec: LookupSpec) -> None:
        super().__init__()
        self.spec = spec
        self.own: list[Action] = []
        self.opp: list[Action] = []

    def observe(self, own, opp):
        self.own.append(own)
        self.opp.append(opp)

    def decide(self, turn, rng):
        spec = self.spec
        if turn < len(spec.opening):
            return spec.opening[turn]
        return _bernoulli(spec.table[spec.key(self.own, self.opp)], rng)


# --------------------------------------------------------------------------
# scripted registry


@dataclass(frozen=True)
class ScriptedDef:
    factory: Callable[..., Player]
    param_types: tuple[type, ...] = ()
    stochastic: Callable[[tuple], bool] = lambda params: False
    doc: str = ""


def _random_is_stochastic(params: tuple) -> bool:
    p = params[0] if params else 0.5
    return 0 < p < 1


SCRIPTED: dict[str, ScriptedDef] = {
    "Cooperator": ScriptedDef(lambda: Constant(C), doc="Always cooperates."),
    "Defector": ScriptedDef(lambda: Constant(D), doc="Always defects."),
    "Alternator": ScriptedDef(lambda: Cycler("CD"), doc="Plays C, D, C, D, ..."),
    "Cycler": ScriptedDef(lambda pattern="CCD": Cycler(pattern), (str,), doc="Repeats a fixed pattern."),
    "TitForTat": ScriptedDef(TitForTat, doc="Cooperates first, then copies the opponent's last move."),
    "SuspiciousTitForTat": ScriptedDef(lambda: TitForTat(D), doc="Tit for tat opening with D."),
    "TitForTwoTats": ScriptedDef(TitForTwoTats, doc="Defects only after two consecutive opponent defections."),
    "WinStayLoseShift": ScriptedDef(
        WinStayLoseShift, doc="Repeats its move after R or T, switches after S or P."
    ),
    "Random": ScriptedDef(
        lambda p=0.5: RandomPlayer(p), (float,), _random_is_stochastic, "Cooperates with probability p."
    ),
    "Grudger": ScriptedDef(lambda: Grudger(0), doc="Defects forever once the opponent defects."),
    "FoolMeOnce": ScriptedDef(
        lambda: Grudger(1), doc="Cooperates until the opponent has defected twice, then defects forever."
    ),
    "Aggravater": ScriptedDef(
        lambda: Grudger(0, (D, D, D)), doc="Opens with three defections, then plays Grudger."
    ),
    "GoByMajority": ScriptedDef(
        GoByMajority, doc="Cooperates while the opponent has cooperated at least as often as defected."
    ),
    "Handshake": ScriptedDef(
        lambda handshake="CD": HandshakePlayer(handshake, forgiving=True),
        (str,),
        doc="Plays the handshake; cooperates forever if the opponent opened the same way, else defects.",
    ),
    "CollectiveStrategy": ScriptedDef(
        lambda handshake="CD": HandshakePlayer(handshake, forgiving=False),
        (str,),
        doc="Handshake of CD; cooperates with matching opponents until their first later defection.",
    ),
}


def _scripted_def(rule: Scripted) -> ScriptedDef:
    try:
        d = SCRIPTED[rule.name]
    except KeyError:
        raise StrategyError(f"unknown scripted strategy {rule.name!r}") from None
    if len(rule.params) > len(d.param_types):
        raise StrategyError(f"{rule.name} takes at most {len(d.param_types)} parameter(s)")
    for value, typ in zip(rule.params, d.param_types):
        if not isinstance(value, typ) and not (typ is float and isinstance(value, int)):
            raise StrategyError(f"{rule.name}: parameter {value!r} should be {typ.__name__}")
    if rule.name == "Random" and rule.params and not 0 <= rule.params[0] <= 1:
        raise StrategyError("Random: p must lie in [0, 1]")
    return d


# --------------------------------------------------------------------------
# operations


def next_action(spec: StrategySpec, h: History, rng: RandomSource | None = None) -> Action:
    """Action ``spec`` takes after history ``h``.

    ``rng`` is only consulted by stochastic strategies and may be None for
    deterministic ones.
    """
    return spec.player().act(h, rng)


def fsm_step(spec: FsmSpec, current_state: int, opp_last: Action) -> tuple[int, Action]:
    if not 0 <= current_state < spec.num_states:
        raise StrategyError(f"state {current_state} out of range")
    return spec.transitions[current_state][opp_last]


def builtin_roster() -> list[StrategySpec]:
    """The default roster shipped as ``data/default_roster.txt``."""
    from .strategy_io import parse_roster

    text = resources.files("ipdmoran").joinpath("data/default_roster.txt").read_text("utf-8")
    return parse_roster(text)


def roster_by_name(roster: Iterable[StrategySpec]) -> dict[str, StrategySpec]:
    out: dict[str, StrategySpec] = {}
    for s in roster:
        if s.name in out:
            raise StrategyError(f"duplicate strategy name {s.name!r}")
        out[s.name] = s
    return out
