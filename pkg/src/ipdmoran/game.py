"""Actions, the prisoner's dilemma payoff matrix and single-round scoring."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum


class Action(IntEnum):
    """A move in the one-shot game. ``D < C`` fixes a serialization order."""

    D = 0
    C = 1

    def flip(self) -> "Action":
        return Action.C if self is Action.D else Action.D

    def __str__(self) -> str:
        return self.name

    @classmethod
    def from_char(cls, char: str) -> "Action":
        try:
            return cls[char.strip().upper()]
        except KeyError:
            raise ValueError(f"not an action: {char!r}") from None


C = Action.C
D = Action.D


class PayoffConstraintError(ValueError):
    """Raised when a payoff matrix is not a prisoner's dilemma."""


@dataclass(frozen=True)
class PayoffMatrix:
    R: float = 3
    S: float = 0
    T: float = 5
    P: float = 1

    @classmethod
    def parse(cls, text: str) -> "PayoffMatrix":
        """Parse ``"R,S,T,P"``."""
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 4:
            raise ValueError(f"expected four comma separated numbers R,S,T,P, got {text!r}")
        values = [int(p) if p.lstrip("-").isdigit() else float(p) for p in parts]
        return cls(*values)

    def __str__(self) -> str:
        return f"{self.R},{self.S},{self.T},{self.P}"

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.R, self.S, self.T, self.P)


DEFAULT_MATRIX = PayoffMatrix(3, 0, 5, 1)


def validate_matrix(m: PayoffMatrix) -> PayoffMatrix:
    """Return ``m`` unchanged if it satisfies ``T > R > P > S`` and ``2R > T + S``.

    Raises
    ------
    PayoffConstraintError
        Naming the first inequality that fails.
    """
    for name, value in zip("RSTP", m.as_tuple()):
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise PayoffConstraintError(f"payoff {name}={value!r} is not a finite number")
    if not (m.T > m.R > m.P > m.S):
        raise PayoffConstraintError("T > R > P > S violated")
    if not (2 * m.R > m.T + m.S):
        raise PayoffConstraintError("2R > T + S violated")
    return m


def score_round(a1: Action, a2: Action, m: PayoffMatrix = DEFAULT_MATRIX) -> tuple[float, float]:
    if a1 == C:
        return (m.R, m.R) if a2 == C else (m.S, m.T)
    return (m.T, m.S) if a2 == C else (m.P, m.P)
