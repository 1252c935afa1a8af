"""Interaction protocols: an update map on the two inputs and an output map.

A protocol run starts from the human and AI inputs, applies the update map
``rounds`` times (the identity for selector protocols) and then forms the team
output from the updated pair. Every run is charged
``base_cost + rounds_used * per_round_cost`` cost units.

The oracle selector reads the ground truth. It is an analysis device that
bounds what any selector could achieve, not a protocol anyone could deploy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .core import TaskSpec, Value


class ProtocolKind(str, Enum):
    SELF_RELIANCE = "self-reliance"
    AI_RELIANCE = "ai-reliance"
    ORACLE_SELECTOR = "oracle-selector"
    THRESHOLD_SELECTOR = "threshold-selector"
    AVERAGING = "averaging"
    ITERATIVE_DELIBERATION = "iterative-deliberation"


SELECTOR_KINDS = frozenset(
    {
        ProtocolKind.SELF_RELIANCE,
        ProtocolKind.AI_RELIANCE,
        ProtocolKind.ORACLE_SELECTOR,
        ProtocolKind.THRESHOLD_SELECTOR,
    }
)
REAL_ONLY_KINDS = frozenset({ProtocolKind.AVERAGING, ProtocolKind.ITERATIVE_DELIBERATION})


class ProtocolError(ValueError):
    pass


def _finite(value: float) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


@dataclass(frozen=True)
class ProtocolSpec:
    """Protocol parameters.

    Only the parameters of the chosen ``kind`` are meaningful: ``threshold``
    for the threshold selector, ``weight_human`` for averaging, ``rounds`` and
    ``step`` for iterative deliberation.
    """

    protocol_id: str
    kind: ProtocolKind
    threshold: float = 0.0
    weight_human: float = 0.5
    rounds: int = 0
    step: float = 0.5
    per_round_cost: float = 0.0
    base_cost: float = 0.0

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "kind", ProtocolKind(self.kind))
        except ValueError:
            raise ProtocolError(f"kind: unknown protocol kind {self.kind!r}") from None
        if not self.protocol_id:
            raise ProtocolError("protocol_id: must be non-empty")
        for name in ("threshold", "weight_human", "step", "per_round_cost", "base_cost"):
            if not _finite(getattr(self, name)):
                raise ProtocolError(f"{name}: must be a finite number")
        if self.per_round_cost < 0:
            raise ProtocolError("per_round_cost: must be >= 0")
        if self.base_cost < 0:
            raise ProtocolError("base_cost: must be >= 0")
        if self.threshold < 0:
            raise ProtocolError("threshold: must be >= 0")
        if not 0.0 <= self.weight_human <= 1.0:
            raise ProtocolError("weight_human: must lie in [0, 1]")
        if isinstance(self.rounds, bool) or not isinstance(self.rounds, int) or self.rounds < 0:
            raise ProtocolError("rounds: must be a non-negative integer")
        if self.kind is ProtocolKind.ITERATIVE_DELIBERATION:
            if not 0.0 < self.step <= 1.0:
                raise ProtocolError("step: must lie in (0, 1]")
        elif self.rounds != 0:
            raise ProtocolError(f"rounds: {self.kind.value} protocols use no update rounds")

    @property
    def is_trivial(self) -> bool:
        return is_trivial(self)

    def cost(self, rounds_used: int) -> float:
        return self.base_cost + rounds_used * self.per_round_cost


@dataclass(frozen=True)
class ProtocolOutcome:
    y_team: Value
    rounds_used: int
    cost_incurred: float
    trace: tuple[tuple[Value, Value], ...]


def is_trivial(spec: ProtocolSpec) -> bool:
    """Selector protocols leave the inputs untouched and pick one of them."""
    return spec.kind in SELECTOR_KINDS


def _clamp(value: float, a: float, b: float) -> float:
    lo, hi = (a, b) if a <= b else (b, a)
    return min(max(value, lo), hi)


def run_protocol(
    spec: ProtocolSpec,
    y_human: Value,
    y_ai: Value,
    task: TaskSpec,
    y_true: Optional[Value] = None,
) -> ProtocolOutcome:
    """Execute one protocol on a single instance."""
    kind = spec.kind
    if kind in REAL_ONLY_KINDS and task.output_kind.is_discrete:
        raise ProtocolError("protocol requires real-scalar outputs")
    for name, value in (("y_human", y_human), ("y_ai", y_ai)):
        if not task.conforms(value):
            raise ProtocolError(f"{name}={value!r} is not a {task.output_kind.value} value")

    trace: list[tuple[Value, Value]] = [(y_human, y_ai)]

    if kind is ProtocolKind.SELF_RELIANCE:
        team = y_human
    elif kind is ProtocolKind.AI_RELIANCE:
        team = y_ai
    elif kind is ProtocolKind.ORACLE_SELECTOR:
        if y_true is None:
            raise ProtocolError("oracle requires ground truth")
        # Ties keep the human's prediction.
        team = y_ai if task.loss(y_ai, y_true) < task.loss(y_human, y_true) else y_human
    elif kind is ProtocolKind.THRESHOLD_SELECTOR:
        if task.output_kind.is_discrete:
            agree = y_human == y_ai
        else:
            agree = abs(y_human - y_ai) <= spec.threshold  # type: ignore[operator]
        team = y_ai if agree else y_human
    elif kind is ProtocolKind.AVERAGING:
        w = spec.weight_human
        team = _clamp(w * y_human + (1.0 - w) * y_ai, y_human, y_ai)  # type: ignore[operator]
    else:
        h, a = float(y_human), float(y_ai)
        s = spec.step
        for _ in range(spec.rounds):
            mid = 0.5 * h + 0.5 * a
            # Convex combination toward the shared midpoint; step=1 lands on it.
            h = _clamp((1.0 - s) * h + s * mid, h, mid)
            a = _clamp((1.0 - s) * a + s * mid, a, mid)
            trace.append((h, a))
        team = _clamp(0.5 * h + 0.5 * a, h, a)

    rounds_used = len(trace) - 1
    return ProtocolOutcome(
        y_team=team,
        rounds_used=rounds_used,
        cost_incurred=spec.cost(rounds_used),
        trace=tuple(trace),
    )
