"""Domain types shared by every module.

Everything here is an immutable value. Construction of a :class:`TaskSpec`
checks its own invariants; records and episode logs are validated separately
by :func:`validate_episode` so that malformed data can be inspected instead of
rejected at the door.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Optional, Union


class EvaluationError(ValueError):
    """Raised when an episode cannot be scored."""


# A prediction value is either a real number (real-scalar tasks) or a label.
Value = Union[float, str]


class OutputKind(str, Enum):
    REAL_SCALAR = "real-scalar"
    CATEGORICAL = "categorical"
    BINARY = "binary"

    @property
    def is_discrete(self) -> bool:
        return self is not OutputKind.REAL_SCALAR


class LossKind(str, Enum):
    """Pointwise loss on the output space."""

    SQUARED_ERROR = "squared-error"
    ABSOLUTE_ERROR = "absolute-error"
    ZERO_ONE = "zero-one"

    def compatible_with(self, kind: OutputKind) -> bool:
        if self is LossKind.ZERO_ONE:
            return kind.is_discrete
        return kind is OutputKind.REAL_SCALAR

    def pointwise(self, predicted: Value, truth: Value) -> float:
        if self is LossKind.ZERO_ONE:
            return 0.0 if predicted == truth else 1.0
        diff = predicted - truth  # type: ignore[operator]
        if self is LossKind.SQUARED_ERROR:
            return diff * diff
        return abs(diff)


class RelianceVerdict(str, Enum):
    APPROPRIATE_SELF_RELIANCE = "appropriate-self-reliance"
    APPROPRIATE_AI_RELIANCE = "appropriate-ai-reliance"
    INAPPROPRIATE_SELF_RELIANCE = "inappropriate-self-reliance"
    INAPPROPRIATE_AI_RELIANCE = "inappropriate-ai-reliance"
    BOTH_CORRECT_SELECTION = "both-correct-selection"
    BOTH_WRONG_SELECTION = "both-wrong-selection"
    NON_RELIANCE_OUTPUT = "non-reliance-output"


class Efficiency(str, Enum):
    EFFICIENT = "efficient"
    INEFFICIENT = "inefficient"
    UNDEFINED_ZERO_COST = "undefined-zero-cost"


@dataclass(frozen=True)
class TaskSpec:
    """A prediction task: output space and pointwise loss.

    Binary tasks are categorical tasks with exactly two labels. Inputs are
    never modelled; records carry opaque instance ids instead.
    """

    task_id: str
    output_kind: OutputKind
    loss_kind: LossKind
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "output_kind", OutputKind(self.output_kind))
        object.__setattr__(self, "loss_kind", LossKind(self.loss_kind))
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.loss_kind.compatible_with(self.output_kind):
            raise ValueError(
                f"incompatible loss: {self.loss_kind.value} cannot score "
                f"{self.output_kind.value} outputs"
            )
        if self.output_kind.is_discrete:
            if not self.labels:
                raise ValueError("categorical tasks need a non-empty label set")
            if len(set(self.labels)) != len(self.labels):
                raise ValueError("label set contains duplicates")
            if self.output_kind is OutputKind.BINARY and len(self.labels) != 2:
                raise ValueError("binary tasks need exactly two labels")
            for label in self.labels:
                if not isinstance(label, str) or not label or label != label.strip():
                    raise ValueError(f"invalid label {label!r}")
        elif self.labels:
            raise ValueError("real-scalar tasks carry no label set")

    def loss(self, predicted: Value, truth: Value) -> float:
        return self.loss_kind.pointwise(predicted, truth)

    def conforms(self, value: object) -> bool:
        """True when ``value`` belongs to this task's output space."""
        if self.output_kind.is_discrete:
            return isinstance(value, str) and value in self.labels
        return (
            isinstance(value, (int, float))
            and not isinstance(value, bool)
            and math.isfinite(value)
        )


@dataclass(frozen=True)
class InteractionRecord:
    instance_id: str
    y_true: Value
    y_human: Value
    y_ai: Value
    y_team: Value
    cost: float = 0.0
    timestamp: Optional[str] = None
    rounds: Optional[int] = None

    PREDICTION_FIELDS = ("y_true", "y_human", "y_ai", "y_team")


@dataclass(frozen=True)
class EpisodeLog:
    """One dataset evaluated under one protocol."""

    episode_id: str
    task: TaskSpec
    protocol_id: str
    cost_unit: str
    records: tuple[InteractionRecord, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    @property
    def total_cost(self) -> float:
        return math.fsum(r.cost for r in self.records)


@dataclass(frozen=True)
class GainReport:
    episode_id: str
    n: int
    loss_human: float
    loss_ai: float
    loss_team: float
    ctp: int
    gross_gain: float
    total_cost: float
    lambda_: float
    net_gain: float
    efficient: Efficiency

    @property
    def efficiency_ratio(self) -> Optional[float]:
        """Gross gain per cost unit, or None when no cost was recorded."""
        if self.total_cost == 0:
            return None
        return self.gross_gain / self.total_cost


@dataclass(frozen=True)
class Violation:
    instance_id: Optional[str]
    field: str
    message: str

    def __str__(self) -> str:
        where = f"record {self.instance_id!r}" if self.instance_id is not None else "episode"
        return f"{where}: {self.field}: {self.message}"


def _valid_timestamp(text: str) -> bool:
    try:
        datetime.fromisoformat(text[:-1] + "+00:00" if text.endswith("Z") else text)
    except ValueError:
        return False
    return True


def validate_episode(log: EpisodeLog) -> list[Violation]:
    """Return every invariant violation in ``log``; an empty list means valid."""
    violations: list[Violation] = []
    if not log.episode_id:
        violations.append(Violation(None, "episode_id", "must be non-empty"))
    if not log.records:
        violations.append(Violation(None, "records", "empty dataset"))

    seen: set[str] = set()
    reported: set[str] = set()
    for rec in log.records:
        rid = rec.instance_id
        if not isinstance(rid, str) or not rid:
            violations.append(Violation(rid, "instance_id", "must be a non-empty string"))
        elif rid in seen and rid not in reported:
            violations.append(Violation(rid, "instance_id", "duplicate instance_id"))
            reported.add(rid)
        seen.add(rid)

        for name in InteractionRecord.PREDICTION_FIELDS:
            value = getattr(rec, name)
            if not log.task.conforms(value):
                violations.append(
                    Violation(rid, name, f"{value!r} is not a {log.task.output_kind.value} value")
                )

        cost = rec.cost
        if isinstance(cost, bool) or not isinstance(cost, (int, float)) or not math.isfinite(cost):
            violations.append(Violation(rid, "cost", f"{cost!r} is not a finite number"))
        elif cost < 0:
            violations.append(Violation(rid, "cost", f"negative cost {cost!r}"))

        if rec.timestamp is not None and not (
            isinstance(rec.timestamp, str) and _valid_timestamp(rec.timestamp)
        ):
            violations.append(Violation(rid, "timestamp", f"{rec.timestamp!r} is not ISO-8601"))
        if rec.rounds is not None and (
            isinstance(rec.rounds, bool) or not isinstance(rec.rounds, int) or rec.rounds < 0
        ):
            violations.append(Violation(rid, "rounds", f"{rec.rounds!r} is not a non-negative integer"))
    return violations
