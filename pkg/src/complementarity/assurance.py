"""Minimal assurance checklist for prediction-task human-AI interactions.

The checklist has eleven fixed items, each tagged with the reliability
indicator families it informs:

* RI1 - technical performance and operational behaviour of the interaction,
* RI2 - fit between the operationalised target and the scientific concept,
* RI3 - social and institutional stabilisation (training, governance, audit).

Four items are filled automatically from episode metrics; the other seven are
free text supplied by whoever signs off on the deployment. Tags are labels
only: nothing here folds them into a reliability score.
"""

from __future__ import annotations

import dataclasses
import json
import math
import statistics
import textwrap
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Optional, Sequence, Union

from . import __version__
from .core import Efficiency, EpisodeLog, GainReport, LossKind, OutputKind, TaskSpec
from .metrics import (
    BootstrapInterval,
    BootstrapStatistic,
    LossSummary,
    StabilityProfile,
    aggregate_losses,
    bootstrap_gain,
    check_homogeneous,
    evaluate_episode,
    stability_profile,
)

SCHEMA_ID = "complementarity.assurance-report/1"


class RICategory(str, Enum):
    RI1 = "RI1"
    RI2 = "RI2"
    RI3 = "RI3"


class ItemStatus(str, Enum):
    COMPLETE = "complete"
    MISSING = "missing"
    INVALID = "invalid"


@dataclass(frozen=True)
class ItemDefinition:
    item_id: str
    title: str
    ri_tags: frozenset[RICategory]
    requirement: str
    quantitative: bool = False


def _tags(*names: str) -> frozenset[RICategory]:
    return frozenset(RICategory(n) for n in names)


LAMBDA_REQUIREMENT = "how λ is justified"

CHECKLIST: tuple[ItemDefinition, ...] = (
    ItemDefinition(
        "ai-scope",
        "AI scope and conditions of use",
        _tags("RI2", "RI3"),
        "intended use; cases in and out of scope; environmental assumptions; "
        "boundary conditions that trigger abstention or escalation",
    ),
    ItemDefinition(
        "protocol",
        "Protocol",
        _tags("RI1", "RI3"),
        "how AI outputs are consulted and integrated; disagreement handling; "
        "escalation and second review; how the team prediction is produced",
    ),
    ItemDefinition(
        "user-competence",
        "User competence",
        _tags("RI3"),
        "who is authorised; training content and cadence; competence checks; "
        "known failure modes covered",
    ),
    ItemDefinition(
        "performance",
        "Performance",
        _tags("RI1"),
        "human, AI and team losses (L_H, L_AI, L_HAI) or task-appropriate metrics",
        quantitative=True,
    ),
    ItemDefinition(
        "complementarity-evidence",
        "Complementarity evidence",
        _tags("RI1"),
        "CTP, gross gain and net gain, with magnitude and stability across time",
        quantitative=True,
    ),
    ItemDefinition(
        "interaction-cost",
        "Interaction cost",
        _tags("RI3"),
        "cost term c(D) with its definition and unit; cost categories and how "
        "costs are estimated",
        quantitative=True,
    ),
    ItemDefinition(
        "efficient-complementarity",
        "Efficient complementarity",
        _tags("RI1", "RI3"),
        "net gain and whether it is positive; efficiency ratio gain/c(D); the "
        f"institutional threshold λ and {LAMBDA_REQUIREMENT}",
        quantitative=True,
    ),
    ItemDefinition(
        "uncertainty-discipline",
        "Uncertainty discipline",
        _tags("RI1", "RI2"),
        "when predictive uncertainty triggers human review; how uncertainty is "
        "communicated and acted upon",
    ),
    ItemDefinition(
        "epistemic-validity",
        "Epistemic validity",
        _tags("RI2"),
        "why target, labels and features suit the decision purpose in its "
        "epistemic context",
    ),
    ItemDefinition(
        "update-drift",
        "Update and drift management",
        _tags("RI3"),
        "versioning; remodelling and evaluation triggers; change communication",
    ),
    ItemDefinition(
        "monitoring-accountability",
        "Monitoring and accountability",
        _tags("RI3"),
        "post-deployment tracking; incident reporting; auditing; responsibility "
        "assignment",
    ),
)

ITEM_IDS: tuple[str, ...] = tuple(d.item_id for d in CHECKLIST)
DEFINITIONS: dict[str, ItemDefinition] = {d.item_id: d for d in CHECKLIST}
NARRATIVE_ITEMS: tuple[str, ...] = tuple(d.item_id for d in CHECKLIST if not d.quantitative)
QUANTITATIVE_ITEMS: tuple[str, ...] = tuple(d.item_id for d in CHECKLIST if d.quantitative)
LAMBDA_JUSTIFICATION_KEY = "lambda-justification"


@dataclass(frozen=True)
class CostSummary:
    cost_unit: str
    total_cost: float
    episode_costs: tuple[float, ...]
    mean_cost_per_record: float


@dataclass(frozen=True)
class EfficiencySummary:
    lambda_: float
    episode_ids: tuple[str, ...]
    net_gains: tuple[float, ...]
    efficiency_ratios: tuple[Optional[float], ...]
    verdicts: tuple[Efficiency, ...]


Artifact = Union[GainReport, LossSummary, StabilityProfile, BootstrapInterval, CostSummary, EfficiencySummary]
_ARTIFACT_TYPES = {
    cls.__name__: cls
    for cls in (GainReport, LossSummary, StabilityProfile, BootstrapInterval, CostSummary, EfficiencySummary)
}
_ENUM_FIELDS = {"efficient": Efficiency, "statistic": BootstrapStatistic, "verdicts": Efficiency}


@dataclass(frozen=True)
class ChecklistItem:
    item_id: str
    ri_tags: frozenset[RICategory]
    status: ItemStatus
    text: str = ""
    artifacts: tuple[Artifact, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "ri_tags", frozenset(RICategory(t) for t in self.ri_tags))
        object.__setattr__(self, "status", ItemStatus(self.status))
        object.__setattr__(self, "artifacts", tuple(self.artifacts))


@dataclass(frozen=True)
class AssuranceReport:
    report_id: str
    task: TaskSpec
    protocol_id: str
    items: tuple[ChecklistItem, ...]
    lambda_: float
    lambda_justification: str
    created_at: Optional[str] = None
    toolkit_version: str = __version__
    extensions: tuple[ChecklistItem, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "extensions", tuple(self.extensions))

    def item(self, item_id: str) -> ChecklistItem:
        for it in self.items:
            if it.item_id == item_id:
                return it
        raise KeyError(item_id)

    @property
    def complete_count(self) -> int:
        return sum(it.status is ItemStatus.COMPLETE for it in self.items if it.item_id in DEFINITIONS)


@dataclass(frozen=True)
class Deficiency:
    item_id: str
    requirement: str
    problem: str

    def __str__(self) -> str:
        return f"{self.item_id}: {self.problem} (required: {self.requirement})"


def _pooled(logs: Sequence[EpisodeLog]) -> EpisodeLog:
    records = []
    for k, log in enumerate(logs):
        records.extend(dataclasses.replace(r, instance_id=f"{k}:{r.instance_id}") for r in log.records)
    first = logs[0]
    return EpisodeLog("pooled", first.task, first.protocol_id, first.cost_unit, tuple(records))


def build_report(
    logs: Sequence[EpisodeLog],
    lambda_: float,
    narrative_fields: Optional[Mapping[str, str]] = None,
    *,
    lambda_justification: str = "",
    report_id: Optional[str] = None,
    created_at: Optional[str] = None,
    bootstrap_resamples: Optional[int] = None,
    bootstrap_level: float = 0.95,
    seed: int = 0,
) -> AssuranceReport:
    """Assemble the checklist for a homogeneous study.

    ``narrative_fields`` maps item ids to free text. Text given for a
    quantitative item is kept as commentary next to the computed artifacts.
    The λ justification may be passed directly or under the
    ``"lambda-justification"`` key.
    """
    if not (isinstance(lambda_, (int, float)) and math.isfinite(lambda_) and lambda_ > 0):
        raise ValueError(f"invalid conversion rate: lambda must be > 0, got {lambda_!r}")
    check_homogeneous(logs)
    narrative = dict(narrative_fields or {})
    lambda_justification = lambda_justification or narrative.pop(LAMBDA_JUSTIFICATION_KEY, "")
    narrative.pop(LAMBDA_JUSTIFICATION_KEY, None)
    unknown = sorted(set(narrative) - set(ITEM_IDS))
    if unknown:
        raise ValueError(f"unknown checklist items in narrative: {', '.join(unknown)}")

    gains = [evaluate_episode(log, lambda_) for log in logs]
    pooled = _pooled(logs)
    stability = stability_profile(logs, lambda_)
    evidence: list[Artifact] = [*gains, stability]
    if bootstrap_resamples is not None and len(pooled.records) >= 2:
        evidence.append(
            bootstrap_gain(pooled, lambda_, resamples=bootstrap_resamples, level=bootstrap_level, seed=seed)
        )
    costs = tuple(g.total_cost for g in gains)
    n_records = sum(g.n for g in gains)
    artifacts: dict[str, tuple[Artifact, ...]] = {
        "performance": (aggregate_losses(pooled),),
        "complementarity-evidence": tuple(evidence),
        "interaction-cost": (
            CostSummary(
                cost_unit=logs[0].cost_unit,
                total_cost=math.fsum(costs),
                episode_costs=costs,
                mean_cost_per_record=math.fsum(costs) / n_records,
            ),
        ),
        "efficient-complementarity": (
            EfficiencySummary(
                lambda_=float(lambda_),
                episode_ids=tuple(g.episode_id for g in gains),
                net_gains=tuple(g.net_gain for g in gains),
                efficiency_ratios=tuple(g.efficiency_ratio for g in gains),
                verdicts=tuple(g.efficient for g in gains),
            ),
        ),
    }

    items = []
    for d in CHECKLIST:
        text = (narrative.get(d.item_id) or "").strip()
        found = artifacts.get(d.item_id, ())
        item = ChecklistItem(d.item_id, d.ri_tags, ItemStatus.COMPLETE, text, found)
        items.append(dataclasses.replace(item, status=_assess(item, lambda_, lambda_justification)[0]))

    first = logs[0]
    return AssuranceReport(
        report_id=report_id or f"{first.task.task_id}/{first.protocol_id}",
        task=first.task,
        protocol_id=first.protocol_id,
        items=tuple(items),
        lambda_=float(lambda_),
        lambda_justification=lambda_justification.strip(),
        created_at=created_at,
    )


def _assess(item: ChecklistItem, lambda_: float, justification: str) -> tuple[ItemStatus, str]:
    """Status an item deserves, with the reason when it is not complete."""
    d = DEFINITIONS[item.item_id]
    if not d.quantitative:
        if not item.text.strip():
            return ItemStatus.MISSING, "no documentation supplied"
        return ItemStatus.COMPLETE, ""
    if not item.artifacts:
        return ItemStatus.MISSING, "no computed evidence attached"
    if item.item_id == "interaction-cost":
        if not any(isinstance(a, CostSummary) and a.cost_unit.strip() for a in item.artifacts):
            return ItemStatus.INVALID, "cost unit is not declared"
    if item.item_id == "efficient-complementarity":
        if not (isinstance(lambda_, (int, float)) and math.isfinite(lambda_) and lambda_ > 0):
            return ItemStatus.INVALID, "λ must be a positive number"
        if not justification.strip():
            return ItemStatus.INVALID, f"missing {LAMBDA_REQUIREMENT}"
    return ItemStatus.COMPLETE, ""


def validate_report(report: AssuranceReport) -> list[Deficiency]:
    """One deficiency per checklist item that is absent, incomplete or inconsistent.

    Extension items are carried along but never validated.
    """
    by_id: dict[str, list[ChecklistItem]] = {}
    for item in report.items:
        by_id.setdefault(item.item_id, []).append(item)

    found = []
    for d in CHECKLIST:
        entries = by_id.get(d.item_id, [])
        if not entries:
            found.append(Deficiency(d.item_id, d.requirement, "item absent from report"))
            continue
        if len(entries) > 1:
            found.append(Deficiency(d.item_id, d.requirement, f"item appears {len(entries)} times"))
            continue
        item = entries[0]
        if item.ri_tags != d.ri_tags:
            tags = ",".join(sorted(t.value for t in item.ri_tags))
            found.append(Deficiency(d.item_id, d.requirement, f"RI tags {{{tags}}} do not match the checklist"))
            continue
        status, reason = _assess(item, report.lambda_, report.lambda_justification)
        if status is not ItemStatus.COMPLETE:
            found.append(Deficiency(d.item_id, d.requirement, reason))
        elif item.status is not ItemStatus.COMPLETE:
            found.append(Deficiency(d.item_id, d.requirement, f"marked {item.status.value}"))

    for item_id in by_id:
        if item_id not in DEFINITIONS:
            found.append(Deficiency(item_id, "", "not a checklist item; use extensions for extra items"))
    return found


# -- machine format ----------------------------------------------------------


def _encode(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("non-finite number in report")
        return value
    if isinstance(value, (tuple, list)):
        return [_encode(v) for v in value]
    if isinstance(value, frozenset):
        return sorted(_encode(v) for v in value)
    if dataclasses.is_dataclass(value):
        return {f.name: _encode(getattr(value, f.name)) for f in dataclasses.fields(value)}
    return value


def _encode_artifact(artifact: Artifact) -> dict:
    return {"type": type(artifact).__name__, "fields": _encode(artifact)}


def _encode_item(item: ChecklistItem) -> dict:
    return {
        "item_id": item.item_id,
        "ri_tags": _encode(item.ri_tags),
        "status": item.status.value,
        "text": item.text,
        "artifacts": [_encode_artifact(a) for a in item.artifacts],
    }


def report_to_dict(report: AssuranceReport) -> dict:
    return {
        "schema": SCHEMA_ID,
        "report_id": report.report_id,
        "task": {
            "task_id": report.task.task_id,
            "output_kind": report.task.output_kind.value,
            "loss_kind": report.task.loss_kind.value,
            "labels": list(report.task.labels),
        },
        "protocol_id": report.protocol_id,
        "lambda": report.lambda_,
        "lambda_justification": report.lambda_justification,
        "created_at": report.created_at,
        "toolkit_version": report.toolkit_version,
        "items": [_encode_item(i) for i in report.items],
        "extensions": [_encode_item(i) for i in report.extensions],
    }


def _decode_value(name: str, value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_decode_value(name, v) for v in value)
    if name in _ENUM_FIELDS and isinstance(value, str):
        return _ENUM_FIELDS[name](value)
    return value


def _decode_artifact(data: dict) -> Artifact:
    cls = _ARTIFACT_TYPES[data["type"]]
    fields = data["fields"]
    return cls(**{name: _decode_value(name, v) for name, v in fields.items()})


def _decode_item(data: dict) -> ChecklistItem:
    return ChecklistItem(
        item_id=data["item_id"],
        ri_tags=frozenset(RICategory(t) for t in data["ri_tags"]),
        status=ItemStatus(data["status"]),
        text=data["text"],
        artifacts=tuple(_decode_artifact(a) for a in data["artifacts"]),
    )


class ReportFormatError(ValueError):
    pass


def report_from_dict(data: Mapping[str, Any]) -> AssuranceReport:
    if data.get("schema") != SCHEMA_ID:
        raise ReportFormatError(f"unrecognised schema {data.get('schema')!r}; expected {SCHEMA_ID!r}")
    try:
        task = data["task"]
        return AssuranceReport(
            report_id=data["report_id"],
            task=TaskSpec(task["task_id"], OutputKind(task["output_kind"]), LossKind(task["loss_kind"]), tuple(task["labels"])),
            protocol_id=data["protocol_id"],
            items=tuple(_decode_item(i) for i in data["items"]),
            lambda_=float(data["lambda"]),
            lambda_justification=data["lambda_justification"],
            created_at=data["created_at"],
            toolkit_version=data["toolkit_version"],
            extensions=tuple(_decode_item(i) for i in data["extensions"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ReportFormatError(f"malformed report: {exc!r}") from None


def parse_report(data: Union[bytes, str]) -> AssuranceReport:
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ReportFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ReportFormatError("report must be a JSON object")
    return report_from_dict(obj)


# -- rendering ---------------------------------------------------------------


def fmt(value: Optional[float]) -> str:
    """Six significant digits for people; see the machine format for exact values."""
    if value is None:
        return "n/a"
    return f"{value:.6g}"


def _describe(artifact: Artifact, cost_unit: str) -> list[str]:
    if isinstance(artifact, LossSummary):
        return [
            f"pooled over n={artifact.n}: loss_human={fmt(artifact.loss_human)} "
            f"loss_ai={fmt(artifact.loss_ai)} loss_team={fmt(artifact.loss_team)}"
        ]
    if isinstance(artifact, GainReport):
        return [
            f"{artifact.episode_id}: ctp={artifact.ctp} gross_gain={fmt(artifact.gross_gain)} "
            f"net_gain={fmt(artifact.net_gain)} cost={fmt(artifact.total_cost)} {artifact.efficient.value}"
        ]
    if isinstance(artifact, StabilityProfile):
        series = "".join(str(c) for c in artifact.ctp_series)
        return [
            f"stability={fmt(artifact.stability)} over {len(artifact.ctp_series)} windows (ctp series {series})",
            f"mean gross_gain={fmt(statistics.mean(artifact.gain_series))}",
        ]
    if isinstance(artifact, BootstrapInterval):
        return [
            f"{artifact.statistic.value} {fmt(artifact.point)} "
            f"[{fmt(artifact.lower)}, {fmt(artifact.upper)}] at level {fmt(artifact.level)} "
            f"({artifact.resamples} resamples, seed {artifact.seed})"
        ]
    if isinstance(artifact, CostSummary):
        return [
            f"c(D) total={fmt(artifact.total_cost)} {artifact.cost_unit or '(no unit)'}; "
            f"mean per record={fmt(artifact.mean_cost_per_record)}"
        ]
    if isinstance(artifact, EfficiencySummary):
        lines = [f"lambda={fmt(artifact.lambda_)} loss units per {cost_unit or 'cost unit'}"]
        for eid, net, ratio, verdict in zip(
            artifact.episode_ids, artifact.net_gains, artifact.efficiency_ratios, artifact.verdicts
        ):
            lines.append(f"{eid}: net_gain={fmt(net)} ratio={fmt(ratio)} {verdict.value}")
        return lines
    return [repr(artifact)]


def render_human(report: AssuranceReport, color: bool = False) -> str:
    red = "\x1b[31m" if color else ""
    reset = "\x1b[0m" if color else ""
    deficiencies = {d.item_id: d for d in validate_report(report)}
    cost_unit = ""
    for item in report.items:
        for a in item.artifacts:
            if isinstance(a, CostSummary):
                cost_unit = a.cost_unit

    lines = [
        f"Assurance report {report.report_id}",
        f"task: {report.task.task_id} ({report.task.output_kind.value}, {report.task.loss_kind.value})",
        f"protocol: {report.protocol_id}",
        f"lambda: {fmt(report.lambda_)}",
        f"lambda justification: {report.lambda_justification or '(none)'}",
        f"{report.complete_count}/{len(CHECKLIST)} complete",
        "",
    ]
    by_id = {i.item_id: i for i in report.items}
    for k, d in enumerate(CHECKLIST, start=1):
        tags = ", ".join(t.value for t in sorted(d.ri_tags, key=lambda t: t.value))
        item = by_id.get(d.item_id)
        status = item.status if item else ItemStatus.MISSING
        marker = "" if d.item_id not in deficiencies else f"{red}[{status.value.upper()}]{reset} "
        lines.append(f"{k:2d}. {marker}{d.title} [{tags}]")
        if d.item_id in deficiencies:
            lines.append(f"    ! {deficiencies[d.item_id].problem}")
        if item is not None:
            for artifact in item.artifacts:
                lines.extend(f"    {line}" for line in _describe(artifact, cost_unit))
            if item.text:
                lines.extend(textwrap.wrap(item.text, 76, initial_indent="    ", subsequent_indent="    "))
        lines.append("")
    for item in report.extensions:
        lines.append(f"  + {item.item_id} (extension, {item.status.value})")
        if item.text:
            lines.extend(textwrap.wrap(item.text, 76, initial_indent="    ", subsequent_indent="    "))
    return "\n".join(lines).rstrip("\n") + "\n"


def render_report(report: AssuranceReport, style: str = "machine", color: bool = False) -> bytes:
    """Serialise a report; ``machine`` output round-trips through :func:`parse_report`."""
    if style == "machine":
        text = json.dumps(report_to_dict(report), indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False)
        return (text + "\n").encode("utf-8")
    if style == "human":
        return render_human(report, color=color).encode("utf-8")
    raise ValueError(f"unknown style {style!r}")
