"""Complementarity measures for one or more episodes.

Losses are empirical means of pointwise losses, computed with exact rational
summation and a single rounding, so an episode whose pointwise losses are all
equal reproduces that loss bit for bit.  The gain/cost algebra is likewise
evaluated exactly and rounded once: ``net_gain`` is the correctly rounded
value of ``gross - lambda * cost`` and the efficiency verdict is decided on the
exact rationals.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from . import rng
from .core import (
    Efficiency,
    EpisodeLog,
    EvaluationError,
    GainReport,
    InteractionRecord,
    RelianceVerdict,
    TaskSpec,
)

Number = Union[float, Fraction, int]

DEFAULT_RESAMPLES = 1000
DEFAULT_LEVEL = 0.95


@dataclass(frozen=True)
class LossSummary:
    loss_human: float
    loss_ai: float
    loss_team: float
    n: int


@dataclass(frozen=True)
class StabilityProfile:
    """CTP and gain per window, in temporal order.

    ``window_size`` is the number of records per window when every window has
    the same size, otherwise 0 (windows are whole episodes of varying size).
    """

    window_size: int
    ctp_series: tuple[int, ...]
    stability: float
    gain_series: tuple[float, ...]
    net_gain_series: tuple[float, ...] = ()


class BootstrapStatistic(str, Enum):
    GROSS_GAIN = "gross-gain"
    NET_GAIN = "net-gain"
    LOSS_TEAM = "loss-team"


@dataclass(frozen=True)
class BootstrapInterval:
    statistic: BootstrapStatistic
    point: float
    lower: float
    upper: float
    level: float
    resamples: int
    seed: int


def pointwise_losses(log: EpisodeLog) -> tuple[list[float], list[float], list[float]]:
    """Per-record losses of the human, AI and team columns."""
    task = log.task
    if not task.loss_kind.compatible_with(task.output_kind):
        raise EvaluationError("incompatible loss")
    human, ai, team = [], [], []
    for rec in log.records:
        for name in InteractionRecord.PREDICTION_FIELDS:
            if not task.conforms(getattr(rec, name)):
                raise EvaluationError(
                    f"incompatible loss: {name}={getattr(rec, name)!r} in record "
                    f"{rec.instance_id!r} is not a {task.output_kind.value} value"
                )
        human.append(task.loss(rec.y_human, rec.y_true))
        ai.append(task.loss(rec.y_ai, rec.y_true))
        team.append(task.loss(rec.y_team, rec.y_true))
    return human, ai, team


def aggregate_losses(log: EpisodeLog) -> LossSummary:
    """Empirical mean loss of the human, the AI and the team over the episode."""
    if not log.records:
        raise EvaluationError("empty dataset")
    human, ai, team = pointwise_losses(log)
    # statistics.mean sums exactly and rounds once.
    return LossSummary(
        loss_human=float(statistics.mean(human)),
        loss_ai=float(statistics.mean(ai)),
        loss_team=float(statistics.mean(team)),
        n=len(log.records),
    )


def _shortest(x: float) -> Fraction:
    return Fraction(repr(float(x)))


def gross_gain(summary: LossSummary) -> float:
    """Improvement of the team over the better of its two members.

    Defined for every episode; negative or zero values mean no complementarity.
    The difference is taken between the losses as they print (shortest
    round-trip decimals) and rounded once, so 2.5e-05 - 6.25e-06 is 1.875e-05.
    Distinct doubles have distinct, identically ordered shortest decimals, so
    the sign always matches ``best - team``.
    """
    best = min(summary.loss_human, summary.loss_ai)
    team = summary.loss_team
    gain = float(_shortest(best) - _shortest(team))
    if gain == 0 and best != team:
        return best - team  # the decimal difference underflowed
    return gain


def ctp(summary: LossSummary, tolerance: float = 0.0) -> int:
    """Complementarity indicator: 1 when the team strictly beats both members.

    With ``tolerance > 0`` the team must instead improve on the better member by
    at least ``tolerance`` loss units.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    gain = gross_gain(summary)
    if tolerance == 0:
        return int(gain > 0)
    return int(gain >= tolerance)


def _check_rate(lambda_: Number, total_cost: Number) -> None:
    if not lambda_ > 0:
        raise ValueError(f"invalid conversion rate: lambda must be > 0, got {lambda_!r}")
    if total_cost < 0:
        raise ValueError(f"total cost must be non-negative, got {total_cost!r}")


def net_gain(gross: Number, lambda_: Number, total_cost: Number) -> Number:
    """``gross - lambda * total_cost``, evaluated exactly.

    Float inputs give the correctly rounded float; all-rational inputs
    (``Fraction``/``int``) give the exact ``Fraction``.
    """
    _check_rate(lambda_, total_cost)
    exact = Fraction(gross) - Fraction(lambda_) * Fraction(total_cost)
    if any(isinstance(v, float) for v in (gross, lambda_, total_cost)):
        return float(exact)
    return exact


def efficiency_verdict(gross: Number, lambda_: Number, total_cost: Number) -> Efficiency:
    _check_rate(lambda_, total_cost)
    if total_cost == 0:
        return Efficiency.UNDEFINED_ZERO_COST
    if Fraction(gross) / Fraction(total_cost) > Fraction(lambda_):
        return Efficiency.EFFICIENT
    return Efficiency.INEFFICIENT


def evaluate_episode(log: EpisodeLog, lambda_: float, tolerance: float = 0.0) -> GainReport:
    summary = aggregate_losses(log)
    gross = gross_gain(summary)
    cost = log.total_cost
    return GainReport(
        episode_id=log.episode_id,
        n=summary.n,
        loss_human=summary.loss_human,
        loss_ai=summary.loss_ai,
        loss_team=summary.loss_team,
        ctp=ctp(summary, tolerance),
        gross_gain=gross,
        total_cost=cost,
        lambda_=float(lambda_),
        net_gain=float(net_gain(gross, float(lambda_), cost)),
        efficient=efficiency_verdict(gross, lambda_, cost),
    )


def degenerate_notes(report: GainReport) -> list[str]:
    """Explain why complementarity is impossible when one member is perfect."""
    notes = []
    if report.loss_ai == 0:
        notes.append(
            "degenerate case: the AI loss is zero, so no team can strictly "
            "outperform the AI and ctp=1 is impossible"
        )
    if report.loss_human == 0:
        notes.append(
            "degenerate case: the human loss is zero, so no team can strictly "
            "outperform the human and ctp=1 is impossible"
        )
    return notes


def _correct(task: TaskSpec, rec: InteractionRecord) -> tuple[bool, bool]:
    if task.output_kind.is_discrete:
        return rec.y_human == rec.y_true, rec.y_ai == rec.y_true
    # Regression: the strictly closer agent is "right"; ties go to both or neither.
    lh = task.loss(rec.y_human, rec.y_true)
    la = task.loss(rec.y_ai, rec.y_true)
    if lh == la:
        return lh == 0, la == 0
    return lh < la, la < lh


def classify_reliance(record: InteractionRecord, task: TaskSpec) -> RelianceVerdict:
    """Label how the team output relates to the human and AI inputs."""
    took_human = record.y_team == record.y_human
    took_ai = record.y_team == record.y_ai
    if not (took_human or took_ai):
        return RelianceVerdict.NON_RELIANCE_OUTPUT
    human_right, ai_right = _correct(task, record)
    if human_right == ai_right:
        if human_right:
            return RelianceVerdict.BOTH_CORRECT_SELECTION
        return RelianceVerdict.BOTH_WRONG_SELECTION
    if human_right:
        if took_human:
            return RelianceVerdict.APPROPRIATE_SELF_RELIANCE
        return RelianceVerdict.INAPPROPRIATE_AI_RELIANCE
    if took_ai:
        return RelianceVerdict.APPROPRIATE_AI_RELIANCE
    return RelianceVerdict.INAPPROPRIATE_SELF_RELIANCE


def reliance_counts(log: EpisodeLog) -> dict[RelianceVerdict, int]:
    counts = {v: 0 for v in RelianceVerdict}
    for rec in log.records:
        counts[classify_reliance(rec, log.task)] += 1
    return counts


def split_windows(log: EpisodeLog, window_size: int) -> list[EpisodeLog]:
    """Cut an episode into consecutive windows of ``window_size`` records.

    Records are ordered by timestamp when every record has one, otherwise by
    file order. A trailing partial window is kept.
    """
    if window_size < 1:
        raise ValueError("window size must be >= 1")
    records = list(log.records)
    if records and all(r.timestamp is not None for r in records):
        records.sort(key=lambda r: _timestamp_key(r.timestamp))
    return [
        EpisodeLog(
            episode_id=f"{log.episode_id}/w{k // window_size:04d}",
            task=log.task,
            protocol_id=log.protocol_id,
            cost_unit=log.cost_unit,
            records=tuple(records[k:k + window_size]),
        )
        for k in range(0, len(records), window_size)
    ]


def _timestamp_key(text: str):
    parsed = datetime.fromisoformat(text[:-1] + "+00:00" if text.endswith("Z") else text)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed


def check_homogeneous(logs: Sequence[EpisodeLog]) -> None:
    if not logs:
        raise EvaluationError("no episodes")
    first = logs[0]
    for log in logs[1:]:
        if log.task != first.task or log.protocol_id != first.protocol_id:
            raise EvaluationError(
                f"heterogeneous episodes: {log.episode_id!r} differs from "
                f"{first.episode_id!r} in task or protocol"
            )


def stability_profile(
    logs: Sequence[EpisodeLog],
    lambda_: float,
    tolerance: float = 0.0,
) -> StabilityProfile:
    """Fraction of episodes (windows) that achieve complementarity."""
    check_homogeneous(logs)
    reports = [evaluate_episode(log, lambda_, tolerance) for log in logs]
    sizes = {len(log) for log in logs}
    ctps = tuple(r.ctp for r in reports)
    return StabilityProfile(
        window_size=sizes.pop() if len(sizes) == 1 else 0,
        ctp_series=ctps,
        stability=sum(ctps) / len(ctps),
        gain_series=tuple(r.gross_gain for r in reports),
        net_gain_series=tuple(r.net_gain for r in reports),
    )


def percentile(sorted_values: np.ndarray, q: float) -> float:
    """Linear-interpolation percentile (``q`` in [0, 1]) of sorted data."""
    pos = q * (len(sorted_values) - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, len(sorted_values) - 1)
    frac = pos - lo
    return float(sorted_values[lo] + (sorted_values[hi] - sorted_values[lo]) * frac)


def resample_indices(seed: int, resamples: int, n: int) -> np.ndarray:
    """Index matrix of shape (resamples, n); row b depends only on (seed, b)."""
    b = np.arange(resamples, dtype=np.uint64)[:, None]
    j = np.arange(n, dtype=np.uint64)[None, :]
    u = rng.uniform(seed, b, j)
    return np.minimum((u * n).astype(np.int64), n - 1)


def bootstrap_gain(
    log: EpisodeLog,
    lambda_: float,
    resamples: int = DEFAULT_RESAMPLES,
    level: float = DEFAULT_LEVEL,
    seed: int = 0,
    statistic: Union[BootstrapStatistic, str] = BootstrapStatistic.GROSS_GAIN,
) -> BootstrapInterval:
    """Percentile bootstrap interval over record-level resampling."""
    statistic = BootstrapStatistic(statistic)
    if len(log.records) < 2:
        raise EvaluationError("insufficient records: bootstrap needs n >= 2")
    if resamples < 100:
        raise ValueError("resamples must be >= 100")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if not lambda_ > 0:
        raise ValueError("invalid conversion rate")

    report = evaluate_episode(log, lambda_)
    human, ai, team = (np.asarray(x, dtype=np.float64) for x in pointwise_losses(log))
    costs = np.asarray([r.cost for r in log.records], dtype=np.float64)
    idx = resample_indices(seed, resamples, len(log.records))

    team_means = team[idx].mean(axis=1)
    if statistic is BootstrapStatistic.LOSS_TEAM:
        point, values = report.loss_team, team_means
    else:
        values = np.minimum(human[idx].mean(axis=1), ai[idx].mean(axis=1)) - team_means
        point = report.gross_gain
        if statistic is BootstrapStatistic.NET_GAIN:
            values = values - lambda_ * costs[idx].sum(axis=1)
            point = report.net_gain

    values = np.sort(values)
    alpha = (1.0 - level) / 2.0
    return BootstrapInterval(
        statistic=statistic,
        point=point,
        lower=percentile(values, alpha),
        upper=percentile(values, 1.0 - alpha),
        level=level,
        resamples=resamples,
        seed=seed,
    )
