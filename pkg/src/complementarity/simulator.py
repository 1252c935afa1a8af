"""Synthetic episodes from configurable error models.

Randomness comes from :mod:`complementarity.rng`, keyed on
``(seed, episode, record, stream)`` with stream 0 for the ground truth, 1 for
the human and 2 for the AI. Any record can therefore be regenerated in
isolation and the output never depends on generation order.

Scenario files are INI documents; see ``load_scenario`` for the schema.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
import re
import statistics
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import rng
from .core import EpisodeLog, InteractionRecord, TaskSpec
from .ingest import SweepRow
from .metrics import evaluate_episode
from .protocols import ProtocolError, ProtocolKind, ProtocolSpec, run_protocol

TRUTH, HUMAN, AI = 0, 1, 2
_ROW_SEED_STEP = 0x9E3779B97F4A7C15
_U64 = 1 << 64
_SUM_TOL = 1e-9


class ConfigError(ValueError):
    """Invalid scenario; the message names the offending field."""

    def __init__(self, field: str, message: str, line: Optional[int] = None, source: str = ""):
        self.field = field
        self.line = line
        prefix = source
        if line is not None:
            prefix = f"{prefix}:{line}" if prefix else f"line {line}"
        text = f"{field}: {message}"
        super().__init__(f"{prefix}: {text}" if prefix else text)


class AgentKind(str, Enum):
    ADDITIVE_BIAS = "additive-bias"
    LABEL_FLIP = "label-flip"
    PERFECT = "perfect"


@dataclass(frozen=True)
class AgentModel:
    """Error model of one agent.

    ``additive-bias`` adds ``bias`` plus Gaussian noise to the truth (real
    tasks). ``label-flip`` replaces the true label with probability
    ``error_rate``; the replacement is drawn from the truth's row of
    ``confusion`` when given, otherwise uniformly from the other labels.
    """

    kind: AgentKind
    bias: float = 0.0
    noise_sd: float = 0.0
    error_rate: float = 0.0
    confusion: Optional[tuple[tuple[float, ...], ...]] = None

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "kind", AgentKind(self.kind))
        except ValueError:
            raise ConfigError("kind", f"unknown agent kind {self.kind!r}") from None
        if self.confusion is not None:
            object.__setattr__(self, "confusion", tuple(tuple(float(x) for x in row) for row in self.confusion))
        for name in ("bias", "noise_sd", "error_rate"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(name, "must be a finite number")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd", "must be >= 0")
        if not 0.0 <= self.error_rate <= 1.0:
            raise ConfigError("error_rate", "must lie in [0, 1]")
        if self.confusion is not None:
            for i, row in enumerate(self.confusion):
                if any(x < 0 or not math.isfinite(x) for x in row):
                    raise ConfigError("confusion", f"row {i + 1} has a negative or non-finite entry")
                if abs(math.fsum(row) - 1.0) > _SUM_TOL:
                    raise ConfigError("confusion", f"row {i + 1} sums to {math.fsum(row)!r}, not 1")

    @classmethod
    def perfect(cls) -> "AgentModel":
        return cls(AgentKind.PERFECT)


class TruthKind(str, Enum):
    UNIFORM_REAL = "uniform-real"
    CATEGORICAL_WEIGHTS = "categorical-weights"


@dataclass(frozen=True)
class TruthDistribution:
    kind: TruthKind
    lo: float = 0.0
    hi: float = 1.0
    weights: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "kind", TruthKind(self.kind))
        except ValueError:
            raise ConfigError("truth.kind", f"unknown truth distribution {self.kind!r}") from None
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.kind is TruthKind.UNIFORM_REAL:
            if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
                raise ConfigError("truth.lo", "need finite lo <= hi")
        else:
            if not self.weights or any(w < 0 or not math.isfinite(w) for w in self.weights):
                raise ConfigError("truth.weights", "need non-negative finite weights")
            if abs(math.fsum(self.weights) - 1.0) > _SUM_TOL:
                raise ConfigError("truth.weights", f"weights sum to {math.fsum(self.weights)!r}, not 1")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str
    task: TaskSpec
    n_records: int
    n_episodes: int
    human: AgentModel
    ai: AgentModel
    protocol: ProtocolSpec
    truth: TruthDistribution
    lambda_: float
    seed: int
    cost_unit: str = "minute"

    def __post_init__(self) -> None:
        if not self.scenario_id:
            raise ConfigError("scenario_id", "must be non-empty")
        for name in ("n_records", "n_episodes"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(name, "must be an integer >= 1")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < _U64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if not (isinstance(self.lambda_, (int, float)) and math.isfinite(self.lambda_) and self.lambda_ > 0):
            raise ConfigError("lambda", "must be a finite number > 0")
        discrete = self.task.output_kind.is_discrete
        if discrete != (self.truth.kind is TruthKind.CATEGORICAL_WEIGHTS):
            raise ConfigError("truth.kind", f"does not match output_kind {self.task.output_kind.value}")
        if discrete and len(self.truth.weights) != len(self.task.labels):
            raise ConfigError("truth.weights", f"need {len(self.task.labels)} weights, one per label")
        for side, agent in (("human", self.human), ("ai", self.ai)):
            if agent.kind is AgentKind.ADDITIVE_BIAS and discrete:
                raise ConfigError(f"{side}.kind", "additive-bias needs a real-scalar task")
            if agent.kind is AgentKind.LABEL_FLIP and not discrete:
                raise ConfigError(f"{side}.kind", "label-flip needs a categorical or binary task")
            if agent.confusion is not None:
                k = len(self.task.labels)
                if len(agent.confusion) != k or any(len(row) != k for row in agent.confusion):
                    raise ConfigError(f"{side}.confusion", f"must be a {k}x{k} matrix")
        if discrete and self.protocol.kind in (ProtocolKind.AVERAGING, ProtocolKind.ITERATIVE_DELIBERATION):
            raise ConfigError("protocol.kind", "protocol requires real-scalar outputs")


def _sample_truth(config: ScenarioConfig, episode: int, idx: np.ndarray) -> list:
    dist = config.truth
    u = rng.uniform(config.seed, episode, idx, TRUTH, 0)
    if dist.kind is TruthKind.UNIFORM_REAL:
        return (dist.lo + (dist.hi - dist.lo) * u).tolist()
    return _inverse_cdf(dist.weights, u, config.task.labels)


def _inverse_cdf(weights: Sequence[float], u: np.ndarray, labels: Sequence[str]) -> list:
    cdf = np.cumsum(weights)
    picks = np.searchsorted(cdf, u * cdf[-1], side="right")
    picks = np.minimum(picks, len(labels) - 1)
    return [labels[i] for i in picks]


def _sample_agent(config: ScenarioConfig, agent: AgentModel, tag: int, episode: int, idx: np.ndarray, truth: list) -> list:
    if agent.kind is AgentKind.PERFECT:
        return list(truth)
    seed = config.seed
    if agent.kind is AgentKind.ADDITIVE_BIAS:
        base = np.asarray(truth, dtype=np.float64) + agent.bias
        if agent.noise_sd > 0:
            base = base + agent.noise_sd * rng.standard_normal(seed, episode, idx, tag)
        return base.tolist()

    labels = config.task.labels
    flip = rng.uniform(seed, episode, idx, tag, 2) < agent.error_rate
    pick = rng.uniform(seed, episode, idx, tag, 3)
    out = list(truth)
    for j in np.flatnonzero(flip):
        t = labels.index(truth[j])
        if agent.confusion is not None:
            out[j] = _inverse_cdf(agent.confusion[t], pick[j:j + 1], labels)[0]
        elif len(labels) > 1:
            others = [x for x in labels if x != truth[j]]
            out[j] = others[min(int(pick[j] * len(others)), len(others) - 1)]
    return out


def simulate_episode(config: ScenarioConfig, episode: int) -> EpisodeLog:
    idx = np.arange(config.n_records, dtype=np.uint64)
    truth = _sample_truth(config, episode, idx)
    human = _sample_agent(config, config.human, HUMAN, episode, idx, truth)
    ai = _sample_agent(config, config.ai, AI, episode, idx, truth)
    records = []
    for r in range(config.n_records):
        outcome = run_protocol(config.protocol, human[r], ai[r], config.task, y_true=truth[r])
        records.append(
            InteractionRecord(
                instance_id=f"r{r:06d}",
                y_true=truth[r],
                y_human=human[r],
                y_ai=ai[r],
                y_team=outcome.y_team,
                cost=outcome.cost_incurred,
                rounds=outcome.rounds_used,
            )
        )
    return EpisodeLog(
        episode_id=f"{config.scenario_id}-e{episode:04d}",
        task=config.task,
        protocol_id=config.protocol.protocol_id,
        cost_unit=config.cost_unit,
        records=tuple(records),
    )


def simulate(config: ScenarioConfig) -> list[EpisodeLog]:
    """All episodes of a scenario; a pure function of ``config``."""
    return [simulate_episode(config, e) for e in range(config.n_episodes)]


# -- sweeps ------------------------------------------------------------------

_PROTOCOL_AXES = ("threshold", "weight_human", "rounds", "step", "per_round_cost", "base_cost")
_AGENT_AXES = ("bias", "noise_sd", "error_rate")
_INT_AXES = {"n_records", "n_episodes", "protocol.rounds"}
SWEEP_AXES = (
    ("lambda", "n_records", "n_episodes", "truth.lo", "truth.hi")
    + tuple(f"protocol.{a}" for a in _PROTOCOL_AXES)
    + tuple(f"{side}.{a}" for side in ("human", "ai") for a in _AGENT_AXES)
)


class SweepAxisError(ValueError):
    pass


def resolve_axis(axis: str) -> str:
    """Canonical dotted name for a sweep axis; bare protocol fields are accepted."""
    if axis in SWEEP_AXES:
        return axis
    if axis in _PROTOCOL_AXES:
        return f"protocol.{axis}"
    if axis in _AGENT_AXES:
        raise SweepAxisError(f"ambiguous axis {axis!r}: use human.{axis} or ai.{axis}")
    raise SweepAxisError(f"unknown axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")


def with_axis(config: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    axis = resolve_axis(axis)
    if axis in _INT_AXES:
        if float(value) != int(value):
            raise ConfigError(axis, f"needs an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    if axis == "lambda":
        return dataclasses.replace(config, lambda_=value)
    if "." not in axis:
        return dataclasses.replace(config, **{axis: value})
    section, name = axis.split(".")
    try:
        part = dataclasses.replace(getattr(config, section), **{name: value})
    except ProtocolError as exc:
        field, _, message = str(exc).partition(": ")
        raise ConfigError(f"protocol.{field}", message) from None
    except ConfigError as exc:
        raise ConfigError(f"{section}.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    return dataclasses.replace(config, **{section: part})


def row_seed(base_seed: int, row: int) -> int:
    """Seed for sweep row ``row``: ``(base_seed + row * 0x9E3779B97F4A7C15) mod 2**64``."""
    return (base_seed + row * _ROW_SEED_STEP) % _U64


def sweep(base: ScenarioConfig, axis: str, values: Sequence) -> list[SweepRow]:
    """Simulate and score the scenario once per axis value, in input order."""
    resolve_axis(axis)
    rows = []
    for k, value in enumerate(values):
        config = dataclasses.replace(with_axis(base, axis, value), seed=row_seed(base.seed, k))
        reports = [evaluate_episode(log, config.lambda_) for log in simulate(config)]
        rows.append(
            SweepRow(
                value=value,
                mean_gross_gain=float(statistics.mean(r.gross_gain for r in reports)),
                stability=sum(r.ctp for r in reports) / len(reports),
                mean_net_gain=float(statistics.mean(r.net_gain for r in reports)),
            )
        )
    return rows


# -- scenario files ----------------------------------------------------------

_SCHEMA = {
    "scenario": {"scenario_id", "n_records", "n_episodes", "lambda", "seed", "cost_unit"},
    "task": {"task_id", "output_kind", "loss_kind", "labels"},
    "truth": {"kind", "lo", "hi", "weights"},
    "human": {"kind", "bias", "noise_sd", "error_rate", "confusion"},
    "ai": {"kind", "bias", "noise_sd", "error_rate", "confusion"},
    "protocol": {"protocol_id", "kind", "threshold", "weight_human", "rounds", "step", "per_round_cost", "base_cost"},
}
_REQUIRED = {
    "scenario": ("scenario_id", "n_records", "n_episodes", "lambda", "seed"),
    "task": ("task_id", "output_kind", "loss_kind"),
    "truth": ("kind",),
    "human": ("kind",),
    "ai": ("kind",),
    "protocol": ("protocol_id", "kind"),
}
_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^#;\s=:][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict[tuple[str, Optional[str]], int]:
    where: dict[tuple[str, Optional[str]], int] = {}
    section = None
    for n, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            where.setdefault((section, None), n)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None and not line[:1].isspace():
            where.setdefault((section, m.group(1).strip().lower()), n)
    return where


class _Fields:
    def __init__(self, parser: configparser.ConfigParser, where, source: str):
        self.parser = parser
        self.where = where
        self.source = source

    def error(self, section: str, key: Optional[str], message: str) -> ConfigError:
        line = self.where.get((section, key)) or self.where.get((section, None))
        name = f"{section}.{key}" if key else section
        return ConfigError(name, message, line, self.source)

    def has(self, section: str, key: str) -> bool:
        return self.parser.has_option(section, key)

    def text(self, section: str, key: str, default: Optional[str] = None) -> str:
        if not self.has(section, key):
            if default is None:
                raise self.error(section, key, "required field is missing")
            return default
        value = self.parser.get(section, key).strip()
        if not value:
            raise self.error(section, key, "must be non-empty")
        return value

    def real(self, section: str, key: str, default: Optional[float] = None) -> float:
        if default is not None and not self.has(section, key):
            return default
        raw = self.text(section, key)
        try:
            value = float(raw)
        except ValueError:
            raise self.error(section, key, f"{raw!r} is not a number") from None
        if not math.isfinite(value):
            raise self.error(section, key, f"{raw!r} is not finite")
        return value

    def integer(self, section: str, key: str, default: Optional[int] = None) -> int:
        if default is not None and not self.has(section, key):
            return default
        raw = self.text(section, key)
        if not re.fullmatch(r"[+-]?\d+", raw):
            raise self.error(section, key, f"{raw!r} is not an integer")
        return int(raw)

    def reals(self, section: str, key: str) -> tuple[float, ...]:
        raw = self.text(section, key)
        try:
            return tuple(float(x) for x in raw.split(","))
        except ValueError:
            raise self.error(section, key, f"{raw!r} is not a comma-separated list of numbers") from None

    def matrix(self, section: str, key: str) -> Optional[tuple[tuple[float, ...], ...]]:
        if not self.has(section, key):
            return None
        raw = self.text(section, key)
        try:
            return tuple(tuple(float(x) for x in row.split(",")) for row in raw.split(";"))
        except ValueError:
            raise self.error(section, key, "rows are ';'-separated lists of ','-separated numbers") from None


def _guess_key(section: str, message: str, default: Optional[str]) -> Optional[str]:
    if section == "task":
        if "label" in message:
            return "labels"
        if "loss" in message:
            return "loss_kind"
    return default


def parse_scenario(text: str, source: str = "") -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from INI text.

    Errors carry the source name, the 1-based line and the dotted field name.
    """
    parser = configparser.ConfigParser(interpolation=None, strict=True, default_section="\0defaults")
    try:
        parser.read_string(text, source=source or "<scenario>")
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigError("file", str(exc).splitlines()[0], line, source) from None
    f = _Fields(parser, _line_index(text), source)

    for section in parser.sections():
        if section not in _SCHEMA:
            raise f.error(section, None, "unknown section")
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise f.error(section, key, "unknown field")
    for section, keys in _REQUIRED.items():
        if not parser.has_section(section):
            raise ConfigError(section, "required section is missing", None, source)
        for key in keys:
            f.text(section, key)

    def build(section: str, key: Optional[str], factory):
        try:
            return factory()
        except ConfigError as exc:
            name = exc.field.split(".")[-1]
            raise f.error(section, name if name in _SCHEMA[section] else key, str(exc).split(": ", 1)[-1]) from None
        except ValueError as exc:
            field, _, message = str(exc).partition(": ")
            if field in _SCHEMA[section]:
                raise f.error(section, field, message) from None
            raise f.error(section, _guess_key(section, str(exc), key), str(exc)) from None

    labels = tuple(x.strip() for x in f.text("task", "labels", "").split(",") if x.strip())
    task = build(
        "task",
        "output_kind",
        lambda: TaskSpec(f.text("task", "task_id"), f.text("task", "output_kind"), f.text("task", "loss_kind"), labels),
    )

    truth_kind = f.text("truth", "kind")
    if truth_kind == TruthKind.CATEGORICAL_WEIGHTS.value:
        truth = build("truth", "weights", lambda: TruthDistribution(truth_kind, weights=f.reals("truth", "weights")))
    else:
        truth = build(
            "truth",
            "kind",
            lambda: TruthDistribution(truth_kind, lo=f.real("truth", "lo"), hi=f.real("truth", "hi")),
        )

    def agent(side: str) -> AgentModel:
        return build(
            side,
            None,
            lambda: AgentModel(
                kind=f.text(side, "kind"),
                bias=f.real(side, "bias", 0.0),
                noise_sd=f.real(side, "noise_sd", 0.0),
                error_rate=f.real(side, "error_rate", 0.0),
                confusion=f.matrix(side, "confusion"),
            ),
        )

    protocol = build(
        "protocol",
        "kind",
        lambda: ProtocolSpec(
            protocol_id=f.text("protocol", "protocol_id"),
            kind=f.text("protocol", "kind"),
            threshold=f.real("protocol", "threshold", 0.0),
            weight_human=f.real("protocol", "weight_human", 0.5),
            rounds=f.integer("protocol", "rounds", 0),
            step=f.real("protocol", "step", 0.5),
            per_round_cost=f.real("protocol", "per_round_cost", 0.0),
            base_cost=f.real("protocol", "base_cost", 0.0),
        ),
    )

    human = agent("human")
    ai = agent("ai")
    try:
        return ScenarioConfig(
            scenario_id=f.text("scenario", "scenario_id"),
            task=task,
            n_records=f.integer("scenario", "n_records"),
            n_episodes=f.integer("scenario", "n_episodes"),
            human=human,
            ai=ai,
            protocol=protocol,
            truth=truth,
            lambda_=f.real("scenario", "lambda"),
            seed=f.integer("scenario", "seed"),
            cost_unit=f.text("scenario", "cost_unit", "minute"),
        )
    except ConfigError as exc:
        section, _, key = exc.field.partition(".")
        if section in _SCHEMA and key:
            raise f.error(section, key, str(exc).split(": ", 1)[-1]) from None
        key = "lambda" if exc.field == "lambda" else exc.field
        raise f.error("scenario", key, str(exc).split(": ", 1)[-1]) from None


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("file", exc.strerror or str(exc), None, str(path)) from None
    return parse_scenario(text, source=str(path))


def dump_scenario(config: ScenarioConfig) -> str:
    """INI text that parses back to ``config``."""
    r = repr

    def agent_lines(a: AgentModel) -> list[str]:
        lines = [f"kind = {a.kind.value}"]
        if a.kind is AgentKind.ADDITIVE_BIAS:
            lines += [f"bias = {r(float(a.bias))}", f"noise_sd = {r(float(a.noise_sd))}"]
        elif a.kind is AgentKind.LABEL_FLIP:
            lines.append(f"error_rate = {r(float(a.error_rate))}")
            if a.confusion is not None:
                rows = "; ".join(", ".join(r(x) for x in row) for row in a.confusion)
                lines.append(f"confusion = {rows}")
        return lines

    t, p = config.task, config.protocol
    out = [
        "[scenario]",
        f"scenario_id = {config.scenario_id}",
        f"n_records = {config.n_records}",
        f"n_episodes = {config.n_episodes}",
        f"lambda = {r(float(config.lambda_))}",
        f"seed = {config.seed}",
        f"cost_unit = {config.cost_unit}",
        "",
        "[task]",
        f"task_id = {t.task_id}",
        f"output_kind = {t.output_kind.value}",
        f"loss_kind = {t.loss_kind.value}",
    ]
    if t.labels:
        out.append(f"labels = {', '.join(t.labels)}")
    out += ["", "[truth]", f"kind = {config.truth.kind.value}"]
    if config.truth.kind is TruthKind.UNIFORM_REAL:
        out += [f"lo = {r(float(config.truth.lo))}", f"hi = {r(float(config.truth.hi))}"]
    else:
        out.append(f"weights = {', '.join(r(w) for w in config.truth.weights)}")
    out += ["", "[human]", *agent_lines(config.human), "", "[ai]", *agent_lines(config.ai)]
    out += [
        "",
        "[protocol]",
        f"protocol_id = {p.protocol_id}",
        f"kind = {p.kind.value}",
        f"threshold = {r(float(p.threshold))}",
        f"weight_human = {r(float(p.weight_human))}",
        f"rounds = {p.rounds}",
        f"step = {r(float(p.step))}",
        f"per_round_cost = {r(float(p.per_round_cost))}",
        f"base_cost = {r(float(p.base_cost))}",
    ]
    return "\n".join(out) + "\n"


def bundled_scenarios() -> dict[str, Path]:
    """Scenario files shipped with the package, by stem."""
    folder = Path(__file__).with_name("scenarios")
    return {p.stem: p for p in sorted(folder.glob("*.ini"))}


__all__ = [
    "AgentKind",
    "AgentModel",
    "ConfigError",
    "ScenarioConfig",
    "SweepAxisError",
    "TruthDistribution",
    "TruthKind",
    "bundled_scenarios",
    "dump_scenario",
    "load_scenario",
    "parse_scenario",
    "resolve_axis",
    "row_seed",
    "simulate",
    "simulate_episode",
    "sweep",
    "with_axis",
]
