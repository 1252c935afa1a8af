"""Canonical text formats for episode logs, study manifests and sweep tables.

Episode log (UTF-8, LF line endings, tab-separated)::

    #ctplog	1
    #episode_id	<id>
    #task_id	<id>
    #output_kind	real-scalar | categorical | binary
    #loss_kind	squared-error | absolute-error | zero-one
    #labels	<label>	<label> ...        (categorical and binary only)
    #protocol_id	<id>
    #cost_unit	<unit>
    instance_id	y_true	y_human	y_ai	y_team	cost[	timestamp][	rounds]
    <one record per line>

The header keys appear in exactly this order. The column line declares
whether the optional ``timestamp`` and ``rounds`` columns are present; an
empty cell in an optional column means "absent". Reals are written in the
shortest decimal form that round-trips to the same double (``repr``).

A study is a directory holding episode logs plus ``manifest.tsv``::

    #ctpmanifest	1
    episode-0000.tsv
    ...

listing the episode files in temporal order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

from .core import EpisodeLog, InteractionRecord, LossKind, OutputKind, TaskSpec, validate_episode

LOG_MAGIC = "#ctplog"
MANIFEST_MAGIC = "#ctpmanifest"
SWEEP_MAGIC = "#ctpsweep"
FORMAT_VERSION = "1"
MANIFEST_NAME = "manifest.tsv"

BASE_COLUMNS = ("instance_id", "y_true", "y_human", "y_ai", "y_team", "cost")
OPTIONAL_COLUMNS = ("timestamp", "rounds")
SWEEP_COLUMNS = ("value", "mean_gross_gain", "stability", "mean_net_gain")

_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_INTEGER = re.compile(r"\d+")
_FORBIDDEN = ("\t", "\n", "\r")


class LogFormatError(ValueError):
    """Malformed file content; ``line`` and ``column`` are 1-based."""

    def __init__(self, message: str, line: int, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class LogFileHeader:
    format_version: str
    episode_id: str
    task: TaskSpec
    protocol_id: str
    cost_unit: str
    columns: tuple[str, ...]


def format_real(value: float) -> str:
    return repr(float(value))


def parse_real(text: str) -> float:
    if not _NUMBER.fullmatch(text):
        raise ValueError(f"{text!r} is not a decimal number")
    return float(text)


def _check_text(value: str, what: str) -> str:
    if not isinstance(value, str) or any(c in value for c in _FORBIDDEN):
        raise ValueError(f"{what} {value!r} cannot be written: tabs and newlines are not allowed")
    return value


def _format_value(task: TaskSpec, value) -> str:
    if task.output_kind.is_discrete:
        return _check_text(value, "label")
    return format_real(value)


def _columns_for(log: EpisodeLog) -> tuple[str, ...]:
    cols = list(BASE_COLUMNS)
    if any(r.timestamp is not None for r in log.records):
        cols.append("timestamp")
    if any(r.rounds is not None for r in log.records):
        cols.append("rounds")
    return tuple(cols)


def write_log(log: EpisodeLog) -> bytes:
    """Serialise a valid episode in canonical form."""
    problems = validate_episode(log)
    if problems:
        raise ValueError("cannot write invalid episode: " + "; ".join(map(str, problems)))
    task = log.task
    columns = _columns_for(log)
    lines = [
        f"{LOG_MAGIC}\t{FORMAT_VERSION}",
        f"#episode_id\t{_check_text(log.episode_id, 'episode_id')}",
        f"#task_id\t{_check_text(task.task_id, 'task_id')}",
        f"#output_kind\t{task.output_kind.value}",
        f"#loss_kind\t{task.loss_kind.value}",
    ]
    if task.output_kind.is_discrete:
        lines.append("\t".join(["#labels", *(_check_text(x, "label") for x in task.labels)]))
    lines.append(f"#protocol_id\t{_check_text(log.protocol_id, 'protocol_id')}")
    lines.append(f"#cost_unit\t{_check_text(log.cost_unit, 'cost_unit')}")
    lines.append("\t".join(columns))
    for rec in log.records:
        cells = [
            _check_text(rec.instance_id, "instance_id"),
            _format_value(task, rec.y_true),
            _format_value(task, rec.y_human),
            _format_value(task, rec.y_ai),
            _format_value(task, rec.y_team),
            format_real(rec.cost),
        ]
        if "timestamp" in columns:
            cells.append("" if rec.timestamp is None else _check_text(rec.timestamp, "timestamp"))
        if "rounds" in columns:
            cells.append("" if rec.rounds is None else str(rec.rounds))
        lines.append("\t".join(cells))
    return ("\n".join(lines) + "\n").encode("utf-8")


_HEADER_KEYS = ("#episode_id", "#task_id", "#output_kind", "#loss_kind")


def _read_header(lines: list[str]) -> tuple[LogFileHeader, int]:
    def fields(idx: int, key: str) -> list[str]:
        if idx >= len(lines):
            raise LogFormatError(f"missing header field {key[1:]}", idx + 1)
        parts = lines[idx].split("\t")
        if parts[0] != key:
            raise LogFormatError(f"expected header field {key[1:]}, found {parts[0]!r}", idx + 1, 1)
        return parts[1:]

    magic = fields(0, LOG_MAGIC)
    if magic != [FORMAT_VERSION]:
        raise LogFormatError(f"unrecognised format version {'/'.join(magic)!r}", 1, 2)
    values = {}
    for i, key in enumerate(_HEADER_KEYS, start=1):
        parts = fields(i, key)
        if len(parts) != 1:
            raise LogFormatError(f"{key[1:]} takes exactly one value", i + 1)
        values[key[1:]] = parts[0]
    idx = len(_HEADER_KEYS) + 1

    try:
        output_kind = OutputKind(values["output_kind"])
    except ValueError:
        raise LogFormatError(f"unknown output_kind {values['output_kind']!r}", 4, 2) from None
    try:
        loss_kind = LossKind(values["loss_kind"])
    except ValueError:
        raise LogFormatError(f"unknown loss_kind {values['loss_kind']!r}", 5, 2) from None

    labels: list[str] = []
    if output_kind.is_discrete:
        labels = fields(idx, "#labels")
        idx += 1
    try:
        task = TaskSpec(values["task_id"], output_kind, loss_kind, tuple(labels))
    except ValueError as exc:
        raise LogFormatError(str(exc), idx) from None

    protocol = fields(idx, "#protocol_id")
    unit = fields(idx + 1, "#cost_unit")
    for offset, parts, name in ((0, protocol, "protocol_id"), (1, unit, "cost_unit")):
        if len(parts) != 1:
            raise LogFormatError(f"{name} takes exactly one value", idx + offset + 1)
    idx += 2

    if idx >= len(lines):
        raise LogFormatError("missing column line", idx + 1)
    columns = tuple(lines[idx].split("\t"))
    allowed = [BASE_COLUMNS + extra for extra in ((), ("timestamp",), ("rounds",), OPTIONAL_COLUMNS)]
    if columns not in allowed:
        raise LogFormatError(
            "column line must be " + "\t".join(BASE_COLUMNS) + " followed by optional timestamp, rounds",
            idx + 1,
        )
    header = LogFileHeader(
        format_version=FORMAT_VERSION,
        episode_id=values["episode_id"],
        task=task,
        protocol_id=protocol[0],
        cost_unit=unit[0],
        columns=columns,
    )
    return header, idx + 1


def _split_lines(data: Union[bytes, str]) -> list[str]:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LogFormatError(f"not UTF-8: {exc}", data[: exc.start].count(b"\n") + 1) from None
    if "\r" in data:
        raise LogFormatError("CR line endings are not allowed", data[: data.index("\r")].count("\n") + 1)
    lines = data.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def read_log(data: Union[bytes, str]) -> EpisodeLog:
    """Parse an episode log, raising :class:`LogFormatError` on any defect."""
    lines = _split_lines(data)
    header, start = _read_header(lines)
    task = header.task
    columns = header.columns

    def value(text: str, line: int, col: int):
        if task.output_kind.is_discrete:
            if text not in task.labels:
                raise LogFormatError(f"{text!r} is not one of the task labels", line, col)
            return text
        try:
            return parse_real(text)
        except ValueError as exc:
            raise LogFormatError(str(exc), line, col) from None

    records = []
    seen: dict[str, int] = {}
    for offset, raw in enumerate(lines[start:]):
        line = start + offset + 1
        cells = raw.split("\t")
        if len(cells) != len(columns):
            raise LogFormatError(f"expected {len(columns)} fields, found {len(cells)}", line)
        rid = cells[0]
        if not rid:
            raise LogFormatError("empty instance_id", line, 1)
        if rid in seen:
            raise LogFormatError(f"duplicate instance_id {rid!r} (first on line {seen[rid]})", line, 1)
        seen[rid] = line
        preds = [value(cells[c], line, c + 1) for c in range(1, 5)]
        try:
            cost = parse_real(cells[5])
        except ValueError as exc:
            raise LogFormatError(f"cost: {exc}", line, 6) from None
        if cost < 0:
            raise LogFormatError(f"cost: negative value {cells[5]!r}", line, 6)
        timestamp = None
        rounds = None
        for c in range(6, len(columns)):
            cell = cells[c]
            if cell == "":
                continue
            if columns[c] == "timestamp":
                timestamp = cell
            else:
                if not _INTEGER.fullmatch(cell):
                    raise LogFormatError(f"rounds: {cell!r} is not a non-negative integer", line, c + 1)
                rounds = int(cell)
        records.append(InteractionRecord(rid, *preds, cost=cost, timestamp=timestamp, rounds=rounds))

    if not records:
        raise LogFormatError("empty dataset: the log has no records", len(lines) + 1)
    log = EpisodeLog(header.episode_id, task, header.protocol_id, header.cost_unit, tuple(records))
    problems = validate_episode(log)
    if problems:
        # Anything not caught above (e.g. a malformed timestamp) is located here.
        bad = problems[0]
        line = seen.get(bad.instance_id, start) if bad.instance_id else 1
        column = (columns.index(bad.field) + 1) if bad.field in columns else None
        raise LogFormatError(bad.message, line, column)
    return log


def load_log(path: Union[str, Path]) -> EpisodeLog:
    return read_log(Path(path).read_bytes())


def save_log(log: EpisodeLog, path: Union[str, Path]) -> None:
    Path(path).write_bytes(write_log(log))


def write_manifest(names: Sequence[str]) -> bytes:
    for name in names:
        if not name or "/" in name or name.startswith("#") or any(c in name for c in _FORBIDDEN):
            raise ValueError(f"invalid episode file name {name!r}")
    return ("\n".join([f"{MANIFEST_MAGIC}\t{FORMAT_VERSION}", *names]) + "\n").encode("utf-8")


def read_manifest(data: Union[bytes, str]) -> list[str]:
    lines = _split_lines(data)
    if not lines or lines[0] != f"{MANIFEST_MAGIC}\t{FORMAT_VERSION}":
        raise LogFormatError("not a version-1 manifest", 1)
    names = []
    for i, name in enumerate(lines[1:], start=2):
        if not name or "/" in name or "\t" in name:
            raise LogFormatError(f"invalid episode file name {name!r}", i)
        names.append(name)
    if not names:
        raise LogFormatError("manifest lists no episodes", len(lines) + 1)
    return names


def save_study(logs: Iterable[EpisodeLog], directory: Union[str, Path]) -> list[Path]:
    """Write one file per episode plus the manifest; return the episode paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, log in enumerate(logs):
        path = directory / f"episode-{k:04d}.tsv"
        save_log(log, path)
        paths.append(path)
    (directory / MANIFEST_NAME).write_bytes(write_manifest([p.name for p in paths]))
    return paths


class StudyError(ValueError):
    pass


def load_study(directory: Union[str, Path]) -> list[EpisodeLog]:
    """Read every episode listed in ``directory/manifest.tsv``, in order."""
    directory = Path(directory)
    manifest = directory / MANIFEST_NAME
    if not manifest.is_file():
        raise StudyError(f"{manifest}: manifest not found")
    try:
        names = read_manifest(manifest.read_bytes())
    except LogFormatError as exc:
        raise StudyError(f"{manifest}: {exc}") from None
    logs = []
    for name in names:
        path = directory / name
        try:
            logs.append(load_log(path))
        except OSError as exc:
            raise StudyError(f"{path}: {exc.strerror or exc}") from None
        except LogFormatError as exc:
            raise StudyError(f"{path}: {exc}") from None
    return logs


@dataclass(frozen=True)
class SweepRow:
    value: float
    mean_gross_gain: float
    stability: float
    mean_net_gain: float


def _format_axis_value(value) -> str:
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    return format_real(value)


def write_sweep(axis: str, rows: Sequence[SweepRow]) -> bytes:
    lines = [f"{SWEEP_MAGIC}\t{FORMAT_VERSION}", f"#axis\t{_check_text(axis, 'axis')}", "\t".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(
            "\t".join(
                [
                    _format_axis_value(row.value),
                    format_real(row.mean_gross_gain),
                    format_real(row.stability),
                    format_real(row.mean_net_gain),
                ]
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def read_sweep(data: Union[bytes, str]) -> tuple[str, list[SweepRow]]:
    lines = _split_lines(data)
    if len(lines) < 3 or lines[0] != f"{SWEEP_MAGIC}\t{FORMAT_VERSION}":
        raise LogFormatError("not a version-1 sweep table", 1)
    axis_parts = lines[1].split("\t")
    if len(axis_parts) != 2 or axis_parts[0] != "#axis":
        raise LogFormatError("expected #axis line", 2)
    if tuple(lines[2].split("\t")) != SWEEP_COLUMNS:
        raise LogFormatError("unexpected column line", 3)
    rows = []
    for i, raw in enumerate(lines[3:], start=4):
        cells = raw.split("\t")
        if len(cells) != len(SWEEP_COLUMNS):
            raise LogFormatError(f"expected {len(SWEEP_COLUMNS)} fields, found {len(cells)}", i)
        parsed = []
        for c, cell in enumerate(cells):
            try:
                parsed.append(int(cell) if c == 0 and _INTEGER.fullmatch(cell) else parse_real(cell))
            except ValueError as exc:
                raise LogFormatError(str(exc), i, c + 1) from None
        rows.append(SweepRow(*parsed))
    return axis_parts[1], rows
