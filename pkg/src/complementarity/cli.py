"""Command-line interface.

Exit codes: 0 success, 1 domain error (unreadable or invalid input),
2 usage error. Randomness is controlled only by ``--seed``: bootstrap
defaults to 0, simulate and sweep default to the scenario's own seed.
Set ``NO_COLOR`` to suppress ANSI colour in human output.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence, TextIO

from . import __version__
from .assurance import (
    LAMBDA_JUSTIFICATION_KEY,
    ReportFormatError,
    build_report,
    fmt,
    parse_report,
    render_report,
    validate_report,
)
from .core import EpisodeLog, EvaluationError, GainReport
from .ingest import LogFormatError, StudyError, load_log, load_study, read_log, save_study, write_sweep
from .metrics import (
    DEFAULT_LEVEL,
    DEFAULT_RESAMPLES,
    bootstrap_gain,
    degenerate_notes,
    evaluate_episode,
    reliance_counts,
    split_windows,
    stability_profile,
)
from .simulator import ConfigError, SweepAxisError, load_scenario, resolve_axis, simulate, sweep

DEFAULT_SEED = 0
EVALUATION_SCHEMA = "complementarity.evaluation/1"

DOMAIN_ERRORS = (
    EvaluationError,
    LogFormatError,
    StudyError,
    ConfigError,
    ReportFormatError,
    OSError,
    ValueError,
)


class UsageError(Exception):
    pass


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text!r}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _level(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return value


def _color(stream: TextIO) -> bool:
    return "NO_COLOR" not in os.environ and hasattr(stream, "isatty") and stream.isatty()


def _load_episodes(path: Path) -> list[EpisodeLog]:
    if path.is_dir():
        return load_study(path)
    try:
        return [load_log(path)]
    except LogFormatError as exc:
        raise StudyError(f"{path}: {exc}") from None


def _gain_dict(report: GainReport) -> dict:
    return {
        "episode_id": report.episode_id,
        "n": report.n,
        "loss_human": report.loss_human,
        "loss_ai": report.loss_ai,
        "loss_team": report.loss_team,
        "ctp": report.ctp,
        "gross_gain": report.gross_gain,
        "total_cost": report.total_cost,
        "lambda": report.lambda_,
        "net_gain": report.net_gain,
        "efficient": report.efficient.value,
        "efficiency_ratio": report.efficiency_ratio,
    }


def _machine(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def cmd_evaluate(args, out: TextIO, err: TextIO) -> int:
    logs = _load_episodes(Path(args.path))
    if args.window is not None:
        if len(logs) != 1:
            raise UsageError("--window applies to a single episode file, not a study directory")
        windows = split_windows(logs[0], args.window)
    else:
        windows = logs

    entries = []
    for log in logs:
        report = evaluate_episode(log, args.lambda_, args.tolerance)
        entry = {
            "report": _gain_dict(report),
            "cost_unit": log.cost_unit,
            "reliance": {k.value: v for k, v in reliance_counts(log).items()},
            "notes": degenerate_notes(report),
        }
        if args.bootstrap:
            ci = bootstrap_gain(log, args.lambda_, args.resamples, args.level, args.seed)
            entry["bootstrap"] = {
                "statistic": ci.statistic.value,
                "point": ci.point,
                "lower": ci.lower,
                "upper": ci.upper,
                "level": ci.level,
                "resamples": ci.resamples,
                "seed": ci.seed,
            }
        entries.append(entry)

    payload = {"schema": EVALUATION_SCHEMA, "toolkit_version": __version__, "episodes": entries}
    if args.window is not None or len(logs) > 1:
        profile = stability_profile(windows, args.lambda_, args.tolerance)
        payload["stability"] = {
            "window_size": profile.window_size,
            "ctp_series": list(profile.ctp_series),
            "stability": profile.stability,
            "gain_series": list(profile.gain_series),
            "net_gain_series": list(profile.net_gain_series),
        }

    machine = _machine(payload)
    if args.out:
        Path(args.out).write_text(machine, encoding="utf-8")
    if args.format == "machine":
        out.write(machine)
    else:
        out.write(_human_evaluation(payload))
    for entry in entries:
        for note in entry["notes"]:
            err.write(f"note: {entry['report']['episode_id']}: {note}\n")
    return 0


def _human_evaluation(payload: dict) -> str:
    lines = []
    for entry in payload["episodes"]:
        r = entry["report"]
        unit = entry["cost_unit"]
        lines += [
            f"episode={r['episode_id']}",
            f"n={r['n']}",
            f"loss_human={fmt(r['loss_human'])}",
            f"loss_ai={fmt(r['loss_ai'])}",
            f"loss_team={fmt(r['loss_team'])}",
            f"ctp={r['ctp']}",
            f"gross_gain={fmt(r['gross_gain'])}",
            f"total_cost={fmt(r['total_cost'])} {unit}",
            f"lambda={fmt(r['lambda'])} per {unit}",
            f"net_gain={fmt(r['net_gain'])}",
            f"efficiency={r['efficient']}",
            f"efficiency_ratio={fmt(r['efficiency_ratio'])}",
        ]
        counts = ", ".join(f"{k}={v}" for k, v in entry["reliance"].items() if v)
        lines.append(f"reliance: {counts}")
        if "bootstrap" in entry:
            b = entry["bootstrap"]
            lines.append(
                f"bootstrap {b['statistic']}: {fmt(b['point'])} "
                f"[{fmt(b['lower'])}, {fmt(b['upper'])}] level={fmt(b['level'])} "
                f"resamples={b['resamples']} seed={b['seed']}"
            )
        lines += [f"note: {n}" for n in entry["notes"]]
        lines.append("")
    if "stability" in payload:
        s = payload["stability"]
        lines.append(
            f"stability={fmt(s['stability'])} windows={len(s['ctp_series'])} "
            f"window_size={s['window_size']} ctp_series={''.join(map(str, s['ctp_series']))}"
        )
    return "\n".join(lines).rstrip("\n") + "\n"


def _scenario(args):
    config = load_scenario(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return config


def cmd_simulate(args, out: TextIO, err: TextIO) -> int:
    config = _scenario(args)
    logs = simulate(config)
    paths = save_study(logs, args.out)
    for log, path in zip(logs, paths):
        r = evaluate_episode(log, config.lambda_)
        out.write(
            f"{path.name}\tepisode={r.episode_id}\tctp={r.ctp}\tgross_gain={fmt(r.gross_gain)}"
            f"\tnet_gain={fmt(r.net_gain)}\t{r.efficient.value}\n"
        )
    err.write(f"wrote {len(paths)} episodes and manifest.tsv to {args.out}\n")
    return 0


def _parse_values(text: str) -> list:
    values = []
    for part in text.split(","):
        part = part.strip()
        try:
            values.append(int(part) if part.lstrip("+-").isdigit() else float(part))
        except ValueError:
            raise UsageError(f"--values: {part!r} is not a number") from None
        if isinstance(values[-1], float) and not math.isfinite(values[-1]):
            raise UsageError(f"--values: {part!r} is not finite")
    if not values:
        raise UsageError("--values: no values given")
    return values


def cmd_sweep(args, out: TextIO, err: TextIO) -> int:
    try:
        axis = resolve_axis(args.axis)
    except SweepAxisError as exc:
        raise UsageError(str(exc)) from None
    values = _parse_values(args.values)
    config = _scenario(args)
    rows = sweep(config, axis, values)
    data = write_sweep(axis, rows)
    if args.out:
        Path(args.out).write_bytes(data)
    out.write(f"{axis}\tmean_gross_gain\tstability\tmean_net_gain\n")
    for row in rows:
        out.write(f"{fmt(row.value)}\t{fmt(row.mean_gross_gain)}\t{fmt(row.stability)}\t{fmt(row.mean_net_gain)}\n")
    return 0


def _load_narrative(path: Optional[str]) -> dict:
    if not path:
        return {}
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict) or not all(isinstance(k, str) and isinstance(v, str) for k, v in data.items()):
        raise ValueError(f"{path}: narrative file must be a JSON object mapping item ids to text")
    return data


def cmd_report(args, out: TextIO, err: TextIO) -> int:
    logs = load_study(args.log_dir)
    narrative = _load_narrative(args.narrative)
    report = build_report(
        logs,
        args.lambda_,
        narrative,
        lambda_justification=args.lambda_justification or narrative.get(LAMBDA_JUSTIFICATION_KEY, ""),
        report_id=args.report_id,
        created_at=args.created_at,
        bootstrap_resamples=args.resamples if args.bootstrap else None,
        bootstrap_level=args.level,
        seed=args.seed,
    )
    if args.out:
        Path(args.out).write_bytes(render_report(report, "machine"))
    out.write(render_report(report, "human", color=_color(out)).decode("utf-8"))
    deficiencies = validate_report(report)
    if deficiencies:
        err.write(f"{len(deficiencies)} of 11 checklist items incomplete:\n")
        for d in deficiencies:
            err.write(f"  {d}\n")
    return 0


def cmd_validate(args, out: TextIO, err: TextIO) -> int:
    data = Path(args.path).read_bytes()
    if data.lstrip()[:1] == b"{":
        report = parse_report(data)
        deficiencies = validate_report(report)
        for d in deficiencies:
            out.write(f"{d}\n")
        complete = 11 - sum(1 for d in deficiencies if d.requirement)
        err.write(f"{complete}/11 complete\n")
        return 0
    try:
        log = read_log(data)
    except LogFormatError as exc:
        raise StudyError(f"{args.path}: {exc}") from None
    out.write(f"{log.episode_id}: valid ({len(log.records)} records)\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="complementarity",
        description="Evaluate, simulate and document human-AI team complementarity.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def bootstrap_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--bootstrap", action="store_true", help="add a percentile bootstrap interval for the gross gain")
        p.add_argument("--resamples", type=int, default=DEFAULT_RESAMPLES)
        p.add_argument("--level", type=_level, default=DEFAULT_LEVEL)
        p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)

    p = sub.add_parser("evaluate", help="score an episode log or a study directory")
    p.add_argument("path", help="episode log file or directory with manifest.tsv")
    p.add_argument("--lambda", dest="lambda_", type=_positive, required=True, help="loss units per cost unit")
    p.add_argument("--window", type=int, help="records per stability window (single log only)")
    p.add_argument("--tolerance", type=float, default=0.0, help="minimum gain counted as complementarity")
    bootstrap_flags(p)
    p.add_argument("--format", choices=("human", "machine"), default="human")
    p.add_argument("--out", help="also write the machine output to this file")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("simulate", help="generate episode logs from a scenario file")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=_seed, help="override the scenario seed")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("sweep", help="vary one scenario parameter and tabulate results")
    p.add_argument("config")
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out", help="sweep table path")
    p.add_argument("--seed", type=_seed, help="override the scenario seed")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("report", help="build the assurance checklist for a study")
    p.add_argument("log_dir")
    p.add_argument("--lambda", dest="lambda_", type=_positive, required=True)
    p.add_argument("--lambda-justification", default="")
    p.add_argument("--narrative", help="JSON object mapping checklist item ids to text")
    p.add_argument("--out", help="machine-readable report path")
    p.add_argument("--report-id")
    p.add_argument("--created-at", help="timestamp recorded in the report (omitted by default)")
    bootstrap_flags(p)
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("validate", help="check an assurance report or an episode log")
    p.add_argument("path")
    p.set_defaults(handler=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "window", None) is not None and args.window < 1:
        parser.print_usage(err)
        err.write("error: --window must be >= 1\n")
        return 2
    if getattr(args, "resamples", DEFAULT_RESAMPLES) < 100:
        parser.print_usage(err)
        err.write("error: --resamples must be >= 100\n")
        return 2
    try:
        return args.handler(args, out, err)
    except UsageError as exc:
        parser.print_usage(err)
        err.write(f"error: {exc}\n")
        return 2
    except SweepAxisError as exc:
        parser.print_usage(err)
        err.write(f"error: {exc}\n")
        return 2
    except DOMAIN_ERRORS as exc:
        err.write(f"error: {exc}\n")
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
