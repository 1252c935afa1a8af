"""Shared builders and hypothesis strategies for the test suite."""

from __future__ import annotations

from hypothesis import strategies as st

from complementarity.core import EpisodeLog, InteractionRecord, TaskSpec

REAL = TaskSpec("reg", "real-scalar", "squared-error")
ABS = TaskSpec("reg-abs", "real-scalar", "absolute-error")
CAT = TaskSpec("cls", "categorical", "zero-one", ("A", "B", "C"))
BIN = TaskSpec("bin", "binary", "zero-one", ("neg", "pos"))


def make_log(rows, task=REAL, costs=None, episode_id="ep", protocol_id="proto", **extra):
    """Episode from ``(y_true, y_human, y_ai, y_team)`` tuples."""
    costs = costs if costs is not None else [0.0] * len(rows)
    records = tuple(
        InteractionRecord(f"r{i}", *row, cost=c, **{k: v[i] for k, v in extra.items()})
        for i, (row, c) in enumerate(zip(rows, costs))
    )
    return EpisodeLog(episode_id, task, protocol_id, "minute", records)


def biased_pair_log(eps, truths=(0.0,) * 10, cost=0.1):
    rows = [(t, t - eps, t + 0.5 * eps, 0.5 * ((t - eps) + (t + 0.5 * eps))) for t in truths]
    return make_log(rows, costs=[cost] * len(rows), episode_id=f"fn9-{eps!r}")


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
costs = st.floats(min_value=0, max_value=1e3, allow_nan=False, allow_infinity=False)
text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc")),
    min_size=1,
    max_size=12,
)


@st.composite
def tasks(draw):
    kind = draw(st.sampled_from(["real-scalar", "categorical", "binary"]))
    if kind == "real-scalar":
        return TaskSpec(draw(text), kind, draw(st.sampled_from(["squared-error", "absolute-error"])))
    size = 2 if kind == "binary" else draw(st.integers(1, 5))
    labels = draw(
        st.lists(text.map(str.strip).filter(bool), min_size=size, max_size=size, unique=True)
    )
    return TaskSpec(draw(text), kind, "zero-one", tuple(labels))


timestamps = st.datetimes().map(lambda d: d.isoformat())


@st.composite
def episode_logs(draw, task=None, min_size=1, max_size=20):
    task = task or draw(tasks())
    values = st.sampled_from(task.labels) if task.output_kind.is_discrete else finite
    n = draw(st.integers(min_size, max_size))
    ids = draw(st.lists(text, min_size=n, max_size=n, unique=True))
    with_ts = draw(st.booleans())
    with_rounds = draw(st.booleans())
    records = []
    for rid in ids:
        records.append(
            InteractionRecord(
                rid,
                draw(values),
                draw(values),
                draw(values),
                draw(values),
                cost=draw(costs),
                timestamp=draw(st.none() | timestamps) if with_ts else None,
                rounds=draw(st.none() | st.integers(0, 50)) if with_rounds else None,
            )
        )
    return EpisodeLog(draw(text), task, draw(text), draw(text), tuple(records))
