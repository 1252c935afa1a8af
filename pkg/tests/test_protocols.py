import pytest
from hypothesis import given
from hypothesis import strategies as st

from complementarity.protocols import (
    SELECTOR_KINDS,
    ProtocolError,
    ProtocolKind,
    ProtocolSpec,
    is_trivial,
    run_protocol,
)
from helpers import CAT, REAL, finite


def spec(kind, **kw):
    return ProtocolSpec("p", kind, **kw)


def test_self_reliance():
    out = run_protocol(spec("self-reliance"), 3.0, 9.0, REAL)
    assert out.y_team == 3.0
    assert out.trace == ((3.0, 9.0),)
    assert out.rounds_used == 0


def test_ai_reliance():
    assert run_protocol(spec("ai-reliance"), 3.0, 9.0, REAL).y_team == 9.0


def test_averaging_biased_pair():
    y, eps = 10.0, 2.0
    out = run_protocol(spec("averaging", weight_human=0.5), y - eps, y + 0.5 * eps, REAL)
    assert out.y_team == y - 0.25 * eps


def test_weighted_average():
    assert run_protocol(spec("averaging", weight_human=0.75), 0.0, 4.0, REAL).y_team == 1.0


def test_iterative_full_step_reaches_midpoint():
    out = run_protocol(spec("iterative-deliberation", rounds=1, step=1.0), 2.0, 8.0, REAL)
    assert out.y_team == 5.0
    assert out.rounds_used == 1
    assert out.trace == ((2.0, 8.0), (5.0, 5.0))


def test_iterative_half_steps():
    out = run_protocol(spec("iterative-deliberation", rounds=2, step=0.5), 0.0, 8.0, REAL)
    assert out.trace == ((0.0, 8.0), (2.0, 6.0), (3.0, 5.0))
    assert out.y_team == 4.0


def test_oracle_selector():
    out = run_protocol(spec("oracle-selector"), 4.0, 7.0, REAL, y_true=5.0)
    assert out.y_team == 4.0


def test_oracle_ties_go_to_human():
    assert run_protocol(spec("oracle-selector"), 4.0, 6.0, REAL, y_true=5.0).y_team == 4.0
    assert run_protocol(spec("oracle-selector"), "B", "C", CAT, y_true="A").y_team == "B"


def test_oracle_requires_truth():
    with pytest.raises(ProtocolError, match="oracle requires ground truth"):
        run_protocol(spec("oracle-selector"), 4.0, 7.0, REAL)


def test_threshold_selector():
    p = spec("threshold-selector", threshold=1.0)
    assert run_protocol(p, 4.0, 5.0, REAL).y_team == 5.0
    assert run_protocol(p, 4.0, 5.5, REAL).y_team == 4.0
    assert run_protocol(p, "A", "A", CAT).y_team == "A"
    assert run_protocol(p, "A", "B", CAT).y_team == "A"


@pytest.mark.parametrize("kind", ["averaging", "iterative-deliberation"])
def test_real_only_protocols_reject_labels(kind):
    kw = {"rounds": 1} if kind == "iterative-deliberation" else {}
    with pytest.raises(ProtocolError, match="protocol requires real-scalar outputs"):
        run_protocol(spec(kind, **kw), "A", "B", CAT)


def test_cost_model():
    p = spec("iterative-deliberation", rounds=3, per_round_cost=2.0, base_cost=0.5)
    assert run_protocol(p, 0.0, 1.0, REAL).cost_incurred == 6.5
    assert run_protocol(spec("self-reliance", base_cost=0.25), 0.0, 1.0, REAL).cost_incurred == 0.25


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="averaging", weight_human=1.5),
        dict(kind="iterative-deliberation", rounds=2, step=0.0),
        dict(kind="iterative-deliberation", rounds=2, step=1.5),
        dict(kind="iterative-deliberation", rounds=-1),
        dict(kind="self-reliance", rounds=1),
        dict(kind="averaging", per_round_cost=-1.0),
        dict(kind="threshold-selector", threshold=-0.1),
        dict(kind="no-such-kind"),
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(ProtocolError):
        ProtocolSpec("p", **kwargs)


def test_is_trivial():
    assert is_trivial(spec("self-reliance"))
    assert is_trivial(spec("threshold-selector", threshold=0.5))
    assert not is_trivial(spec("averaging", weight_human=0.5))
    assert not is_trivial(spec("iterative-deliberation", rounds=3, step=0.5))
    assert {k for k in ProtocolKind if is_trivial(spec(k, **({"rounds": 1} if k == "iterative-deliberation" else {})))} == SELECTOR_KINDS


@given(finite, finite, finite, st.sampled_from(sorted(SELECTOR_KINDS)), st.floats(0, 10))
def test_selectors_pick_an_input(h, a, y, kind, threshold):
    out = run_protocol(spec(kind, threshold=threshold), h, a, REAL, y_true=y)
    assert out.y_team in (h, a)
    assert out.trace == ((h, a),)


@given(finite, finite, finite)
def test_oracle_never_worse_than_either_input(h, a, y):
    out = run_protocol(spec("oracle-selector"), h, a, REAL, y_true=y)
    loss = REAL.loss(out.y_team, y)
    assert loss <= REAL.loss(h, y) and loss <= REAL.loss(a, y)


@given(finite, finite, st.floats(0, 1), st.integers(0, 20), st.floats(0.01, 1))
def test_combining_protocols_stay_between_inputs(h, a, w, rounds, step):
    lo, hi = min(h, a), max(h, a)
    avg = run_protocol(spec("averaging", weight_human=w), h, a, REAL)
    assert lo <= avg.y_team <= hi
    it = run_protocol(spec("iterative-deliberation", rounds=rounds, step=step), h, a, REAL)
    assert lo <= it.y_team <= hi
    assert len(it.trace) == it.rounds_used + 1 == rounds + 1
    assert all(lo <= x <= hi for pair in it.trace for x in pair)


@given(st.integers(0, 10), st.integers(0, 10), st.floats(0, 100), st.floats(0, 100))
def test_cost_non_decreasing_in_rounds(r1, r2, per_round, base):
    p = spec("averaging", per_round_cost=per_round, base_cost=base)
    lo, hi = sorted((r1, r2))
    assert p.cost(lo) <= p.cost(hi)


@given(finite, finite, finite)
def test_run_protocol_deterministic(h, a, y):
    p = spec("iterative-deliberation", rounds=4, step=0.3, per_round_cost=1.0)
    assert run_protocol(p, h, a, REAL, y_true=y) == run_protocol(p, h, a, REAL, y_true=y)
