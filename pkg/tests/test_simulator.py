import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from complementarity import rng
from complementarity.ingest import write_log
from complementarity.metrics import evaluate_episode
from complementarity.protocols import ProtocolSpec
from complementarity.simulator import (
    AgentModel,
    ConfigError,
    ScenarioConfig,
    SweepAxisError,
    TruthDistribution,
    bundled_scenarios,
    dump_scenario,
    load_scenario,
    parse_scenario,
    resolve_axis,
    row_seed,
    simulate,
    sweep,
)
from helpers import BIN, CAT, REAL

SCENARIOS = bundled_scenarios()


def biased_pair(**changes):
    return dataclasses.replace(load_scenario(SCENARIOS["biased_pair"]), **changes)


def label_config(human, ai, protocol="self-reliance", task=CAT, n=50, seed=4):
    weights = (1 / len(task.labels),) * len(task.labels)
    return ScenarioConfig(
        "labels", task, n, 3, human, ai, ProtocolSpec("p", protocol),
        TruthDistribution("categorical-weights", weights=weights), 0.1, seed,
    )


# -- rng ---------------------------------------------------------------------


def test_rng_matches_reference_stream():
    idx = np.arange(50, dtype=np.uint64)
    assert rng.uniform(123, 2, idx, 1, 0).tolist() == [oracles.uniform(123, 2, i, 1, 0) for i in range(50)]
    normals = rng.standard_normal(7, 0, idx, 2)
    ref = [oracles.normal(7, 0, i, 2) for i in range(50)]
    assert normals.tolist() == pytest.approx(ref, rel=1e-13, abs=1e-15)


def test_rng_range_and_order_independence():
    u = rng.uniform(2**64 - 1, np.arange(10000, dtype=np.uint64))
    assert 0.0 <= u.min() and u.max() < 1.0
    rev = rng.uniform(2**64 - 1, np.arange(10000, dtype=np.uint64)[::-1])
    assert np.array_equal(u, rev[::-1])


# -- bundled scenarios -------------------------------------------------------


def test_bundled_scenarios_present_and_valid():
    assert {"biased_pair", "perfect_ai", "clinic_dermatology", "student_llm", "forensic_lab"} <= set(SCENARIOS)
    for path in SCENARIOS.values():
        config = load_scenario(path)
        assert simulate(dataclasses.replace(config, n_episodes=1, n_records=3))


def test_biased_pair_scenario():
    config = biased_pair()
    for log in simulate(config):
        r = evaluate_episode(log, config.lambda_)
        assert r.ctp == 1
        assert r.gross_gain == pytest.approx(0.1875, rel=1e-9)
        assert r.total_cost == pytest.approx(1.0)


def test_perfect_ai_scenario():
    config = load_scenario(SCENARIOS["perfect_ai"])
    assert all(evaluate_episode(log, 1.0).ctp == 0 for log in simulate(config))


def test_simulation_is_deterministic():
    config = load_scenario(SCENARIOS["clinic_dermatology"])
    first = [write_log(log) for log in simulate(config)]
    assert first == [write_log(log) for log in simulate(config)]
    other = [write_log(log) for log in simulate(dataclasses.replace(config, seed=config.seed + 1))]
    assert first != other


def test_episodes_are_independent_of_count():
    config = biased_pair(n_episodes=5)
    assert simulate(config)[:2] == simulate(dataclasses.replace(config, n_episodes=2))


def test_record_cost_and_rounds_from_protocol():
    config = biased_pair(protocol=ProtocolSpec("it", "iterative-deliberation", rounds=3, per_round_cost=2.0, base_cost=0.5))
    log = simulate(config)[0]
    assert {(r.cost, r.rounds) for r in log.records} == {(6.5, 3)}


def test_label_flip_zero_rate_equals_perfect():
    flip = label_config(AgentModel("label-flip", error_rate=0.0), AgentModel("label-flip", error_rate=0.3))
    perfect = dataclasses.replace(flip, human=AgentModel.perfect())
    assert simulate(flip) == simulate(perfect)


def test_label_flip_rates_and_confusion():
    config = label_config(
        AgentModel("label-flip", error_rate=1.0, confusion=((0, 1, 0), (0, 0, 1), (1, 0, 0))),
        AgentModel("label-flip", error_rate=1.0),
        n=200,
    )
    nxt = {"A": "B", "B": "C", "C": "A"}
    for log in simulate(config):
        for r in log.records:
            assert r.y_human == nxt[r.y_true]
            assert r.y_ai != r.y_true


def test_label_flip_matches_reference():
    config = label_config(AgentModel("label-flip", error_rate=0.25), AgentModel.perfect(), task=BIN, n=100, seed=99)
    labels = BIN.labels
    for e, log in enumerate(simulate(config)):
        for i, r in enumerate(log.records):
            truth = labels[0] if oracles.uniform(99, e, i, 0, 0) < 0.5 else labels[1]
            flipped = oracles.uniform(99, e, i, 1, 2) < 0.25
            assert r.y_true == truth
            assert r.y_human == (labels[1 - labels.index(truth)] if flipped else truth)


def test_both_perfect_degenerates():
    config = biased_pair(human=AgentModel.perfect(), ai=AgentModel.perfect())
    for log in simulate(config):
        r = evaluate_episode(log, 0.1)
        assert (r.loss_human, r.loss_ai, r.loss_team, r.ctp, r.gross_gain) == (0, 0, 0, 0, 0)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["self-reliance", "ai-reliance", "oracle-selector", "threshold-selector"]), st.integers(0, 2**64 - 1))
def test_selector_records_pick_an_input(kind, seed):
    config = biased_pair(
        seed=seed,
        n_records=20,
        n_episodes=2,
        human=AgentModel("additive-bias", bias=-1.0, noise_sd=2.0),
        ai=AgentModel("additive-bias", bias=0.5, noise_sd=1.0),
        protocol=ProtocolSpec("sel", kind, threshold=1.0),
    )
    for log in simulate(config):
        assert all(r.y_team in (r.y_human, r.y_ai) for r in log.records)


# -- sweeps ------------------------------------------------------------------


def test_lambda_sweep_is_linear():
    rows = sweep(biased_pair(), "lambda", [0.05, 0.1875, 0.5])
    nets = [r.mean_net_gain for r in rows]
    assert nets == pytest.approx([0.1375, 0.0, -0.3125], abs=1e-9)
    assert all(r.stability == 1.0 for r in rows)


def test_rounds_sweep_net_gain_non_increasing():
    base = biased_pair(protocol=ProtocolSpec("it", "iterative-deliberation", rounds=0, step=1.0, per_round_cost=0.05))
    rows = sweep(base, "rounds", [0, 1, 2])
    assert len({round(r.mean_gross_gain, 9) for r in rows}) == 1
    nets = [r.mean_net_gain for r in rows]
    assert nets[0] >= nets[1] >= nets[2]


def test_noise_sweep_matches_reference_simulation():
    base = biased_pair(n_records=15, n_episodes=4, seed=31)
    values = [0.0, 0.5, 2.0]
    rows = sweep(base, "ai.noise_sd", values)
    for k, (value, row) in enumerate(zip(values, rows)):
        ref = oracles.reference_additive_averaging(
            oracles.row_seed(31, k), 15, 4, 0.0, 100.0, (-1.0, 0.0), (0.5, value), 0.5, 0.1, 0.1
        )
        assert row.value == value
        assert row.mean_gross_gain == pytest.approx(ref[0], rel=1e-9, abs=1e-12)
        assert row.stability == ref[1]
        assert row.mean_net_gain == pytest.approx(ref[2], rel=1e-9, abs=1e-12)


def test_row_seed_rule():
    assert row_seed(5, 0) == 5
    assert row_seed(2**64 - 1, 1) == oracles.row_seed(2**64 - 1, 1)


def test_sweep_axes():
    assert resolve_axis("rounds") == "protocol.rounds"
    assert resolve_axis("ai.noise_sd") == "ai.noise_sd"
    with pytest.raises(SweepAxisError, match="ambiguous"):
        resolve_axis("noise_sd")
    with pytest.raises(SweepAxisError, match="unknown axis"):
        sweep(biased_pair(), "colour", [1])
    with pytest.raises(ConfigError, match="protocol.weight_human"):
        sweep(biased_pair(), "weight_human", [2.0])
    with pytest.raises(ConfigError, match="n_records"):
        sweep(biased_pair(), "n_records", [1.5])


# -- config files ------------------------------------------------------------


def test_dump_then_parse_round_trips():
    for path in SCENARIOS.values():
        config = load_scenario(path)
        assert parse_scenario(dump_scenario(config)) == config


def _text():
    return SCENARIOS["biased_pair"].read_text()


@pytest.mark.parametrize(
    "old, new, field",
    [
        ("n_records = 10", "n_records = 0", "n_records"),
        ("n_records = 10", "n_records = ten", "n_records"),
        ("lambda = 0.1", "lambda = -1", "lambda"),
        ("noise_sd = 0.0\n\n[ai]", "noise_sd = -2\n\n[ai]", "human.noise_sd"),
        ("kind = averaging", "kind = telepathy", "protocol.kind"),
        ("weight_human = 0.5", "weight_human = 3", "protocol.weight_human"),
        ("lo = 0.0", "lo = 500.0", "truth.lo"),
        ("loss_kind = squared-error", "loss_kind = zero-one", "task"),
        ("seed = 9", "seed = 9\nsneed = 3", "scenario.sneed"),
    ],
)
def test_config_errors_name_field_and_line(old, new, field):
    text = _text()
    assert old in text
    bad = text.replace(old, new, 1)
    with pytest.raises(ConfigError) as info:
        parse_scenario(bad, source="x.ini")
    message = str(info.value)
    assert field in message and message.startswith("x.ini:")
    assert info.value.line is not None
    assert bad.splitlines()[info.value.line - 1].split("=")[0].strip() in new


def test_missing_section_and_duplicate_key():
    text = _text()
    with pytest.raises(ConfigError, match="protocol"):
        parse_scenario(text[: text.index("[protocol]")])
    with pytest.raises(ConfigError) as info:
        parse_scenario(text.replace("seed = 9", "seed = 9\nseed = 10"))
    assert info.value.line is not None


def test_confusion_rows_must_sum_to_one():
    with pytest.raises(ConfigError, match="confusion"):
        AgentModel("label-flip", error_rate=0.1, confusion=((0.5, 0.4), (0.0, 1.0)))
    AgentModel("label-flip", error_rate=0.1, confusion=((0.3, 0.7 + 5e-10), (0.0, 1.0)))


def test_cross_field_validation():
    with pytest.raises(ConfigError, match="human.kind"):
        dataclasses.replace(biased_pair(), human=AgentModel("label-flip", error_rate=0.1))
    with pytest.raises(ConfigError, match="protocol.kind"):
        label_config(AgentModel.perfect(), AgentModel.perfect(), protocol="averaging")
    with pytest.raises(ConfigError, match="truth.weights"):
        dataclasses.replace(
            label_config(AgentModel.perfect(), AgentModel.perfect()),
            truth=TruthDistribution("categorical-weights", weights=(0.5, 0.5)),
        )
