"""Property tests for the metric invariants."""

from fractions import Fraction

from hypothesis import assume, given
from hypothesis import strategies as st

from complementarity.core import Efficiency, RelianceVerdict
from complementarity.metrics import (
    LossSummary,
    classify_reliance,
    ctp,
    efficiency_verdict,
    evaluate_episode,
    gross_gain,
    net_gain,
    stability_profile,
)
from helpers import REAL, episode_logs, make_log

loss = st.floats(min_value=0, max_value=1e6, allow_nan=False, allow_infinity=False)
positive = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False, allow_infinity=False)
cost = st.floats(min_value=0, max_value=1e6, allow_nan=False, allow_infinity=False)
rational = st.fractions(min_value=-100, max_value=100, max_denominator=1000)
pos_rational = st.fractions(min_value=Fraction(1, 1000), max_value=100, max_denominator=1000)


@given(loss, loss, loss)
def test_ctp_iff_positive_gain(h, a, t):
    s = LossSummary(h, a, t, 1)
    assert (ctp(s) == 1) == (gross_gain(s) > 0)


@given(loss, loss)
def test_perfect_member_blocks_complementarity(other, team):
    assert ctp(LossSummary(0.0, other, team, 1)) == 0
    assert ctp(LossSummary(other, 0.0, team, 1)) == 0


@given(episode_logs(), positive)
def test_gain_report_invariants(log, lam):
    r = evaluate_episode(log, lam)
    assert (r.ctp == 1) == (r.gross_gain > 0)
    assert r.net_gain == float(Fraction(r.gross_gain) - Fraction(lam) * Fraction(r.total_cost))
    assert (r.efficient is Efficiency.UNDEFINED_ZERO_COST) == (r.total_cost == 0)
    if r.loss_ai == 0 or r.loss_human == 0:
        assert r.ctp == 0


@given(rational, pos_rational, cost.map(Fraction), cost.map(Fraction))
def test_net_gain_strictly_decreasing_in_cost(g, lam, c1, c2):
    assume(c1 != c2)
    lo, hi = sorted((c1, c2))
    assert net_gain(g, lam, lo) > net_gain(g, lam, hi)


@given(loss, positive, cost, cost)
def test_float_net_gain_monotone_in_cost(g, lam, c1, c2):
    lo, hi = sorted((c1, c2))
    assert net_gain(g, lam, lo) >= net_gain(g, lam, hi)


@given(st.floats(-1e3, 1e3), positive, positive, st.floats(1e-6, 1e3))
def test_efficiency_never_improves_with_lambda(g, lam1, lam2, c):
    lo, hi = sorted((lam1, lam2))
    if efficiency_verdict(g, lo, c) is Efficiency.INEFFICIENT:
        assert efficiency_verdict(g, hi, c) is Efficiency.INEFFICIENT


@given(episode_logs())
def test_reliance_partition(log):
    for rec in log.records:
        verdict = classify_reliance(rec, log.task)
        assert verdict in RelianceVerdict
        assert (verdict is RelianceVerdict.NON_RELIANCE_OUTPUT) == (rec.y_team not in (rec.y_human, rec.y_ai))
        assert classify_reliance(rec, log.task) is verdict


@given(st.lists(st.booleans(), min_size=1, max_size=30))
def test_stability_is_fraction_of_successes(series):
    logs = [
        make_log([(0.0, -1.0, 0.5, 0.25 if win else 0.75)], episode_id=f"e{k}")
        for k, win in enumerate(series)
    ]
    p = stability_profile(logs, 1.0)
    assert list(p.ctp_series) == [int(w) for w in series]
    assert p.stability == sum(series) / len(series)


@given(episode_logs(task=REAL, min_size=2))
def test_evaluation_is_order_sensitive_only_in_ids(log):
    shuffled = type(log)(log.episode_id, log.task, log.protocol_id, log.cost_unit, tuple(reversed(log.records)))
    a, b = evaluate_episode(log, 0.5), evaluate_episode(shuffled, 0.5)
    # Exact means make the result independent of record order.
    assert (a.loss_human, a.loss_ai, a.loss_team, a.ctp) == (b.loss_human, b.loss_ai, b.loss_team, b.ctp)
