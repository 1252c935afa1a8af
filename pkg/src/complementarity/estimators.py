"""scikit-learn style wrappers.

``TeamProtocol`` behaves like a predictor whose input matrix holds the human
and AI predictions (two columns) and whose output is the team prediction.
``ComplementarityEvaluator`` is fitted on a three-column matrix of human, AI
and team predictions against the ground truth and exposes the complementarity
measures as fitted attributes. Both support ``get_params``/``set_params`` and
so compose with ``clone``, grid searches and pipelines.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .core import EpisodeLog, InteractionRecord, LossKind, OutputKind, TaskSpec
from .metrics import evaluate_episode, reliance_counts
from .protocols import ProtocolSpec, run_protocol


def _task(loss: str, labels) -> TaskSpec:
    loss_kind = LossKind(loss)
    if loss_kind is LossKind.ZERO_ONE:
        if labels is None:
            raise ValueError("zero-one loss needs the label set")
        labels = tuple(str(x) for x in labels)
        kind = OutputKind.BINARY if len(labels) == 2 else OutputKind.CATEGORICAL
        return TaskSpec("estimator", kind, loss_kind, labels)
    return TaskSpec("estimator", OutputKind.REAL_SCALAR, loss_kind)


def _column_values(task: TaskSpec, column: np.ndarray) -> list:
    if task.output_kind.is_discrete:
        return [str(v) for v in column]
    return [float(v) for v in column]


def _check_matrix(X, task: TaskSpec, n_columns: int) -> np.ndarray:
    dtype = None if task.output_kind.is_discrete else np.float64
    X = check_array(X, dtype=dtype, ensure_all_finite=not task.output_kind.is_discrete)
    if X.shape[1] != n_columns:
        raise ValueError(f"expected {n_columns} columns, got {X.shape[1]}")
    return X


class TeamProtocol(BaseEstimator):
    """Interaction protocol as a predictor over (human, AI) prediction pairs."""

    def __init__(
        self,
        kind="averaging",
        weight_human=0.5,
        threshold=0.0,
        rounds=0,
        step=0.5,
        per_round_cost=0.0,
        base_cost=0.0,
        loss="squared-error",
        labels=None,
    ):
        self.kind = kind
        self.weight_human = weight_human
        self.threshold = threshold
        self.rounds = rounds
        self.step = step
        self.per_round_cost = per_round_cost
        self.base_cost = base_cost
        self.loss = loss
        self.labels = labels

    def fit(self, X, y=None):
        self.task_ = _task(self.loss, self.labels)
        self.spec_ = ProtocolSpec(
            protocol_id=str(self.kind),
            kind=self.kind,
            threshold=self.threshold,
            weight_human=self.weight_human,
            rounds=self.rounds,
            step=self.step,
            per_round_cost=self.per_round_cost,
            base_cost=self.base_cost,
        )
        _check_matrix(X, self.task_, 2)
        self.n_features_in_ = 2
        return self

    def _outcomes(self, X, y_true=None):
        check_is_fitted(self, "spec_")
        X = _check_matrix(X, self.task_, 2)
        truths = [None] * len(X)
        if y_true is not None:
            truths = _column_values(self.task_, column_or_1d(y_true))
        human = _column_values(self.task_, X[:, 0])
        ai = _column_values(self.task_, X[:, 1])
        return [run_protocol(self.spec_, h, a, self.task_, y_true=t) for h, a, t in zip(human, ai, truths)]

    def predict(self, X, y_true=None):
        """Team predictions; ``y_true`` is needed only by the oracle selector."""
        outcomes = self._outcomes(X, y_true)
        return np.asarray([o.y_team for o in outcomes], dtype=None if self.task_.output_kind.is_discrete else np.float64)

    def cost(self, X, y_true=None):
        """Per-instance interaction cost."""
        return np.asarray([o.cost_incurred for o in self._outcomes(X, y_true)], dtype=np.float64)


class ComplementarityEvaluator(BaseEstimator):
    """Complementarity of a team relative to its human and AI members.

    Columns of ``X`` are the human, AI and team predictions; ``y`` holds the
    ground truth. ``conversion_rate`` is λ in loss units per cost unit.
    """

    def __init__(self, loss="squared-error", conversion_rate=1.0, tolerance=0.0, labels=None):
        self.loss = loss
        self.conversion_rate = conversion_rate
        self.tolerance = tolerance
        self.labels = labels

    def _episode(self, X, y, sample_cost):
        task = _task(self.loss, self.labels)
        X = _check_matrix(X, task, 3)
        y = column_or_1d(y)
        if len(y) != len(X):
            raise ValueError(f"X has {len(X)} rows but y has {len(y)} entries")
        costs = np.zeros(len(X)) if sample_cost is None else column_or_1d(sample_cost).astype(np.float64)
        if len(costs) != len(X):
            raise ValueError("sample_cost must have one entry per row")
        truths = _column_values(task, y)
        cols = [_column_values(task, X[:, j]) for j in range(3)]
        records = tuple(
            InteractionRecord(str(i), truths[i], cols[0][i], cols[1][i], cols[2][i], cost=float(costs[i]))
            for i in range(len(X))
        )
        return EpisodeLog("estimator", task, "estimator", "cost-unit", records)

    def fit(self, X, y, sample_cost=None):
        log = self._episode(X, y, sample_cost)
        report = evaluate_episode(log, self.conversion_rate, self.tolerance)
        self.report_ = report
        self.loss_human_ = report.loss_human
        self.loss_ai_ = report.loss_ai
        self.loss_team_ = report.loss_team
        self.ctp_ = report.ctp
        self.gross_gain_ = report.gross_gain
        self.total_cost_ = report.total_cost
        self.net_gain_ = report.net_gain
        self.efficiency_ = report.efficient
        self.reliance_counts_ = reliance_counts(log)
        self.n_features_in_ = 3
        return self

    def score(self, X, y, sample_cost=None):
        """Gross complementarity gain on ``(X, y)``; higher is better."""
        log = self._episode(X, y, sample_cost)
        return evaluate_episode(log, self.conversion_rate, self.tolerance).gross_gain
