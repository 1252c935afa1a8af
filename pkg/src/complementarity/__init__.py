"""Evaluate human-AI teams on prediction tasks.

Complementarity (does the team beat both its members?), cost-aware gain
measures, reliance classification, protocol simulation and an assurance
checklist report.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Efficiency,
    EpisodeLog,
    EvaluationError,
    GainReport,
    InteractionRecord,
    LossKind,
    OutputKind,
    RelianceVerdict,
    TaskSpec,
    Violation,
    validate_episode,
)
from .metrics import (  # noqa: E402
    BootstrapInterval,
    LossSummary,
    StabilityProfile,
    aggregate_losses,
    bootstrap_gain,
    classify_reliance,
    ctp,
    efficiency_verdict,
    evaluate_episode,
    gross_gain,
    net_gain,
    stability_profile,
)
from .protocols import ProtocolKind, ProtocolOutcome, ProtocolSpec, is_trivial, run_protocol  # noqa: E402

__all__ = [
    "BootstrapInterval",
    "Efficiency",
    "EpisodeLog",
    "EvaluationError",
    "GainReport",
    "InteractionRecord",
    "LossKind",
    "LossSummary",
    "OutputKind",
    "ProtocolKind",
    "ProtocolOutcome",
    "ProtocolSpec",
    "RelianceVerdict",
    "StabilityProfile",
    "TaskSpec",
    "Violation",
    "aggregate_losses",
    "bootstrap_gain",
    "classify_reliance",
    "ctp",
    "efficiency_verdict",
    "evaluate_episode",
    "gross_gain",
    "is_trivial",
    "net_gain",
    "run_protocol",
    "stability_profile",
    "validate_episode",
]
