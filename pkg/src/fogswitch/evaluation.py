"""Switching-decision accuracy and response-time improvement.

Confusion-matrix rows are the correct class, columns the planner's choice::

                     predicted remote   predicted edge
    correct remote   true_remote        false_edge
    correct edge     false_remote       true_edge
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .domain import FeatureVector, ServiceInstance, Tier
from .errors import EmptyMatrix, MissingTier
from .fogsim import (
    ANALYTIC,
    MonitoringRecord,
    RtModelParams,
    WorkloadRanges,
    analytic_rt,
    default_instances,
    generate_monitoring,
    label_correct_decision,
    sample_workloads,
)
from .planner import by_id, choose, plan, train_all
from .predictors import RegressorKind

log = logging.getLogger(__name__)

DECISION_CSV_HEADER = ("idx", "k", "it", "n", "d", "correct", "predicted", "chosen_instance", "cum_accuracy", "rti")
ORACLE = "oracle"


@dataclass(frozen=True)
class ConfusionMatrix:
    true_remote: int = 0
    false_edge: int = 0
    false_remote: int = 0
    true_edge: int = 0

    def __post_init__(self):
        if min(self.true_remote, self.false_edge, self.false_remote, self.true_edge) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.true_remote + self.false_edge + self.false_remote + self.true_edge

    def add(self, correct: Tier, predicted: Tier) -> "ConfusionMatrix":
        cell = {
            (Tier.REMOTE, Tier.REMOTE): "true_remote",
            (Tier.REMOTE, Tier.EDGE): "false_edge",
            (Tier.EDGE, Tier.REMOTE): "false_remote",
            (Tier.EDGE, Tier.EDGE): "true_edge",
        }[(correct, predicted)]
        counts = asdict(self)
        counts[cell] += 1
        return ConfusionMatrix(**counts)


def _ratio(num: int, den: int) -> float:
    # 0/0 means the class never occurred: nothing was got wrong
    return 1.0 if den == 0 else num / den


@dataclass(frozen=True)
class MetricsReport:
    remote_precision: float
    edge_precision: float
    remote_recall: float
    edge_recall: float
    overall_accuracy: float
    confusion: ConfusionMatrix

    def to_json(self) -> dict:
        return asdict(self)


def compute_metrics(cm: ConfusionMatrix) -> MetricsReport:
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix has no decisions")
    tr, fe, fr, te = cm.true_remote, cm.false_edge, cm.false_remote, cm.true_edge
    return MetricsReport(
        remote_precision=_ratio(tr, tr + fr),
        edge_precision=_ratio(te, te + fe),
        remote_recall=_ratio(tr, tr + fe),
        edge_recall=_ratio(te, te + fr),
        overall_accuracy=(tr + te) / cm.total,
        confusion=cm,
    )


@dataclass(frozen=True)
class DecisionOutcome:
    """What the planner chose and what every instance actually took."""

    chosen_instance_id: str
    measured_rts: Mapping[str, float]
    tiers: Mapping[str, Tier]

    @property
    def chosen_tier(self) -> Tier:
        return self.tiers[self.chosen_instance_id]


@dataclass(frozen=True)
class RtiReport:
    per_decision_rti: tuple[float, ...]
    average_edge_rti: float
    edge_decision_count: int

    def to_json(self) -> dict:
        return {
            "per_decision_rti": list(self.per_decision_rti),
            "average_edge_rti": self.average_edge_rti,
            "edge_decision_count": self.edge_decision_count,
        }


def decision_rti(outcome: DecisionOutcome) -> Optional[float]:
    """Relative improvement over the best remote instance, or None for remote choices."""
    remote = [rt for iid, rt in outcome.measured_rts.items() if outcome.tiers[iid] is Tier.REMOTE]
    edge = [iid for iid in outcome.measured_rts if outcome.tiers[iid] is Tier.EDGE]
    if not remote or not edge:
        raise MissingTier("RTI needs measured times for at least one edge and one remote instance")
    if outcome.chosen_tier is not Tier.EDGE:
        return None
    best_remote = min(remote)
    return (best_remote - outcome.measured_rts[outcome.chosen_instance_id]) / best_remote


def compute_rti(outcomes: Sequence[DecisionOutcome]) -> RtiReport:
    rtis = tuple(r for r in (decision_rti(o) for o in outcomes) if r is not None)
    avg = float(np.mean(rtis)) if rtis else 0.0
    return RtiReport(rtis, avg, len(rtis))


@dataclass
class ExperimentConfig:
    instances: list[ServiceInstance] = field(default_factory=default_instances)
    kind: str = "knn"  # a RegressorKind value or "oracle"
    train_count: int = 578
    test_count: int = 200
    seed: int = 7
    mode: str = ANALYTIC
    sigma: float = 0.0
    params: RtModelParams = field(default_factory=RtModelParams)
    ranges: WorkloadRanges = field(default_factory=WorkloadRanges)

    @property
    def workload_seed(self) -> int:
        return self.seed

    @property
    def noise_seed(self) -> int:
        return self.seed + 1

    @property
    def train_seed(self) -> int:
        return self.seed


@dataclass
class ExperimentResult:
    kind: str
    metrics: MetricsReport
    rti: RtiReport
    decisions_csv: str
    correctness: list = field(default_factory=list)

    def summary(self) -> dict:
        m = self.metrics
        return {
            "kind": self.kind,
            "test_decisions": m.confusion.total,
            "accuracy": m.overall_accuracy,
            "remote_precision": m.remote_precision,
            "edge_precision": m.edge_precision,
            "remote_recall": m.remote_recall,
            "edge_recall": m.edge_recall,
            "rti": self.rti.average_edge_rti,
            "edge_decisions": self.rti.edge_decision_count,
            "confusion": asdict(m.confusion),
        }

    def report_json(self) -> str:
        body = {"summary": self.summary(), "metrics": self.metrics.to_json(), "rti": self.rti.to_json()}
        return json.dumps(body, indent=2, sort_keys=True) + "\n"


def prepare_data(config: ExperimentConfig) -> tuple[list[FeatureVector], list[MonitoringRecord]]:
    workloads = sample_workloads(config.train_count + config.test_count, config.ranges, config.workload_seed)
    records = generate_monitoring(workloads, config.instances, config.mode, config.params,
                                  noise_seed=config.noise_seed, sigma=config.sigma)
    return workloads, records


def _fmt(v: float) -> str:
    return repr(float(v))


def run_experiment(config: ExperimentConfig, data=None) -> ExperimentResult:
    """Train on the first ``train_count`` workloads, make one decision per remaining one."""
    workloads, records = data if data is not None else prepare_data(config)
    table = by_id(config.instances)
    per_workload = len(table)
    train_records = records[: config.train_count * per_workload]

    if config.kind == ORACLE:
        models = None
    else:
        models = train_all(train_records, table, config.kind, seed=config.train_seed)

    cm = ConfusionMatrix()
    outcomes, correctness = [], []
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(DECISION_CSV_HEADER)
    test = workloads[config.train_count:]
    for i, f in enumerate(test):
        idx = config.train_count + i
        rows = records[idx * per_workload:(idx + 1) * per_workload]
        measured = {r.instance_id: r.rt_ms for r in rows}
        correct_tier, _ = label_correct_decision(measured, table)
        if models is None:
            predicted = {iid: analytic_rt(f, si.machine, config.params) for iid, si in table.items()}
            chosen = choose(predicted, table)
        else:
            chosen = plan(f, models, table).chosen_instance_id
        chosen_tier = table[chosen].tier
        cm = cm.add(correct_tier, chosen_tier)
        correctness.append(int(correct_tier is chosen_tier))
        outcome = DecisionOutcome(chosen, measured, {iid: si.tier for iid, si in table.items()})
        outcomes.append(outcome)
        rti = decision_rti(outcome)
        writer.writerow([
            idx, f.k, f.it, f.n, f.d, correct_tier.value, chosen_tier.value, chosen,
            _fmt(sum(correctness) / len(correctness)), "" if rti is None else _fmt(rti),
        ])

    kind = config.kind if config.kind == ORACLE else RegressorKind.parse(config.kind).value
    return ExperimentResult(kind, compute_metrics(cm), compute_rti(outcomes), out.getvalue(), correctness)


def comparison_table(results: Sequence[ExperimentResult]) -> str:
    return json.dumps([r.summary() for r in results], indent=2, sort_keys=True) + "\n"


def cumulative_accuracy(correct_column: Sequence[str], predicted_column: Sequence[str]) -> list[float]:
    """Recompute ``cum_accuracy`` from the correct/predicted columns of a decision CSV."""
    hits, out = 0, []
    for i, (c, p) in enumerate(zip(correct_column, predicted_column), 1):
        hits += c == p
        out.append(hits / i)
    return out
