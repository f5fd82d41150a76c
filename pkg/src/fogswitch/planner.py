"""Planning: offline training of one model per instance, online argmin selection.

Training and prediction are separate entry points. ``train_all`` produces a
model map; ``plan`` only reads it, so a frozen map can be shared across request
handler threads.
"""
from __future__ import annotations

import json
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from .domain import FeatureVector, ServiceInstance, Tier, features_matrix
from .errors import MissingInstanceData, ModelLoadFailure, UnknownInstance
from .fogsim import MonitoringRecord
from .predictors import RegressorKind, TrainedModel, load_model, predict, save_model, train
from .predictors.modelfile import FORMAT_VERSION

MANIFEST = "manifest.json"
MODEL_SUFFIX = ".fsm"

Instances = Union[Mapping[str, ServiceInstance], Sequence[ServiceInstance]]


def by_id(instances: Instances) -> dict[str, ServiceInstance]:
    if isinstance(instances, Mapping):
        return dict(instances)
    return {si.id: si for si in instances}


def instance_ids(instances) -> list[str]:
    """Sorted ids from a mapping, ServiceInstances, or plain id strings."""
    if isinstance(instances, Mapping):
        return sorted(instances)
    return sorted(i if isinstance(i, str) else i.id for i in instances)


@dataclass(frozen=True)
class SwitchingDecision:
    chosen_instance_id: str
    predicted_rts: dict
    kind: RegressorKind
    features: FeatureVector
    plan_latency_ms: float

    def to_json(self) -> dict:
        f = self.features
        return {
            "chosen_instance_id": self.chosen_instance_id,
            "predicted_rts": {k: self.predicted_rts[k] for k in sorted(self.predicted_rts)},
            "kind": self.kind.value,
            "features": {"k": f.k, "it": f.it, "n": f.n, "d": f.d},
            "plan_latency_ms": self.plan_latency_ms,
        }


def partition(records: Sequence[MonitoringRecord]) -> dict[str, list[MonitoringRecord]]:
    parts = defaultdict(list)
    for r in records:
        parts[r.instance_id].append(r)
    return parts


def train_all(records: Sequence[MonitoringRecord], instances: Instances, kind, seed: int = 0,
              parallel: bool = True) -> dict[str, TrainedModel]:
    """Fit one model per instance, each only on that instance's records.

    With ``parallel`` every instance gets its own training thread; the result is
    identical to sequential training.
    """
    kind = RegressorKind.parse(kind)
    ids = instance_ids(instances)
    parts = partition(records)
    for iid in ids:
        if not parts.get(iid):
            raise MissingInstanceData(iid)

    def fit(iid):
        rows = parts[iid]
        X = features_matrix([r.features for r in rows])
        y = np.array([r.rt_ms for r in rows])
        return train(kind, X, y, seed=seed)

    if parallel and len(ids) > 1:
        with ThreadPoolExecutor(max_workers=len(ids), thread_name_prefix="train") as pool:
            models = list(pool.map(fit, ids))
    else:
        models = [fit(iid) for iid in ids]
    return dict(zip(ids, models))


def choose(predicted: Mapping[str, float], instances: Mapping[str, ServiceInstance]) -> str:
    """Argmin of predicted response time; ties prefer edge, then the smaller id."""
    return min(predicted, key=lambda iid: (predicted[iid], instances[iid].tier is not Tier.EDGE, iid))


def plan(f: FeatureVector, models: Mapping[str, TrainedModel], instances: Instances) -> SwitchingDecision:
    if not models:
        raise ValueError("no trained models to plan with")
    start = time.perf_counter()
    table = by_id(instances)
    missing = [iid for iid in models if iid not in table]
    if missing:
        raise UnknownInstance(f"models for unknown instances {missing}")
    predicted = {iid: predict(m, f) for iid, m in models.items()}
    chosen = choose(predicted, table)
    elapsed = (time.perf_counter() - start) * 1000.0
    kind = next(iter(models.values())).kind
    return SwitchingDecision(chosen, predicted, kind, f, elapsed)


def manifest_entry(model: TrainedModel, record_count: int) -> dict:
    entry = {"records": record_count}
    if model.kind is RegressorKind.SVR:
        entry["gamma"] = float(model.payload["gamma"])
        entry["feature_variance"] = float(model.payload["variance"])
        entry["converged"] = bool(model.payload["converged"])
    elif model.kind is RegressorKind.NN:
        entry["architecture"] = [int(v) for v in model.payload["layers"]]
    return entry


def save_models(models: Mapping[str, TrainedModel], model_dir, seed: int,
                record_counts: Mapping[str, int]) -> Path:
    """Write ``<id>.fsm`` per instance plus ``manifest.json``."""
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    kinds = {m.kind for m in models.values()}
    if len(kinds) != 1:
        raise ValueError(f"all models must share one kind, got {sorted(k.value for k in kinds)}")
    entries = {}
    for iid in sorted(models):
        save_model(models[iid], model_dir / f"{iid}{MODEL_SUFFIX}")
        entries[iid] = {"file": f"{iid}{MODEL_SUFFIX}", **manifest_entry(models[iid], record_counts[iid])}
    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": kinds.pop().value,
        "seed": seed,
        "feature_order": ["k", "it", "n", "d"],
        "instances": entries,
    }
    (model_dir / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return model_dir


def load_models(model_dir, only=None) -> tuple[dict[str, TrainedModel], dict]:
    """Load every model listed in the manifest (or just the ids in ``only``)."""
    model_dir = Path(model_dir)
    try:
        manifest = json.loads((model_dir / MANIFEST).read_text())
    except (OSError, ValueError) as e:
        raise ModelLoadFailure(f"cannot read {model_dir / MANIFEST}: {e}") from e
    listed = manifest.get("instances", {})
    wanted = sorted(listed) if only is None else sorted(only)
    models = {}
    for iid in wanted:
        if iid not in listed:
            raise ModelLoadFailure(f"no model for instance {iid!r} in {model_dir}")
        try:
            models[iid] = load_model(model_dir / listed[iid]["file"])
        except Exception as e:
            raise ModelLoadFailure(f"instance {iid!r}: {e}") from e
        if models[iid].kind.value != manifest.get("kind"):
            raise ModelLoadFailure(f"instance {iid!r}: model kind differs from the manifest")
    return models, manifest
