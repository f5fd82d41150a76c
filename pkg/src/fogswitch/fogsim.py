"""Deterministic edge/remote response-time model.

Produces ground-truth response times for labelling correct switching decisions
and monitoring data for training the per-instance regressors.
"""
from __future__ import annotations

import csv
import io
import json
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .domain import ClusterRequest, FeatureVector, MachineProfile, ServiceInstance, Tier
from .errors import InstanceUnreachable, UnknownInstance

ANALYTIC = "analytic"
LIVE = "live"

MONITORING_HEADER = ("k", "it", "n", "d", "instance_id", "rt_ms")


@dataclass(frozen=True)
class RtModelParams:
    alpha_ms: float = 2.5e-5
    beta_ms: float = 5.0
    payload_overhead_bytes: int = 256

    def __post_init__(self):
        if not self.alpha_ms > 0:
            raise ValueError("alpha_ms must be > 0")
        if self.beta_ms < 0 or self.payload_overhead_bytes < 0:
            raise ValueError("beta_ms and payload_overhead_bytes must be >= 0")


@dataclass(frozen=True)
class MonitoringRecord:
    features: FeatureVector
    instance_id: str
    rt_ms: float

    def __post_init__(self):
        if not self.rt_ms > 0:
            raise ValueError(f"rt_ms must be positive, got {self.rt_ms}")


def default_machines() -> tuple[MachineProfile, MachineProfile]:
    edge = MachineProfile("edge0", Tier.EDGE, cpu_factor=0.5, rtt_ms=0.0, bandwidth_bytes_per_ms=1.25e5)
    remote = MachineProfile("remote0", Tier.REMOTE, cpu_factor=4.0, rtt_ms=25.0, bandwidth_bytes_per_ms=1.25e3)
    return edge, remote


def default_instances(host: str = "127.0.0.1", ports: Sequence[int] = (8081, 8082)) -> list[ServiceInstance]:
    return [
        ServiceInstance(m.id, f"http://{host}:{port}/cluster", m)
        for m, port in zip(default_machines(), ports)
    ]


def analytic_rt(f: FeatureVector, m: MachineProfile, params: RtModelParams) -> float:
    compute = params.alpha_ms * f.k * f.it * f.n * f.d / m.cpu_factor
    payload = 8 * f.n * f.d + params.payload_overhead_bytes
    return params.beta_ms + compute + 2.0 * m.rtt_ms + payload / m.bandwidth_bytes_per_ms


def label_correct_decision(rts: Mapping[str, float], instances: Mapping[str, ServiceInstance]) -> tuple[Tier, str]:
    """Tier and id of the fastest instance; ties go to edge, then to the smallest id."""
    if not rts:
        raise ValueError("no response times to label")
    for iid in rts:
        if iid not in instances:
            raise UnknownInstance(f"unknown instance {iid!r}")
    winner = min(rts, key=lambda iid: (rts[iid], instances[iid].tier is not Tier.EDGE, iid))
    return instances[winner].tier, winner


@dataclass(frozen=True)
class WorkloadRanges:
    n_bands: tuple[tuple[int, int], ...] = tuple((max(1, lo), lo + 999) for lo in range(0, 11000, 1000))
    band_weights: Optional[tuple[float, ...]] = None  # None = equal share per band
    k: tuple[int, int] = (2, 10)
    it: tuple[int, int] = (10, 200)
    d: tuple[int, int] = (3, 14)

    def __post_init__(self):
        for name, (lo, hi) in [("k", self.k), ("it", self.it), ("d", self.d), *(("n", b) for b in self.n_bands)]:
            if not 0 < lo <= hi:
                raise ValueError(f"invalid {name} range [{lo}, {hi}]")
        if not self.n_bands:
            raise ValueError("at least one n band is required")
        if self.band_weights is not None:
            if len(self.band_weights) != len(self.n_bands) or min(self.band_weights) < 0 or sum(self.band_weights) <= 0:
                raise ValueError("band_weights must be non-negative, one per band, with positive sum")

    def band_counts(self, count: int) -> list[int]:
        """Split ``count`` over the bands by largest remainder."""
        w = np.ones(len(self.n_bands)) if self.band_weights is None else np.asarray(self.band_weights, float)
        share = count * w / w.sum()
        counts = np.floor(share).astype(int)
        order = sorted(range(len(w)), key=lambda i: (-(share[i] - counts[i]), i))
        for i in order[: count - counts.sum()]:
            counts[i] += 1
        return counts.tolist()

    def band_of(self, n: int) -> int:
        for i, (lo, hi) in enumerate(self.n_bands):
            if lo <= n <= hi:
                return i
        return -1


def sample_workloads(count: int, ranges: WorkloadRanges = WorkloadRanges(), seed: int = 0) -> list[FeatureVector]:
    rng = np.random.default_rng(seed)
    ns = []
    for (lo, hi), c in zip(ranges.n_bands, ranges.band_counts(count)):
        ns.extend(rng.integers(lo, hi, endpoint=True, size=c).tolist())
    ns = [ns[i] for i in rng.permutation(len(ns))]
    out = []
    for n in ns:
        k = int(rng.integers(ranges.k[0], ranges.k[1], endpoint=True))
        it = int(rng.integers(ranges.it[0], ranges.it[1], endpoint=True))
        d = int(rng.integers(ranges.d[0], ranges.d[1], endpoint=True))
        out.append(FeatureVector(min(k, n), it, n, d))
    return out


def random_dataset(f: FeatureVector, seed: int) -> np.ndarray:
    """Points used for live measurements of workload ``f``."""
    return np.random.default_rng(seed).uniform(0.0, 100.0, size=(f.n, f.d))


def _measure(instance: ServiceInstance, body: bytes, timeout_s: float) -> float:
    req = urllib.request.Request(instance.uri, data=body, headers={"Content-Type": "application/json"})
    start = time.perf_counter()
    try:
        with urllib.request.urlopen(req, timeout=timeout_s) as resp:
            resp.read()
    except (urllib.error.URLError, OSError) as e:
        raise InstanceUnreachable(instance.id, str(e)) from e
    return (time.perf_counter() - start) * 1000.0


def generate_monitoring(
    workloads: Sequence[FeatureVector],
    instances: Sequence[ServiceInstance],
    mode: str = ANALYTIC,
    params: RtModelParams = RtModelParams(),
    noise_seed: int = 0,
    sigma: float = 0.0,
    timeout_s: float = 60.0,
) -> list[MonitoringRecord]:
    """One record per (workload, instance), ordered by workload index then instance id."""
    ordered = sorted(instances, key=lambda si: si.id)
    if mode == ANALYTIC:
        rng = np.random.default_rng(noise_seed)
        records = []
        for f in workloads:
            for si in ordered:
                rt = analytic_rt(f, si.machine, params)
                if sigma > 0:
                    rt *= float(np.exp(rng.normal(0.0, sigma)))
                records.append(MonitoringRecord(f, si.id, rt))
        return records
    if mode != LIVE:
        raise ValueError(f"unknown monitoring mode {mode!r}")

    records = []
    with ThreadPoolExecutor(max_workers=max(1, len(ordered))) as pool:
        for idx, f in enumerate(workloads):
            req = ClusterRequest(f.k, f.it, random_dataset(f, noise_seed + idx), seed=noise_seed)
            body = json.dumps(req.to_json(), separators=(",", ":")).encode()
            rts = pool.map(lambda si: _measure(si, body, timeout_s), ordered)
            records.extend(MonitoringRecord(f, si.id, rt) for si, rt in zip(ordered, rts))
    return records


def write_monitoring_csv(records: Iterable[MonitoringRecord]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(MONITORING_HEADER)
    for r in records:
        w.writerow([*r.features.as_tuple(), r.instance_id, repr(float(r.rt_ms))])
    return out.getvalue()


def read_monitoring_csv(text: str) -> list[MonitoringRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != MONITORING_HEADER:
        raise ValueError(f"monitoring CSV header must be {','.join(MONITORING_HEADER)}")
    records = []
    for lineno, row in enumerate(reader, 2):
        if not row:
            continue
        if len(row) != len(MONITORING_HEADER):
            raise ValueError(f"line {lineno}: expected {len(MONITORING_HEADER)} columns")
        k, it, n, d = (int(v) for v in row[:4])
        records.append(MonitoringRecord(FeatureVector(k, it, n, d), row[4], float(row[5])))
    return records


def write_workloads_csv(workloads: Iterable[FeatureVector]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(("k", "it", "n", "d"))
    for f in workloads:
        w.writerow(f.as_tuple())
    return out.getvalue()


def read_workloads_csv(text: str) -> list[FeatureVector]:
    reader = csv.reader(io.StringIO(text))
    next(reader, None)
    return [FeatureVector(*(int(v) for v in row)) for row in reader if row]
