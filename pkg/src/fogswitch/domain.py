"""Web API meta-model, fog infrastructure and request features.

All types are frozen dataclasses and can be shared freely between threads.
Datasets are plain ``(n, d)`` float64 numpy arrays.
"""
from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union
from urllib.parse import urlsplit

import numpy as np

from .errors import (
    BadRequest,
    DimensionOutOfRange,
    EmptyDataset,
    MalformedRow,
    NonPositiveParam,
    RaggedDataset,
)

MAX_DIMENSION = 64
FEATURE_NAMES = ("k", "it", "n", "d")


class ApiStyle(enum.Enum):
    REST = "REST"
    SOAP = "SOAP"


class Tier(enum.Enum):
    EDGE = "edge"
    REMOTE = "remote"

    @classmethod
    def parse(cls, value: Union[str, "Tier"]) -> "Tier":
        if isinstance(value, Tier):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown tier {value!r}; expected 'edge' or 'remote'") from None


BUILTIN_TYPES = frozenset({"int", "long", "double", "string", "bool"})


@dataclass(frozen=True)
class Primitive:
    builtin: str

    def __post_init__(self):
        if self.builtin not in BUILTIN_TYPES:
            raise ValueError(f"unknown builtin type {self.builtin!r}")


@dataclass(frozen=True)
class Complex:
    grouping: str
    nested: Optional["Parameter"] = None


@dataclass(frozen=True)
class Parameter:
    name: str
    kind: Union[Primitive, Complex]

    def __post_init__(self):
        if not self.name:
            raise ValueError("parameter name must be non-empty")
        # frozen dataclasses cannot form cycles, so nesting is finite by construction


def _unique(names: Sequence[str], what: str):
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate {what} names: {list(names)}")


@dataclass(frozen=True)
class ApiOperation:
    name: str
    inputs: tuple[Parameter, ...] = ()
    outputs: tuple[Parameter, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise ValueError("operation name must be non-empty")
        _unique([p.name for p in self.inputs], "input parameter")
        _unique([p.name for p in self.outputs], "output parameter")


@dataclass(frozen=True)
class WebApi:
    name: str
    ops: tuple[ApiOperation, ...]
    style: ApiStyle = ApiStyle.REST
    credentials: str = ""  # carried, never interpreted

    def __post_init__(self):
        if not self.name:
            raise ValueError("API name must be non-empty")
        if not self.ops:
            raise ValueError("API must expose at least one operation")
        _unique([op.name for op in self.ops], "operation")

    def operation(self, name: str) -> ApiOperation:
        for op in self.ops:
            if op.name == name:
                return op
        raise KeyError(name)


_point = Parameter("DataPoint", Complex("list", Parameter("Vector", Complex("list", Parameter("value", Primitive("double"))))))

KMEANS_API = WebApi(
    name="kmeans",
    ops=(
        ApiOperation(
            name="cluster",
            inputs=(
                Parameter("k", Primitive("int")),
                Parameter("it", Primitive("int")),
                Parameter("seed", Primitive("long")),
                _point,
            ),
            outputs=(
                Parameter("centroids", Complex("list", Parameter("Vector", Complex("list", Parameter("value", Primitive("double")))))),
                Parameter("assignments", Complex("list", Parameter("index", Primitive("int")))),
                Parameter("iterations_run", Primitive("int")),
                Parameter("inertia", Primitive("double")),
            ),
        ),
    ),
    style=ApiStyle.REST,
)


@dataclass(frozen=True)
class MachineProfile:
    id: str
    tier: Tier
    cpu_factor: float = 1.0
    rtt_ms: float = 0.0
    bandwidth_bytes_per_ms: float = 1.25e5

    def __post_init__(self):
        object.__setattr__(self, "tier", Tier.parse(self.tier))
        if not self.id:
            raise ValueError("machine id must be non-empty")
        if not self.cpu_factor > 0:
            raise ValueError(f"{self.id}: cpu_factor must be > 0")
        if not self.bandwidth_bytes_per_ms > 0:
            raise ValueError(f"{self.id}: bandwidth must be > 0")
        if self.rtt_ms < 0:
            raise ValueError(f"{self.id}: rtt_ms must be >= 0")
        if self.tier is Tier.EDGE and self.rtt_ms != 0:
            raise ValueError(f"{self.id}: edge machines have negligible latency (rtt_ms must be 0)")


@dataclass(frozen=True)
class FogInfrastructure:
    edge_machines: tuple[MachineProfile, ...] = ()
    remote_machines: tuple[MachineProfile, ...] = ()

    def __post_init__(self):
        machines = self.machines
        if not machines:
            raise ValueError("fog infrastructure needs at least one machine")
        _unique([m.id for m in machines], "machine")
        for m in self.edge_machines:
            if m.tier is not Tier.EDGE:
                raise ValueError(f"{m.id} listed as edge but has tier {m.tier.value}")
        for m in self.remote_machines:
            if m.tier is not Tier.REMOTE:
                raise ValueError(f"{m.id} listed as remote but has tier {m.tier.value}")

    @classmethod
    def from_machines(cls, machines: Sequence[MachineProfile]) -> "FogInfrastructure":
        return cls(
            tuple(m for m in machines if m.tier is Tier.EDGE),
            tuple(m for m in machines if m.tier is Tier.REMOTE),
        )

    @property
    def machines(self) -> tuple[MachineProfile, ...]:
        return self.edge_machines + self.remote_machines

    def machine(self, machine_id: str) -> MachineProfile:
        for m in self.machines:
            if m.id == machine_id:
                return m
        raise KeyError(machine_id)


def check_uri(uri: str) -> str:
    parts = urlsplit(uri)
    if not parts.scheme or not parts.hostname or parts.port is None or not parts.path:
        raise ValueError(f"instance uri must look like scheme://host:port/path, got {uri!r}")
    return uri


@dataclass(frozen=True)
class ServiceInstance:
    id: str
    uri: str
    machine: MachineProfile
    api: WebApi = KMEANS_API
    model: Optional[object] = field(default=None, compare=False)  # TrainedModel

    def __post_init__(self):
        if not self.id:
            raise ValueError("instance id must be non-empty")
        check_uri(self.uri)

    @property
    def tier(self) -> Tier:
        return self.machine.tier


def check_instances(instances: Sequence[ServiceInstance], infra: FogInfrastructure):
    """Every instance must resolve to exactly one machine of ``infra``."""
    _unique([si.id for si in instances], "instance")
    for si in instances:
        if infra.machine(si.machine.id) != si.machine:
            raise ValueError(f"instance {si.id}: machine {si.machine.id} differs from the infrastructure's")


@dataclass(frozen=True, order=True)
class FeatureVector:
    k: int
    it: int
    n: int
    d: int

    def __post_init__(self):
        for name in FEATURE_NAMES:
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise NonPositiveParam(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
            if v <= 0:
                raise NonPositiveParam(f"{name} must be positive, got {v}")
        if self.k > self.n:
            raise NonPositiveParam(f"k={self.k} exceeds the number of points n={self.n}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.k, self.it, self.n, self.d)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=np.float64)

    @property
    def work(self) -> int:
        return self.k * self.it * self.n * self.d


@dataclass(frozen=True)
class ClusterRequest:
    k: int
    it: int
    dataset: np.ndarray = field(compare=False)
    seed: int = 0

    def to_json(self) -> dict:
        return {"k": self.k, "it": self.it, "seed": self.seed, "points": np.asarray(self.dataset, dtype=np.float64).tolist()}

    @classmethod
    def from_json(cls, obj) -> "ClusterRequest":
        if not isinstance(obj, dict):
            raise BadRequest("request body must be a JSON object")
        try:
            k, it, points = obj["k"], obj["it"], obj["points"]
        except KeyError as e:
            raise BadRequest(f"missing field {e.args[0]!r}") from None
        seed = obj.get("seed", 0)
        for name, v in (("k", k), ("it", it), ("seed", seed)):
            if isinstance(v, bool) or not isinstance(v, int):
                raise BadRequest(f"{name} must be an integer")
        if not 0 <= seed < 2**64:
            raise BadRequest("seed must be an unsigned 64-bit integer")
        return cls(k, it, as_dataset(points), seed)


def as_dataset(points) -> np.ndarray:
    """Validate a list of points (or an array) and return it as an ``(n, d)`` array."""
    if isinstance(points, np.ndarray):
        if points.ndim != 2:
            raise RaggedDataset(f"dataset must be 2-D, got shape {points.shape}")
        if points.shape[0] == 0:
            raise EmptyDataset("dataset has no points")
        return points.astype(np.float64, copy=False)
    if not isinstance(points, (list, tuple)):
        raise BadRequest("points must be a list of lists")
    if len(points) == 0:
        raise EmptyDataset("dataset has no points")
    dims = set()
    for p in points:
        if not isinstance(p, (list, tuple)):
            raise BadRequest("each point must be a list of numbers")
        dims.add(len(p))
    if len(dims) != 1:
        raise RaggedDataset(f"points have differing dimensions {sorted(dims)}")
    try:
        arr = np.array(points, dtype=np.float64)
    except (TypeError, ValueError):
        raise BadRequest("point coordinates must be numbers") from None
    if arr.shape[1] == 0:
        raise DimensionOutOfRange("points have dimension 0")
    return arr


def extract_features(request: ClusterRequest) -> FeatureVector:
    data = as_dataset(request.dataset)
    n, d = data.shape
    if not 1 <= d <= MAX_DIMENSION:
        raise DimensionOutOfRange(f"point dimension {d} outside [1, {MAX_DIMENSION}]")
    return FeatureVector(request.k, request.it, n, d)


def parse_dataset(text: Union[str, bytes]) -> np.ndarray:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    rows = []
    width = None
    for lineno, line in enumerate(text.split("\n"), 1):
        if not line.strip():
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise MalformedRow(f"line {lineno}: expected {width} columns, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise MalformedRow(f"line {lineno}: non-numeric cell in {line!r}") from None
    if not rows:
        raise EmptyDataset("dataset file has no rows")
    return np.array(rows, dtype=np.float64)


def serialize_dataset(data: np.ndarray) -> str:
    out = io.StringIO()
    for row in np.asarray(data, dtype=np.float64):
        out.write(",".join(repr(float(v)) for v in row))
        out.write("\n")
    return out.getvalue()


def features_matrix(features: Sequence[FeatureVector]) -> np.ndarray:
    if not features:
        return np.empty((0, len(FEATURE_NAMES)))
    return np.array([f.as_tuple() for f in features], dtype=np.float64)

