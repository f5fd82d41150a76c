"""TOML configuration: machines, instances, response-time model, workload ranges.

Every table is optional; missing pieces fall back to the built-in two-machine
setup (one edge, one remote). See docs/formats.md for the full schema.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .domain import FogInfrastructure, MachineProfile, ServiceInstance, check_instances
from .errors import ConfigError
from .fogsim import ANALYTIC, LIVE, RtModelParams, WorkloadRanges, default_instances, default_machines


@dataclass
class FogConfig:
    infra: FogInfrastructure = field(default_factory=lambda: FogInfrastructure.from_machines(default_machines()))
    instances: list[ServiceInstance] = field(default_factory=default_instances)
    params: RtModelParams = field(default_factory=RtModelParams)
    sigma: float = 0.0
    mode: str = ANALYTIC
    ranges: WorkloadRanges = field(default_factory=WorkloadRanges)
    train_count: int = 578
    test_count: int = 200
    source: Optional[Path] = None


def _pair(value, name):
    if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) for v in value)):
        raise ConfigError(f"{name} must be a two-element integer list [lo, hi]")
    return tuple(value)


def from_dict(doc: dict, source=None) -> FogConfig:
    cfg = FogConfig(source=source)
    try:
        sim = doc.get("sim", {})
        cfg.params = RtModelParams(
            alpha_ms=float(sim.get("alpha_ms", cfg.params.alpha_ms)),
            beta_ms=float(sim.get("beta_ms", cfg.params.beta_ms)),
            payload_overhead_bytes=int(sim.get("payload_overhead_bytes", cfg.params.payload_overhead_bytes)),
        )
        cfg.sigma = float(sim.get("noise_sigma", 0.0))
        if cfg.sigma < 0:
            raise ConfigError("sim.noise_sigma must be >= 0")
        cfg.mode = sim.get("mode", ANALYTIC)
        if cfg.mode not in (ANALYTIC, LIVE):
            raise ConfigError(f"sim.mode must be {ANALYTIC!r} or {LIVE!r}")

        wl = doc.get("workloads", {})
        kwargs = {}
        for key in ("k", "it", "d"):
            if key in wl:
                kwargs[key] = _pair(wl[key], f"workloads.{key}")
        if "n_bands" in wl:
            kwargs["n_bands"] = tuple(_pair(b, "workloads.n_bands[]") for b in wl["n_bands"])
        if "band_weights" in wl:
            kwargs["band_weights"] = tuple(float(w) for w in wl["band_weights"])
        cfg.ranges = WorkloadRanges(**kwargs)

        exp = doc.get("experiment", {})
        cfg.train_count = int(exp.get("train_count", cfg.train_count))
        cfg.test_count = int(exp.get("test_count", cfg.test_count))
        if cfg.train_count < 1 or cfg.test_count < 1:
            raise ConfigError("experiment.train_count and test_count must be >= 1")

        if "machines" in doc:
            machines = [
                MachineProfile(
                    id=m["id"],
                    tier=m["tier"],
                    cpu_factor=float(m.get("cpu_factor", 1.0)),
                    rtt_ms=float(m.get("rtt_ms", 0.0)),
                    bandwidth_bytes_per_ms=float(m.get("bandwidth_bytes_per_ms", 1.25e5)),
                )
                for m in doc["machines"]
            ]
            cfg.infra = FogInfrastructure.from_machines(machines)
        if "instances" in doc:
            cfg.instances = [
                ServiceInstance(i["id"], i["uri"], cfg.infra.machine(i.get("machine", i["id"])))
                for i in doc["instances"]
            ]
        elif "machines" in doc:
            cfg.instances = [
                ServiceInstance(m.id, f"http://127.0.0.1:{8081 + n}/cluster", m)
                for n, m in enumerate(cfg.infra.machines)
            ]
        check_instances(cfg.instances, cfg.infra)
    except ConfigError:
        raise
    except KeyError as e:
        raise ConfigError(f"{source or 'config'}: missing or unknown key {e}") from None
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{source or 'config'}: {e}") from None
    return cfg


def load_config(path) -> FogConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: invalid TOML: {e}") from None
    return from_dict(doc, source=path)
