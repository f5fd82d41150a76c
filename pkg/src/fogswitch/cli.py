"""Command-line entry point.

Exit codes: 0 ok, 2 usage or config error, 3 I/O error, 4 training failure,
5 bind failure.
"""
from __future__ import annotations

import argparse
import logging
import signal
import sys
import time
from collections import Counter
from pathlib import Path


from . import __version__
from .backend import MODES, SIMULATED_DELAY, serve_backend
from .config import FogConfig, load_config
from .errors import BindFailure, ConfigError, FogSwitchError, ModelLoadFailure
from .evaluation import ORACLE, ExperimentConfig, comparison_table, prepare_data, run_experiment
from .fogsim import (
    generate_monitoring,
    read_monitoring_csv,
    sample_workloads,
    write_monitoring_csv,
    write_workloads_csv,
)
from .planner import load_models, save_models, train_all
from .predictors import RegressorKind
from .proxy import DEFAULT_TIMEOUT_MS, self_backend_serve

log = logging.getLogger("fogswitch")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_TRAIN, EXIT_BIND = 0, 2, 3, 4, 5
KINDS = [k.value for k in RegressorKind]


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.exit_code = code


def _config(path) -> FogConfig:
    if path is None:
        return FogConfig()
    try:
        return load_config(path)
    except ConfigError as e:
        raise CliError(str(e), EXIT_USAGE) from None


def _write(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise CliError(f"cannot write {path}: {e}", EXIT_IO) from None


def cmd_generate(args) -> int:
    cfg = _config(args.config)
    count = args.count if args.count is not None else cfg.train_count + cfg.test_count
    mode = args.mode or cfg.mode
    workloads = sample_workloads(count, cfg.ranges, args.seed)
    records = generate_monitoring(workloads, cfg.instances, mode, cfg.params,
                                  noise_seed=args.seed + 1, sigma=cfg.sigma)
    out = Path(args.out)
    _write(out / "workloads.csv", write_workloads_csv(workloads))
    _write(out / "monitoring.csv", write_monitoring_csv(records))
    log.info("wrote %d workloads and %d monitoring records to %s", len(workloads), len(records), out)
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        text = Path(args.data).read_text()
    except OSError as e:
        raise CliError(f"cannot read monitoring data {args.data}: {e}", EXIT_IO) from None
    try:
        records = read_monitoring_csv(text)
    except ValueError as e:
        raise CliError(f"{args.data}: {e}", EXIT_USAGE) from None
    counts = Counter(r.instance_id for r in records)
    ids = [si.id for si in _config(args.config).instances] if args.config else sorted(counts)
    if not ids:
        raise CliError(f"{args.data} has no records", EXIT_TRAIN)

    timings = {}
    try:
        if args.sequential:
            models = {}
            for iid in ids:
                start = time.perf_counter()
                models.update(train_all(records, [iid], args.kind, seed=args.seed, parallel=False))
                timings[iid] = time.perf_counter() - start
        else:
            start = time.perf_counter()
            models = train_all(records, ids, args.kind, seed=args.seed)
            timings = {iid: time.perf_counter() - start for iid in ids}
    except (FogSwitchError, ValueError, ArithmeticError) as e:
        raise CliError(f"training failed: {e}", EXIT_TRAIN) from None
    try:
        save_models(models, args.out, args.seed, {iid: counts[iid] for iid in ids})
    except OSError as e:
        raise CliError(f"cannot write models to {args.out}: {e}", EXIT_IO) from None
    for iid in ids:
        print(f"{iid}\t{counts[iid]} records\t{timings[iid]:.3f} s", file=sys.stderr)
    return EXIT_OK


def _block(service):
    def stop(signum, frame):
        raise KeyboardInterrupt
    signal.signal(signal.SIGTERM, stop)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        log.info("shutting down")
    finally:
        service.server.server_close()


def cmd_serve(args) -> int:
    cfg = _config(args.config if args.role == "backend" else args.instances)
    try:
        if args.role == "backend":
            try:
                machine = cfg.infra.machine(args.profile)
            except KeyError:
                known = ", ".join(m.id for m in cfg.infra.machines)
                raise CliError(f"unknown machine profile {args.profile!r} (known: {known})", EXIT_USAGE) from None
            service = serve_backend(args.host, args.port, machine, args.mode, cfg.params)
            log.info("back-end %s (%s, %s) listening on %s", machine.id, machine.tier.value, args.mode, service.url)
        else:
            try:
                models, manifest = load_models(args.models, [si.id for si in cfg.instances])
            except ModelLoadFailure as e:
                raise CliError(str(e), EXIT_USAGE) from None
            service = self_backend_serve(args.host, args.port, models, cfg.instances, args.timeout_ms)
            log.info("self-back-end (%s, %d instances) listening on %s", manifest["kind"], len(models), service.url)
    except BindFailure as e:
        raise CliError(str(e), EXIT_BIND) from None
    _block(service)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _config(args.config)
    kinds = KINDS if args.kind == "all" else [args.kind]
    exp = ExperimentConfig(
        instances=cfg.instances,
        train_count=args.train_count or cfg.train_count,
        test_count=args.test_count or cfg.test_count,
        seed=args.seed,
        mode=cfg.mode,
        sigma=cfg.sigma,
        params=cfg.params,
        ranges=cfg.ranges,
    )
    data = prepare_data(exp)
    results = []
    for kind in kinds:
        exp.kind = kind
        try:
            results.append(run_experiment(exp, data))
        except (FogSwitchError, ValueError, ArithmeticError) as e:
            raise CliError(f"{kind}: experiment failed: {e}", EXIT_TRAIN) from None
        log.info("%s: accuracy %.3f", kind, results[-1].metrics.overall_accuracy)
    table = comparison_table(results)
    if args.out:
        out = Path(args.out)
        for r in results:
            _write(out / f"{r.kind}_decisions.csv", r.decisions_csv)
            _write(out / f"{r.kind}_report.json", r.report_json())
        _write(out / "comparison.json", table)
    sys.stdout.write(table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fogswitch", description="Edge/remote switching proxy for a k-means back-end.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample workloads and write monitoring data")
    g.add_argument("--config", help="TOML config (machines, instances, sim parameters)")
    g.add_argument("--count", type=int, help="number of workloads (default: train_count + test_count)")
    g.add_argument("--seed", type=int, default=7, help="workload and noise seed (default: 7)")
    g.add_argument("--mode", choices=["analytic", "live"], help="override sim.mode")
    g.add_argument("--out", required=True, help="output directory for workloads.csv and monitoring.csv")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train one model per instance from monitoring data")
    t.add_argument("--kind", required=True, choices=KINDS, help="regressor kind")
    t.add_argument("--data", required=True, help="monitoring CSV (k,it,n,d,instance_id,rt_ms)")
    t.add_argument("--out", required=True, help="model directory to write")
    t.add_argument("--seed", type=int, default=7, help="training seed (default: 7)")
    t.add_argument("--config", help="train exactly the instances listed in this config")
    t.add_argument("--sequential", action="store_true", help="train instances one after another")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("serve", help="run a back-end instance or the self-back-end proxy")
    roles = s.add_subparsers(dest="role", required=True)
    b = roles.add_parser("backend", help="k-means back-end impersonating one machine")
    b.add_argument("--profile", required=True, help="machine id from the config (default config: edge0, remote0)")
    b.add_argument("--port", type=int, required=True)
    b.add_argument("--host", default="127.0.0.1")
    b.add_argument("--config", help="TOML config with machine profiles and sim parameters")
    b.add_argument("--mode", choices=MODES, default=SIMULATED_DELAY, help="default: simulated-delay")
    b.set_defaults(func=cmd_serve)
    x = roles.add_parser("proxy", help="self-back-end: plan and forward /cluster requests")
    x.add_argument("--models", required=True, help="model directory written by 'train'")
    x.add_argument("--instances", required=True, help="TOML config listing machines and instances")
    x.add_argument("--port", type=int, required=True)
    x.add_argument("--host", default="127.0.0.1")
    x.add_argument("--timeout-ms", type=float, default=DEFAULT_TIMEOUT_MS, help="upstream timeout (default: 30000)")
    x.set_defaults(func=cmd_serve)

    e = sub.add_parser("evaluate", help="run the train/test switching experiment")
    e.add_argument("--kind", default="all", choices=KINDS + ["all", ORACLE],
                   help="regressor kind, 'all' for the four-row comparison, or 'oracle'")
    e.add_argument("--seed", type=int, default=7)
    e.add_argument("--config", help="TOML config")
    e.add_argument("--train-count", type=int, help="override experiment.train_count (default 578)")
    e.add_argument("--test-count", type=int, help="override experiment.test_count (default 200)")
    e.add_argument("--out", help="directory for per-decision CSVs and JSON reports")
    e.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as e:
        print(f"fogswitch: error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
