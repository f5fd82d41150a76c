"""Four-model switching comparison on the analytic simulator, over several seeds.

    python scripts/reproduce_comparison.py --seeds 7 8 9 --out results/
"""
import argparse
import json
import warnings
from pathlib import Path

import numpy as np

from fogswitch.errors import NoConvergenceWarning
from fogswitch.evaluation import ExperimentConfig, prepare_data, run_experiment

KINDS = ("knn", "svr", "dtree", "nn")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[7])
    ap.add_argument("--train-count", type=int, default=578)
    ap.add_argument("--test-count", type=int, default=200)
    ap.add_argument("--sigma", type=float, default=0.0, help="lognormal noise on measured times")
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    rows = []
    for seed in args.seeds:
        cfg = ExperimentConfig(train_count=args.train_count, test_count=args.test_count, seed=seed, sigma=args.sigma)
        data = prepare_data(cfg)
        for kind in KINDS:
            cfg.kind = kind
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NoConvergenceWarning)
                res = run_experiment(cfg, data)
            s = res.summary()
            c = s["confusion"]
            edge_share = (c["true_edge"] + c["false_remote"]) / s["test_decisions"]
            rows.append({"seed": seed, "baseline": max(edge_share, 1 - edge_share), **s})
            if args.out:
                args.out.mkdir(parents=True, exist_ok=True)
                (args.out / f"seed{seed}_{kind}_decisions.csv").write_text(res.decisions_csv)

    print(f"{'kind':6s} {'acc mean':>9s} {'acc min':>8s} {'edge P':>7s} {'edge R':>7s} {'RTI':>6s}")
    for kind in KINDS:
        sel = [r for r in rows if r["kind"] == kind]
        acc = np.array([r["accuracy"] for r in sel])
        print(f"{kind:6s} {acc.mean():9.3f} {acc.min():8.3f} "
              f"{np.mean([r['edge_precision'] for r in sel]):7.3f} "
              f"{np.mean([r['edge_recall'] for r in sel]):7.3f} "
              f"{np.mean([r['rti'] for r in sel]):6.3f}")
    print(f"majority baseline {np.mean([r['baseline'] for r in rows]):.3f}")
    if args.out:
        (args.out / "comparison.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
