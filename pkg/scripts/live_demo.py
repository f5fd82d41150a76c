"""Live loop on one machine: two simulated-delay back-ends, live monitoring,
training, and requests routed through the self-back-end proxy.

    python scripts/live_demo.py --kind svr --train 120 --requests 20
"""
import argparse
import json
import urllib.request

import numpy as np

from fogswitch.backend import SIMULATED_DELAY, serve_backend
from fogswitch.domain import ClusterRequest, ServiceInstance
from fogswitch.fogsim import LIVE, RtModelParams, WorkloadRanges, default_machines, generate_monitoring, sample_workloads
from fogswitch.planner import train_all
from fogswitch.proxy import INSTANCE_HEADER, self_backend_serve
from fogswitch.web import dumps

# scaled-down workloads so the demo finishes in well under a minute
RANGES = WorkloadRanges(n_bands=((10, 400), (401, 800), (801, 1200)), k=(2, 6), it=(5, 40), d=(2, 6))
PARAMS = RtModelParams(alpha_ms=2e-4, beta_ms=2.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kind", default="knn", choices=["knn", "svr", "dtree", "nn"])
    ap.add_argument("--train", type=int, default=90)
    ap.add_argument("--requests", type=int, default=15)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    machines = default_machines()
    backends = [serve_backend("127.0.0.1", 0, m, SIMULATED_DELAY, PARAMS).start() for m in machines]
    instances = [ServiceInstance(m.id, f"{b.url}/cluster", m) for m, b in zip(machines, backends)]
    try:
        records = generate_monitoring(sample_workloads(args.train, RANGES, args.seed), instances, LIVE,
                                      noise_seed=args.seed)
        models = train_all(records, instances, args.kind, seed=args.seed)
        with self_backend_serve("127.0.0.1", 0, models, instances) as proxy:
            rng = np.random.default_rng(args.seed + 1)
            for f in sample_workloads(args.requests, RANGES, args.seed + 2):
                body = dumps(ClusterRequest(f.k, f.it, rng.uniform(0, 100, (f.n, f.d)).tolist()).to_json())
                req = urllib.request.Request(proxy.url + "/cluster", data=body, method="POST")
                with urllib.request.urlopen(req, timeout=30) as r:
                    chosen = r.headers[INSTANCE_HEADER]
                    inertia = json.loads(r.read())["inertia"]
                print(f"k={f.k:2d} it={f.it:3d} n={f.n:5d} d={f.d:2d} -> {chosen:8s} inertia {inertia:.1f}")
            with urllib.request.urlopen(proxy.url + "/decisions") as r:
                log = json.loads(r.read())
            print(f"{len(log)} decisions logged; mean plan latency "
                  f"{np.mean([d['plan_latency_ms'] for d in log]):.3f} ms")
    finally:
        for b in backends:
            b.stop()


if __name__ == "__main__":
    main()
