"""Where does remote start beating edge? Closed-form crossover n per (k*it, d).

Both response times are affine in n for fixed (k, it, d), so the crossover is a
single division. Also reports the share of sampled workloads whose correct
decision is edge, for a range of alpha values.
"""
import argparse

import numpy as np

from fogswitch.fogsim import RtModelParams, WorkloadRanges, analytic_rt, default_machines, sample_workloads


def crossover(k, it, d, edge, remote, p):
    def slope(m):
        return p.alpha_ms * k * it * d / m.cpu_factor + 8 * d / m.bandwidth_bytes_per_ms

    def intercept(m):
        return p.beta_ms + 2 * m.rtt_ms + p.payload_overhead_bytes / m.bandwidth_bytes_per_ms

    ds = slope(edge) - slope(remote)
    return np.inf if ds <= 0 else (intercept(remote) - intercept(edge)) / ds


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", type=float, nargs="+", default=[1e-5, 2.5e-5, 5e-5])
    ap.add_argument("--count", type=int, default=778)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    edge, remote = default_machines()

    p = RtModelParams()
    print(f"crossover n at alpha={p.alpha_ms:g} (inf: edge always wins)")
    d_values = (3, 8, 14)
    print("k*it".rjust(8) + "".join(f"{'d=' + str(d):>10s}" for d in d_values))
    for kit in (20, 100, 200, 500, 1000, 2000):
        print(f"{kit:8d}" + "".join(f"{crossover(kit, 1, d, edge, remote, p):10.0f}" for d in d_values))

    wl = sample_workloads(args.count, WorkloadRanges(), args.seed)
    print("\nalpha      edge-correct share")
    for alpha in args.alphas:
        q = RtModelParams(alpha_ms=alpha)
        edge_wins = [analytic_rt(f, edge, q) <= analytic_rt(f, remote, q) for f in wl]
        print(f"{alpha:<10g} {np.mean(edge_wins):.3f}")


if __name__ == "__main__":
    main()
