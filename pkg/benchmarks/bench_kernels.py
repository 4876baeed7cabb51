"""Timing comparison: numba kernels vs the pure-numpy fallback.

Runs the percolation cluster sampler and the Ising heat-bath sweeps in two
subprocesses, one with LACELAB_NO_NUMBA=1 and one without, so each process
imports lacelab.kernels exactly once on its chosen path.  Each workload is
warmed up (to absorb JIT compilation) before timing.

Usage: python3 benchmarks/bench_kernels.py [--replicas N] [--sweeps N]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def run_workloads(replicas: int, sweeps: int) -> dict:
    import numpy as np

    from lacelab.ising import IsingConfig, coupling_matrix_from_torus, metropolis
    from lacelab.kernels import USE_NUMBA
    from lacelab.perc import PercConfig, sample_cluster
    from lacelab.steps import StepDistribution
    from lacelab.torus import TorusGrid

    perc_cfg = PercConfig(TorusGrid(2, 16), StepDistribution("nn", 2),
                          0.2, 1.0, seed=0, replicas=replicas)
    sample_cluster(PercConfig(TorusGrid(2, 16), StepDistribution("nn", 2),
                              0.2, 1.0, seed=0, replicas=10))  # warm-up
    t0 = time.perf_counter()
    sample_cluster(perc_cfg)
    perc_s = time.perf_counter() - t0

    table = {(1,): 0.5, (-1,): 0.5}
    J = coupling_matrix_from_torus(TorusGrid(1, 32), table)
    kw = dict(J=J, z=0.4, burn_in=50, thinning=2, replicas=1, seed=0)
    metropolis(IsingConfig(sweeps=60, **kw))  # warm-up
    t0 = time.perf_counter()
    metropolis(IsingConfig(sweeps=sweeps, **kw))
    ising_s = time.perf_counter() - t0

    return {"numba": bool(USE_NUMBA), "numpy": np.__version__,
            "perc_s": round(perc_s, 4), "ising_s": round(ising_s, 4),
            "replicas": replicas, "sweeps": sweeps}


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--replicas", type=int, default=20000)
    ap.add_argument("--sweeps", type=int, default=20000)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.worker:
        print(json.dumps(run_workloads(args.replicas, args.sweeps)))
        return

    results = []
    for label, extra_env in (("numba", {}), ("fallback", {"LACELAB_NO_NUMBA": "1"})):
        env = dict(os.environ, **extra_env)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker",
             "--replicas", str(args.replicas), "--sweeps", str(args.sweeps)],
            env=env, capture_output=True, text=True, check=True)
        rec = json.loads(out.stdout.strip().splitlines()[-1])
        rec["label"] = label
        results.append(rec)
        print("%-8s  perc %8.3f s   ising %8.3f s" %
              (label, rec["perc_s"], rec["ising_s"]))

    a, b = results
    print("speedup   perc %8.1fx   ising %8.1fx" %
          (b["perc_s"] / max(a["perc_s"], 1e-9),
           b["ising_s"] / max(a["ising_s"], 1e-9)))


if __name__ == "__main__":
    main()
