"""Compare the compiled and numpy random-walk kernels.

Runs the same walkers through both backends.  Reports wall time, throughput
and the agreement of the per-walker outcomes.

    python3 benchmarks/bench_walk.py --walkers 5000
"""

import argparse
import time

import numpy as np

from narrowescape.capture_asymptotics import PatchSpec, Scene
from narrowescape.geometry_greens import disk
from narrowescape.oracle import montecarlo as mc


def timed(scene, cfg, backend):
    start = time.perf_counter()
    hits, times = mc.run_walkers(scene, "uniform", cfg, backend)
    return time.perf_counter() - start, hits, times


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--walkers", type=int, default=5000)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    scene = Scene(disk(), (PatchSpec(0.0, 0.1), PatchSpec(np.pi, 0.2)))
    cfg = mc.McConfig(walkers=args.walkers, seed=args.seed)
    backends = ["numpy"] + (["compiled"] if mc.BACKEND == "compiled" else [])
    results = {}
    for name in backends:
        best = min(timed(scene, cfg, name)[0] for _ in range(args.repeat))
        _, hits, times = timed(scene, cfg, name)
        results[name] = (best, hits, times)
        print(f"{name:>9}: {best:8.3f} s  {args.walkers / best:10.0f} walkers/s  "
              f"chi_1 = {np.mean(hits == 0):.4f}  mean time = {times.mean():.4f}")
    if len(results) == 2:
        (tn, hn, xn), (tc, hc, xc) = results["numpy"], results["compiled"]
        print(f"  speed-up: {tn / tc:.1f}x")
        print(f"  identical absorbers: {np.mean(hn == hc):.4%}  "
              f"max time difference: {np.max(np.abs(xn - xc)):.2e}")
    else:
        print("compiled kernel not built; only the numpy backend was timed")


if __name__ == "__main__":
    main()
