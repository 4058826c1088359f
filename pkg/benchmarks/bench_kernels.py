"""Compare the compiled and pure-Python kernels on the worst-case workload.

Both implementations cluster the same uniform datasets (eps = region radius,
n_min = 1, n_max = m) and must produce identical labels.  Prints a table of
median wall times and the speed-up.

    python benchmarks/bench_kernels.py --sizes 500 1000 2000 --trials 3
"""

import argparse
import statistics
import time

import numpy as np

from dbstexc import _kernels
from dbstexc.cluster import dbstexc
from dbstexc.index import build
from dbstexc.model import ClusterParams
from dbstexc.synthetic import GenSpec, generate


def median_time(ds, kind, params, impl, trials):
    times, result = [], None
    for t in range(trials + 1):
        start = time.perf_counter()
        result = dbstexc(ds, build(ds, kind), params, impl)
        if t:  # first run is a warm-up
            times.append(time.perf_counter() - start)
    return statistics.median(times), result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000, 4000], help="n (= m) values")
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--backend", choices=["linear", "kd"], default="linear")
    ap.add_argument("--radius", type=float, default=1000.0)
    args = ap.parse_args(argv)

    impls = _kernels.implementations()
    if "compiled" not in impls:
        print("compiled kernels are not available; only the Python fallback was timed")
    print(f"{'n':>6} {'m':>6} " + " ".join(f"{name:>12}" for name in impls) + "   speed-up")
    for n in args.sizes:
        ds = generate(GenSpec(seed=n, region_radius=args.radius, uniform_noise=(n, n)))
        params = ClusterParams(args.radius, 1, n)
        times, labels = {}, []
        for name, impl in impls.items():
            times[name], res = median_time(ds, args.backend, params, impl, args.trials)
            labels.append(res.labels)
        if any(not np.array_equal(labels[0], lab) for lab in labels[1:]):
            raise SystemExit(f"implementations disagree at n={n}")
        cols = " ".join(f"{times[name]:12.4f}" for name in impls)
        speed = f"{times['python'] / times['compiled']:9.1f}x" if "compiled" in times else ""
        print(f"{n:>6} {n:>6} {cols}   {speed}")


if __name__ == "__main__":
    main()
