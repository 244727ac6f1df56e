"""Compiled against pure-Python kernels on the hot loops.

    python3 benchmarks/bench_kernels.py [--repeats N] [--feeder-steps N]

Prints one line per kernel with the median wall time of each backend and
the ratio.  Outputs of the two backends are checked for agreement first.
"""
import argparse
import statistics
import sys
import time

import numpy as np

from gridfit import kernels
from gridfit.feeder import default_case, run_timeseries, synthetic_profiles
from gridfit.partition import SearchConfig, evaluate_partition_count
from gridfit.plant import PlantParams
from gridfit.signalgen import ChirpSpec, PartitionPlan, generate_probing_signal


def median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def cases(feeder_steps):
    prm = PlantParams()
    u = generate_probing_signal(PartitionPlan(0.88, 1.10, 4, 6.0), ChirpSpec()).values
    p = np.zeros(len(u))
    x0 = np.array([u[0], 0.0, 0.0])
    model = evaluate_partition_count(11, SearchConfig(), prm)[0]
    pk = model.packed()
    case = default_case(synthetic_profiles(1.0, 24.0).window(12 * 3600, feeder_steps))

    def plant(mod):
        return lambda: mod.plant_run(x0, u, p, 1e-3, 1, prm.kernel_params(),
                                     prm.curve.as_tuple(), True)

    def part(mod):
        def run():
            yh, uh = model.initial_history(u[0])
            return mod.partitioned_run(u, pk["hi"], pk["B"], pk["A"], pk["nord"], pk["mord"],
                                       pk["uoff"], pk["yoff"], yh, uh)
        return run

    def feeder(name, binding):
        return lambda: run_timeseries(case, "volt_var", binding, model, backend=name)

    return [
        (f"plant_run ({len(u)} samples)", lambda m, n: plant(m)),
        (f"partitioned_run ({len(u)} samples)", lambda m, n: part(m)),
        (f"feeder detailed ({feeder_steps} s)", lambda m, n: feeder(n, "detailed")),
        (f"feeder partitioned ({feeder_steps} s)", lambda m, n: feeder(n, "partitioned")),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--feeder-steps", type=int, default=20)
    args = ap.parse_args(argv)
    try:
        compiled = kernels.get("compiled")
    except ImportError:
        print("compiled kernels are not built; run `python3 setup.py build_ext --inplace`",
              file=sys.stderr)
        return 1
    python = kernels.get("python")
    print(f"{'kernel':<36}{'compiled s':>12}{'python s':>12}{'ratio':>9}")
    for name, make in cases(args.feeder_steps):
        fc = make(compiled, "compiled")
        fp = make(python, "python")
        a, b = fc(), fp()
        if isinstance(a, tuple) and not hasattr(a, "v"):
            a, b = a[0], b[0]
        if hasattr(a, "v"):
            a, b = a.v, b.v
        if not np.allclose(np.asarray(a), np.asarray(b), rtol=1e-9, atol=1e-9):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 1
        tc = median_time(fc, args.repeats)
        tp = median_time(fp, args.repeats)
        print(f"{name:<36}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
