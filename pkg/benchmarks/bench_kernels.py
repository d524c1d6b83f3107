"""Time the compiled and pure-Python event kernels on the same random stream.

    python3 benchmarks/bench_kernels.py --n 50 --events 1000000
"""
import argparse
import time

import numpy as np

from kindsim import kernels
from kindsim.dynamics import Params, StopRule, init_uniform, run
from kindsim.graph import complete_graph
from kindsim.rng import EventStream


def time_kernel(name, g, p, events, seed):
    stream = EventStream.for_replicate(seed, 0)
    state = init_uniform(g, stream)
    t0 = time.perf_counter()
    out = run(state, g, p, StopRule(max_events=events), stream, kernel=kernels.get_kernel(name))
    return time.perf_counter() - t0, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=50, help="size of the complete graph")
    ap.add_argument("--events", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mu-plus", type=float, default=0.5)
    ap.add_argument("--mu-minus", type=float, default=0.2)
    args = ap.parse_args(argv)

    g = complete_graph(args.n)
    p = Params(args.mu_plus, args.mu_minus)
    names = ["python"] + (["cython"] if kernels.c_run_chunk is not None else [])
    results = {}
    for name in names:
        dt, out = time_kernel(name, g, p, args.events, args.seed)
        results[name] = (dt, out)
        print(f"{name:>7}: {out.events} events in {dt:.3f} s ({1e9 * dt / max(out.events, 1):.1f} ns/event)")
    if len(results) == 2:
        (tp, op), (tc, oc) = results["python"], results["cython"]
        same = np.array_equal(op.state.beliefs, oc.state.beliefs) and op.state.clock == oc.state.clock
        print(f"speedup {tp / tc:.1f}x; final states identical: {same}")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
