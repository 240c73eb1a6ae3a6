"""Time the compiled kernels against the pure-Python reference.

    python benchmarks/bench_kernels.py --traces 2000 --repeat 3
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from privpart import kernels
from privpart.conformance import _prefix_automaton
from privpart.discovery import discover
from privpart.log import df_counts, dfg_matrix, sorted_activities
from privpart.privacy import PrivacyParams, anonymize_dfg, playout_dfg
from privpart.seeding import derive_rng
from privpart.synth import SyntheticSpec, generate_synthetic


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def workloads(n_traces: int):
    """Name -> callable(backend module) for each hot loop on a synthetic log."""
    synth = generate_synthetic(SyntheticSpec(n_traces=n_traces), seed=0)
    noisy = anonymize_dfg(df_counts(synth.log), PrivacyParams(0.1), derive_rng(0, "bench"))
    # a played-out noisy log has many distinct variants, which is what the replay loops iterate over
    log = playout_dfg(noisy, n_traces, 50, derive_rng(0, "bench-playout"))
    alphabet, flat, offsets, mult = log.encoded
    net = discover(synth.log, "heuristic").compile()
    t_flat, t_offsets = net.encode(t for t, _ in log)
    automaton = _prefix_automaton(log, net)

    sorted_acts = sorted_activities(noisy.activities)
    n = len(sorted_acts)
    w = dfg_matrix(noisy, sorted_acts)
    totals = w.sum(axis=1, keepdims=True)
    cum = np.where(totals > 0, np.cumsum(w, axis=1) / np.maximum(totals, 1e-300), 0.0)
    cum[totals[:, 0] > 0, n] = 1.0
    uniforms = np.random.default_rng(0).random((n_traces, 51))

    return {
        "df_matrix": lambda k: k.df_matrix(flat, offsets, mult, len(alphabet)),
        "walk_batch": lambda k: k.walk_batch(cum, uniforms, 50),
        "replay_traces": lambda k: k.replay_traces(net, t_flat, t_offsets),
        "escaping_edges": lambda k: k.escaping_edges(net, *automaton),
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--traces", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the Python backend is timed")
    loads = workloads(args.traces)
    print(f"{'kernel':<16}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for kernel, fn in loads.items():
        timings = {name: _best(lambda: fn(mod), args.repeat) for name, mod in backends.items()}
        speedup = timings["python"] / timings["cython"] if "cython" in timings else float("nan")
        cells = "".join(f"{t * 1000:>10.1f}ms" for t in timings.values())
        print(f"{kernel:<16}{cells}{speedup:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
