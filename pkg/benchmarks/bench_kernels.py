"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Times the two hot kernels on inputs shaped like a default run, checks that
both backends return identical arrays, and times one full default run under
each backend (the pure-Python run executes in a subprocess with
``IOVSIM_PURE_PYTHON=1``).
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from iovsim import _pykernels

try:
    from iovsim import _ckernels
except ImportError:
    _ckernels = None


def forward_inputs(rng, n_nodes=24, n_entries=400, n_ports=120):
    entry_node = np.sort(rng.integers(0, n_nodes, n_entries)).astype(np.int64)
    demand = rng.integers(0, 60, n_entries).astype(np.int64)
    entry_port = rng.integers(-1, n_ports, n_entries).astype(np.int64)
    node_C = np.full(n_nodes, 100, dtype=np.int64)
    node_F = np.full(n_nodes, 1000, dtype=np.int64)
    planned = rng.integers(0, 400, n_ports).astype(np.int64)
    actual = np.maximum(planned - rng.integers(0, 50, n_ports), 0).astype(np.int64)
    return entry_node, demand, entry_port, node_C, node_F, planned, actual


def dijkstra_inputs(rng, n=24, density=0.3):
    w = rng.uniform(1.0, 200.0, (n, n))
    w = np.where(rng.random((n, n)) < density, w, np.inf)
    w = np.minimum(w, w.T)
    np.fill_diagonal(w, np.inf)
    return w


def full_run_seconds(pure: bool) -> float:
    env = dict(os.environ)
    if pure:
        env["IOVSIM_PURE_PYTHON"] = "1"
    code = ("import time; from iovsim import run, ScenarioConfig, BACKEND; run(ScenarioConfig(), 2); "
            "t = time.perf_counter(); run(ScenarioConfig(), 1); print(BACKEND, time.perf_counter() - t)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, secs = out.stdout.split()
    return float(secs)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the Python backend is available")
        return 1
    rng = np.random.default_rng(0)
    fin = forward_inputs(rng)
    w = dijkstra_inputs(rng)

    for a, b in zip(_pykernels.forward_slot(*fin), _ckernels.forward_slot(*fin)):
        assert np.array_equal(a, b), "forward_slot backends disagree"
    for a, b in zip(_pykernels.dijkstra(w, 0), _ckernels.dijkstra(w, 0)):
        assert np.array_equal(a, b), "dijkstra backends disagree"

    print(f"{'kernel':<14}{'python (us)':>14}{'cython (us)':>14}{'speedup':>10}")
    for name, call in (("forward_slot", lambda m: m.forward_slot(*fin)),
                       ("dijkstra", lambda m: m.dijkstra(w, 0))):
        tp = timeit.timeit(lambda: call(_pykernels), number=args.repeat) / args.repeat * 1e6
        tc = timeit.timeit(lambda: call(_ckernels), number=args.repeat) / args.repeat * 1e6
        print(f"{name:<14}{tp:>14.1f}{tc:>14.1f}{tp / tc:>9.1f}x")

    tp, tc = full_run_seconds(True), full_run_seconds(False)
    print(f"{'default run':<14}{tp * 1e6:>14.0f}{tc * 1e6:>14.0f}{tp / tc:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
