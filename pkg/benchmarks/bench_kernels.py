"""Timing comparison of the propagation kernel backends.

Measures the hot paths behind policy training and dephasing sweeps on
every importable backend (compiled extension and pure-python fallback)
and reports per-call times plus the speedup over the fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from qflip import _kernels


def make_state():
    rho = np.array([[0.7, 0.3 + 0.1j], [0.3 - 0.1j, 0.3]], dtype=np.complex128)
    return rho / np.trace(rho).real


def workloads():
    rng = np.random.default_rng(0)
    rho = make_state()
    omega = 2.0 * np.pi * 3300.0
    deltas20 = rng.uniform(-2.0 * omega, 2.0 * omega, size=20)
    durations20 = np.full(20, 15e-6)
    deltas4 = deltas20[:4].copy()
    durations4 = np.full(4, 75e-6)
    gamma = 1.0 / (2.0 * 0.35e-3)
    return [
        ("step_unitary", lambda b: b.step_unitary(omega, 0.3 * omega, 1e-6)),
        ("unitary, 20 steps", lambda b: b.propagate_unitary(
            rho, omega, deltas20, durations20)),
        ("lindblad, 4 steps x 64", lambda b: b.propagate_lindblad(
            rho, omega, deltas4, durations4, gamma, 64)),
    ]


def time_call(fn, repeats):
    fn()  # warm up
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=2000,
                        help="calls per timing batch (default 2000)")
    args = parser.parse_args(argv)

    names = _kernels.available_backends()
    print("backends: %s (active: %s)" % (", ".join(names), _kernels.BACKEND_NAME))
    print()
    header = "%-24s" % "workload" + "".join("%14s" % n for n in names)
    if "fallback" in names and len(names) > 1:
        header += "%10s" % "speedup"
    print(header)
    print("-" * len(header))
    for label, call in workloads():
        times = {}
        for name in names:
            backend = _kernels.get_backend(name)
            repeats = args.repeats
            if "lindblad" in label:
                repeats = max(1, repeats // 20)
            times[name] = time_call(lambda: call(backend), repeats)
        row = "%-24s" % label
        for name in names:
            row += "%12.2f us" % (times[name] * 1e6)
        if "fallback" in times and len(times) > 1:
            other = [n for n in names if n != "fallback"][0]
            row += "%9.1fx" % (times["fallback"] / times[other])
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
