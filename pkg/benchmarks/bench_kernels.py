"""Time the compiled and pure-Python kernel backends on identical inputs.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--quick]

Prints one line per kernel and backend with the best wall time, and checks
that both backends return the same answer.
"""

import argparse
import sys
import time

import numpy as np

from ppgposture import kernels, preprocess, segment, synth
from ppgposture.classify.svm import kernel_matrix
from ppgposture.wire import encode_many, records_for_values


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _inputs(quick):
    rng = np.random.default_rng(0)
    n_rec = 20_000 if quick else 200_000
    payload = encode_many(records_for_values(rng.integers(0, 2**31, n_rec), 100.0))

    rec, _ = synth.generate_recording(synth.preset_scenario("Stationary", 0, duration=60.0 if quick else 600.0))
    x = preprocess.build_views(rec).filtered
    period = segment.estimate_period(x, rec.sample_rate).samples
    base = segment.moving_average_baseline(x, segment.baseline_window(period))

    m = 200 if quick else 600
    X = rng.standard_normal((m, 10))
    y = np.where(X[:, 0] + 0.5 * rng.standard_normal(m) > 0, 1.0, -1.0)
    K = kernel_matrix(X, X, "poly", degree=2, gamma=0.1)
    return {
        "parse_tokens": (lambda mod: mod.parse_tokens(payload), f"{len(payload)} bytes"),
        "select_onsets": (lambda mod: mod.select_onsets(x, base, period / 2.0), f"{x.size} samples"),
        "smo_solve": (lambda mod: mod.smo_solve(K, y, 1.0, 1e-3, 50 * m), f"{m} rows"),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(u, v) for u, v in zip(a, b))
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), atol=1e-8)
    return a == b


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--quick", action="store_true", help="small inputs")
    args = p.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; timing the Python fallback only", file=sys.stderr)
    print(f"{'kernel':<15}{'input':>16}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    ok = True
    for name, (fn, size) in _inputs(args.quick).items():
        times, outs = {}, {}
        for b, mod in backends.items():
            times[b], outs[b] = _best(lambda: fn(mod), args.repeat)
        line = f"{name:<15}{size:>16}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends)
        if "cython" in times:
            line += f"{times['python'] / times['cython']:>9.1f}x"
            if not _same(outs["python"], outs["cython"]):
                line += "  MISMATCH"
                ok = False
        print(line)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
