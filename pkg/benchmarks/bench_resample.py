"""Benchmark the compiled polyphase kernel against the NumPy fallback.

Usage: python benchmarks/bench_resample.py [--seconds 30 --repeats 5]
"""

import argparse
import math
import time

import numpy as np

from capkit import _resample_py
from capkit.resample import design_filter

try:
    from capkit import _resample_c
except ImportError:
    _resample_c = None


def bench(fn, taps, up, down, x, n_out, repeats):
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(taps, up, down, x, n_out)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seconds", type=float, default=30.0, help="input length")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    cases = [("44100 -> 16000", 44100, 16000), ("16000 -> 44100", 16000, 44100)]
    rng = np.random.default_rng(0)

    print(f"{'conversion':>16} {'numpy':>10} {'native':>10} {'speedup':>8}")
    for name, src, dst in cases:
        g = math.gcd(src, dst)
        up, down = dst // g, src // g
        x = rng.normal(0, 0.3, int(src * args.seconds))
        n_out = int(round(len(x) * up / down))
        taps = design_filter(up, down)

        t_py = bench(_resample_py.polyphase_apply, taps, up, down, x, n_out, args.repeats)
        if _resample_c is None:
            print(f"{name:>16} {t_py * 1e3:9.1f}ms {'n/a':>10} {'-':>8}")
            continue
        t_c = bench(_resample_c.polyphase_apply, taps, up, down, x, n_out, args.repeats)

        a = _resample_py.polyphase_apply(taps, up, down, x, n_out)
        b = _resample_c.polyphase_apply(taps, up, down, x, n_out)
        assert np.allclose(a, b, atol=1e-12), "kernels disagree"
        print(
            f"{name:>16} {t_py * 1e3:9.1f}ms {t_c * 1e3:9.1f}ms "
            f"{t_py / t_c:7.2f}x"
        )


if __name__ == "__main__":
    main()
