"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Kernel timings call both implementations directly in one process. The
end-to-end timing runs a full estimation on the planted synthetic corpus once
per backend in a subprocess, toggling HSWLM_DISABLE_NUMBA.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from hswlm import _kernels

END_TO_END = """
import time
from hswlm import _kernels
from hswlm.estimation import EstimationConfig, estimate_hswlm
from hswlm.evalkit.synth import SynthSpec, synth_corpus
from hswlm.parsimony import ParsimonyConfig
corpus = synth_corpus(SynthSpec(periods=1)).periods["period0"]
cfg = EstimationConfig(parsimony=ParsimonyConfig(lam=0.05))
estimate_hswlm(corpus, cfg)  # warm-up
start = time.perf_counter()
estimate_hswlm(corpus, cfg)
print(_kernels.BACKEND, time.perf_counter() - start)
"""


def bench(fn, repeat):
    fn()  # compile / warm caches
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    print(f"{'kernel':<24}{'size':>8}{'numpy ms':>12}{'numba ms':>12}{'speed-up':>10}")
    for n in (100, 1_000, 10_000):
        t, b = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
        a = bench(lambda: _kernels.em_parsimonize_numpy(t, b, 0.1, 1e-6, 50), args.repeat)
        j = bench(lambda: _kernels.em_parsimonize_jit(t, b, 0.1, 1e-6, 50), args.repeat)
        print(f"{'em_parsimonize':<24}{n:>8}{a * 1e3:>12.3f}{j * 1e3:>12.3f}{a / j:>10.1f}")
    for k in (2, 10, 50):
        rows = rng.dirichlet(np.ones(5_000), size=k)
        a = bench(lambda: _kernels.combine_rows_numpy(rows), args.repeat)
        j = bench(lambda: _kernels.combine_rows_jit(rows), args.repeat)
        print(f"{'combine_rows (V=5000)':<24}{k:>8}{a * 1e3:>12.3f}{j * 1e3:>12.3f}{a / j:>10.1f}")

    print("\nend-to-end estimation on the planted corpus (seconds)")
    for flag in ("1", ""):
        env = dict(os.environ, HSWLM_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()
        print(f"  {backend:<8}{float(secs):.3f}")


if __name__ == "__main__":
    main()
