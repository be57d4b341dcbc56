"""Compare the numba and pure-numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Kernel timings call both backends in-process.  The end-to-end rows run a
tomography fit and a CHSH bootstrap in subprocesses with and without
``EPL_DISABLE_NUMBA=1``, so backend selection goes through the env flag.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from epl._kernels import _numba, _numpy
from epl.analysis.tomography import tomo_settings

END_TO_END = """
import json, time
from epl import _kernels, counts as cn
from epl.analysis import chsh as ch, tomography as tomo
from epl.source import paper_preset
cfg = paper_preset()
tomo_recs = cn.simulate_counts(cfg, [s.label for s in tomo.tomo_settings()], 1.0, 1)
chsh_recs = cn.simulate_counts(cfg, ch.chsh_settings(), 1.0, 2)
tomo.mle_reconstruct(tomo_recs); ch.measure_chsh(chsh_recs, n_resamples=10)  # warm-up / JIT
t0 = time.perf_counter(); tomo.mle_reconstruct(tomo_recs, n_bootstrap=50); t1 = time.perf_counter()
ch.measure_chsh(chsh_recs, n_resamples=5000); t2 = time.perf_counter()
print(json.dumps({"backend": _kernels.BACKEND, "tomo_bootstrap50": t1 - t0, "chsh_bootstrap5000": t2 - t1}))
"""


def best(fn, repeat):
    fn()  # JIT / cache load
    n, _ = timeit.Timer(fn).autorange()
    return min(timeit.repeat(fn, number=n, repeat=repeat)) / n


def kernel_rows(repeat):
    rng = np.random.default_rng(0)
    vecs = np.ascontiguousarray([s.vector for s in tomo_settings()])
    params = rng.normal(size=16)
    durations = np.ones(36)
    counts = rng.poisson(1e4, size=36).astype(float)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    coinc = rng.poisson(1e4, size=(1000, 4, 4)).astype(float)
    cases = {
        "mle_terms (36 settings)": lambda m: m.mle_terms(params, vecs, durations, counts),
        "projector_probabilities (36)": lambda m: m.projector_probabilities(rho, vecs),
        "correlation_batch (1000x4x4)": lambda m: m.correlation_batch(coinc),
    }
    for name, call in cases.items():
        t_np = best(lambda: call(_numpy), repeat)
        t_nb = best(lambda: call(_numba), repeat)
        yield name, t_np, t_nb


def end_to_end():
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, EPL_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        row = json.loads(res.stdout)
        out[row["backend"]] = row
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'kernel':32s} {'numpy':>12s} {'numba':>12s} {'speedup':>8s}")
    for name, t_np, t_nb in kernel_rows(args.repeat):
        print(f"{name:32s} {t_np * 1e6:10.1f}us {t_nb * 1e6:10.1f}us {t_np / t_nb:7.1f}x")
    e2e = end_to_end()
    for key in ("tomo_bootstrap50", "chsh_bootstrap5000"):
        t_np, t_nb = e2e["numpy"][key], e2e["numba"][key]
        print(f"{key:32s} {t_np * 1e3:10.1f}ms {t_nb * 1e3:10.1f}ms {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
