"""Compiled vs numpy kernels: per-kernel timings and one captioner training step.

    python benchmarks/bench_kernels.py [--rows 8192] [--width 64] [--repeat 5]

The end-to-end step runs in a subprocess per backend because the backend
is fixed at import time (``VIDEOSHIELD_PURE_PYTHON=1`` forces numpy).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from videoshield.tensorcore import kernels

STEP_SCRIPT = """
import time, numpy as np
from videoshield.captioner import CaptionerModel
from videoshield.captioner.train import batch_arrays, batch_loss
from videoshield.captioner.vocab import DEFAULT_PROMPT
from videoshield.tensorcore import Tape, backward, kernels
m = CaptionerModel.initialize(seed=0)
x = np.random.default_rng(0).random((32,) + m.config.video_shape, dtype=np.float32)
inp, tgt = batch_arrays(m.vocab, ["a red square moves left"] * 32, DEFAULT_PROMPT)
best = float("inf")
for _ in range({repeat}):
    t = time.perf_counter()
    with Tape() as tape:
        P = {{k: tape.watch(v) for k, v in m.params.items()}}
        loss = batch_loss(m, P, x, inp, tgt)
    backward(tape, loss, list(P.values()))
    best = min(best, time.perf_counter() - t)
print(kernels.BACKEND, best)
"""


def bench_kernels(rows, width, repeat):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((rows, width)).astype(np.float32)
    g = rng.standard_normal((rows, width)).astype(np.float32)
    gamma = np.ones(width, np.float32)
    beta = np.zeros(width, np.float32)
    _, xhat, rstd = kernels.layer_norm_forward(x, gamma, beta)
    p = kernels.softmax_forward(x)
    cases = {
        "gelu_forward": lambda b: kernels.gelu_forward(x, backend=b),
        "gelu_backward": lambda b: kernels.gelu_backward(x, g, backend=b),
        "layer_norm_forward": lambda b: kernels.layer_norm_forward(x, gamma, beta, backend=b),
        "layer_norm_backward": lambda b: kernels.layer_norm_backward(g, xhat, rstd, gamma, backend=b),
        "softmax_forward": lambda b: kernels.softmax_forward(x, backend=b),
        "softmax_backward": lambda b: kernels.softmax_backward(p, g, backend=b),
        "log_softmax_forward": lambda b: kernels.log_softmax_forward(x, backend=b),
    }
    print(f"{'kernel':<22}{'cython ms':>12}{'python ms':>12}{'speedup':>10}")
    for name, fn in cases.items():
        t_c = min(timeit.repeat(lambda: fn("cython"), number=1, repeat=repeat)) * 1e3
        t_p = min(timeit.repeat(lambda: fn("python"), number=1, repeat=repeat)) * 1e3
        print(f"{name:<22}{t_c:>12.3f}{t_p:>12.3f}{t_p / t_c:>10.2f}")


def bench_step(repeat):
    times = {}
    for pure in ("0", "1"):
        env = dict(os.environ, VIDEOSHIELD_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", STEP_SCRIPT.format(repeat=repeat)], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        times[out[0]] = float(out[1])
    print("\ntraining step, batch 32 (forward + backward)")
    for name, t in times.items():
        print(f"  {name:<8}{t * 1e3:10.1f} ms")
    if len(times) == 2:
        print(f"  speedup {times['python'] / times['cython']:.2f}x")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=8192)
    ap.add_argument("--width", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-step", action="store_true", help="kernels only")
    args = ap.parse_args(argv)
    if kernels.BACKEND != "cython":
        sys.exit("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")
    bench_kernels(args.rows, args.width, args.repeat)
    if not args.skip_step:
        bench_step(args.repeat)


if __name__ == "__main__":
    main()
