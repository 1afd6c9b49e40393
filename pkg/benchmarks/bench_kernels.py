"""Time the numba kernels against the pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--batch 2000] [--repeat 5]

Both paths are called explicitly through ``use_numba=``, so the
URLLC_DISABLE_NUMBA flag does not matter here. Outputs are checked for
equality before timing.
"""
import argparse
import time

import numpy as np

from urllc_lte import codec
from urllc_lte._accel import backend_name
from urllc_lte.blind import Mode
from urllc_lte.harness import SimConfig, simulate_block


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    words = rng.integers(0, 2, (args.batch, 61), dtype=np.uint8)
    frames = codec.attach_crc(words[:, :45], 0x4A3F)
    llr = codec.bits_to_llr(codec.tbcc_encode(frames)) + rng.standard_normal((args.batch, 183))

    kernels = {
        "crc16": lambda jit: codec.crc16_register(words, use_numba=jit),
        "tbcc_encode": lambda jit: codec.tbcc_encode(frames, use_numba=jit),
        "viterbi": lambda jit: codec.viterbi_decode_tailbiting(llr, use_numba=jit),
    }
    print(f"batch {args.batch}, best of {args.repeat}")
    print(f"{'kernel':<12} {'numba us/row':>13} {'numpy us/row':>13} {'speedup':>8}")
    for name, fn in kernels.items():
        np.testing.assert_array_equal(fn(True), fn(False))  # also warms the JIT
        t_jit = best_of(lambda: fn(True), args.repeat)
        t_np = best_of(lambda: fn(False), args.repeat)
        per = 1e6 / args.batch
        print(f"{name:<12} {t_jit * per:13.2f} {t_np * per:13.2f} {t_np / t_jit:8.1f}x")

    cfg = SimConfig(modes=(Mode.SINGLE,), al_set=(2,), snr_start=0.0, snr_stop=0.0)
    simulate_block(cfg, Mode.SINGLE, 2, 0, 0, 10)
    t = best_of(lambda: simulate_block(cfg, Mode.SINGLE, 2, 0, 0, 250), 2)
    print(f"end-to-end single-mode AL2 trial, {backend_name()} default path: "
          f"{t / 250 * 1e3:.3f} ms")


if __name__ == "__main__":
    main()
