"""Time the pure-Python and compiled kernel backends side by side.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from hybridnav import kernels, mechanization as mech
from hybridnav import scenario as sc


def cases():
    b = sc.synthesize(sc.make_profile("figure_eight", 60.0))
    s0 = b.truth.state(0)
    p = s0.pos
    earth = mech._earth_args(mech.WGS84)
    rng = np.random.default_rng(0)
    x = rng.standard_normal((500, 6, 200))
    w = rng.standard_normal((32, 6, 9))
    bias = rng.standard_normal(32)
    dy = rng.standard_normal((500, 32, 192))
    return {
        "strapdown_run (6000 steps)": lambda m: m.strapdown_run(
            p.lat, p.lon, p.alt, s0.vel, s0.dcm, b.accel, b.gyro, b.dt, *earth),
        "conv1d_forward (500x6x200, 32x9)": lambda m: m.conv1d_forward(x, w, bias),
        "conv1d_backward (500x6x200, 32x9)": lambda m: m.conv1d_backward(x, w, dy),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available_backends()
    names = list(backends)
    print(f"{'kernel':36s}" + "".join(f"{n:>12s}" for n in names) +
          ("     speedup" if "cython" in backends else ""))
    for label, fn in cases().items():
        best = {n: min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat))
                for n, m in backends.items()}
        line = f"{label:36s}" + "".join(f"{best[n] * 1e3:10.2f}ms" for n in names)
        if "cython" in best:
            line += f"{best['python'] / best['cython']:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
