#!/usr/bin/env python3
"""Heat-kernel decay sweeps: gradient decay, weighted moments, block norms."""
import argparse
import math

import numpy as np

from stablesde import dyadic, heatkernel as hk, levy


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=1.5)
    args = ap.parse_args()
    spec = levy.ProcessSpec(args.alpha, levy.Sphere.cylindrical(1))

    per = dyadic.build_partition(1, 2 * math.pi, 8192)
    prof = dyadic.GridFunction.from_callable(per,
                                             lambda x: np.tanh(np.sin(x) / 0.009))
    times = np.exp(np.linspace(math.log(0.007), math.log(0.5), 12))
    for k in (0, 1):
        rep = hk.gradient_decay_probe(prof, times, spec, k=k)
        print(f"grad decay k={k}: slope {rep.slope:+.4f} "
              f"(bound exponent {-k / args.alpha:+.4f})")

    wide = dyadic.build_partition(1, 1024.0, 131072)
    tls = [0.05 * 2**i for i in range(5)]
    for k, beta in ((0, 0.0), (1, 0.0), (0, 1.0)):
        vals = [hk.moment_integral(hk.density_fft(spec, t, wide), beta, k)
                for t in tls]
        slope = float(np.polyfit(np.log(tls), np.log(vals), 1)[0])
        print(f"moment k={k} beta={beta}: slope {slope:+.4f} "
              f"(exponent {-(k - beta) / args.alpha:+.4f})")

    bg = dyadic.build_partition(1, 256.0, 65536)
    js = list(range(3, 9))
    qs = [hk.block_l1_time_quadrature(spec, bg, j, 1.0) for j in js]
    slope = float(np.polyfit(np.array(js) * math.log(2), np.log(qs), 1)[0])
    print(f"time-integrated block L1: large-j slope {slope:+.4f} "
          f"(exponent {-args.alpha:+.4f})")
    for t in (0.1, 1.0, 10.0):
        print(f"lowest block at t={t}: {hk.block_density_l1(spec, t, bg, -1):.4f}")


if __name__ == "__main__":
    main()
