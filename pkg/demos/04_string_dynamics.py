"""The stochastic string: a heat equation driven by space-time white noise.

Flat lattice strings started from a Brownian path keep the Brownian
covariance min(x, y).  The exact Gaussian solver shows how slowly that limit
is approached from a deterministic start, and how P_t F relaxes.

Run:  python demos/04_string_dynamics.py
"""
import math

import numpy as np

from pathspace import RngStream, spde

rows = spde.euclidean_invariance(J=32, L=2.0, t=0.5, xs=(0.5, 1.0, 2.0), n_paths=1000,
                                 stream=RngStream(8, "demo/string"))
for r in rows:
    print(f"{r['stage']:<7} C({r['x']:g},{r['y']:g}) = {r['estimate']:.3f}  target {r['target']:.3f}  z {r['z']:+.2f}")

# Starting from zero, C_t(x, y) creeps up to min(x, y); the missing mass is
# the heat-kernel tail, about x y / sqrt(pi t).
for t in (10.0, 100.0, 1000.0):
    c = spde.halfline_noise_covariance(t, 1.0, 1.0)
    print(f"t={t:<6g} C(1,1) = {c:.4f}   1 - 1/sqrt(pi t) = {1 - 1 / math.sqrt(math.pi * t):.4f}")

times, values, info = spde.ergodicity_decay(1.0, 8.0, 64)
print(f"slowest rate {info['lambda1']:.5f}, fitted {info['fitted_rate']:.5f}, "
      f"left after two mode times: {values[-1] / values[0]:.4%}")
