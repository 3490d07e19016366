"""Brownian motion on the unit sphere, seen through one eigenfunction.

For the generator 1/2 Laplacian, cos of the distance from the start point is
an eigenfunction with eigenvalue -1, so E cos rho(x0, gamma_t) = e^{-t}.
The geodesic random walk does not hit this exactly: every step multiplies
the mean by E cos R with R Rayleigh(sqrt(dt)), which we can also compute.

Run:  python demos/01_brownian_on_the_sphere.py
"""
import math

from pathspace import RngStream, Sphere2, brownian

S = Sphere2()
times = [0.25, 0.5, 1.0]

print("t      estimate   +- s.e.    e^-t       exact walk law")
for dt in (1e-2, 0.25):
    est = brownian.cos_decay(S, S.origin(), times, 8000, dt, RngStream(1, f"demo/sphere/{dt}"))
    print(f"-- step dt = {dt:g}")
    for t in times:
        e = est[t]
        print(f"{t:<6g} {e.value:.5f}    {e.stderr:.5f}    {math.exp(-t):.5f}    {brownian.walk_cos_mean(t, dt):.5f}")

# At dt = 0.25 the walk bias is visible and the estimate sits on the walk law,
# not on e^{-t}.  Halving dt halves the bias:
for t in times:
    b1 = brownian.walk_cos_mean(t, 1e-3) - math.exp(-t)
    b2 = brownian.walk_cos_mean(t, 5e-4) - math.exp(-t)
    print(f"bias at t={t:g}: {b1:.2e} -> {b2:.2e} (ratio {b2 / b1:.3f})")

# The Ricci damping matrix on the unit sphere is exactly e^{-t/2} I.
path = brownian.sample_paths(S, S.origin(), 1.0, 1e-2, RngStream(2, "demo/damping"), [0])
M = brownian.damping_matrices(path)
print("M_1 =", M[0, -1].round(6).tolist(), " e^{-1/2} =", round(math.exp(-0.5), 6))
