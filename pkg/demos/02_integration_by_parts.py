"""Integration by parts on path space, with and without a cut-off.

E[<DF, h>_H] should equal E[F * Theta_h], where Theta_h is an Ito integral
of h' + 1/2 Ric h against the anti-development.  In flat space, with
F = int_0^1 gamma ds and h(s) = min(s, 1), both sides equal 1/2.

Run:  python demos/02_integration_by_parts.py
"""
import numpy as np

from pathspace import Euclidean, Hyperbolic2, RngStream, Sphere2
from pathspace.pathcalc import calculus
from pathspace.pathcalc.ensemble import EnsembleSpec
from pathspace.pathcalc.library import IBP_SUITE, get_direction, get_function, mean_coordinate

E = Euclidean(1)
ens = EnsembleSpec(E, np.zeros(1), 1e-3, 5000, RngStream(3, "demo/ibp"), 1.5)
res = calculus.ibp_residual(mean_coordinate(E, 1.0), get_direction("ramp", 1), ens)
print(f"flat analytic case: lhs = {res.lhs.value:.6f}, rhs = {res.rhs.value:.4f} +- {res.rhs.stderr:.4f}")

# The same identity on curved spaces; the hyperbolic plane needs the cut-off
# l_{m,T} because its volume grows exponentially.
for M, cut in ((Sphere2(), (None, None)), (Hyperbolic2(), (2.0, 1.0))):
    ens = EnsembleSpec(M, M.origin(), 1e-2, 3000, RngStream(4, f"demo/ibp/{M.dim}{cut[0]}"), 1.5)
    functions = [get_function(name, M) for name in IBP_SUITE]
    for r in calculus.ibp_suite(functions, [get_direction("bump", 2)], ens, *cut):
        print(f"{type(M).__name__:<12} {r.label:<24} z = {r.z:+.2f}")
