"""Log-Sobolev and Poincare on the sphere, and how they fail elsewhere.

On the unit sphere (Ric = 1) the entropy of F^2 is bounded by 8 E(F, F) and
the variance by 4 E(F, F).  In flat space F_T = int_0^T gamma ds has
Var = T^3/3 but E(F_T, F_T) = T/2, so no Poincare constant exists.  On the
hyperbolic plane a bounded harmonic function of the endpoint makes a
functional whose energy decays while its variance does not.

Run:  python demos/03_functional_inequalities.py
"""
import numpy as np

from pathspace import RngStream, Sphere2
from pathspace import inequalities as ineq
from pathspace.pathcalc.ensemble import EnsembleSpec
from pathspace.pathcalc.library import sphere_positive_suite

S = Sphere2()
suite = sphere_positive_suite()[:4]
ens = EnsembleSpec(S, S.origin(), 1e-2, 2000, RngStream(5, "demo/ineq"), 2.0)
samples = ineq.functional_samples(suite, ens)
for rep in (ineq.lsi_check(suite, ens, samples=samples), ineq.poincare_check(suite, ens, samples=samples)):
    for row in rep.rows:
        print(f"{rep.label:<9} {row.name:<20} lhs {row.lhs:.4f}   rhs {row.rhs:.4f}")

rows, slope = ineq.poincare_failure((1.0, 2.0, 4.0), 4000, 1e-2, RngStream(6, "demo/pf"))
for r in rows:
    print(f"flat T={r['T']:g}: Var/E = {r['variance'] / r['dirichlet']:.3f}  (2T^2/3 = {2 * r['T'] ** 2 / 3:.3f})")
print(f"log-log slope {slope:.3f}")

rows, slope = ineq.nonergodicity_witness((2.0, 4.0, 8.0, 16.0), 1500, 2e-2, RngStream(7, "demo/ne"))
for r in rows:
    print(f"hyperbolic T={r['T']:g}: E(F_T,F_T) = {r['dirichlet']:.4f}, Var = {r['variance']:.4f}")
print(f"energy slope {slope:.2f}; the variance stays away from zero")
