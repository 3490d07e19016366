"""Gradient, Dirichlet form, integration by parts and the damped gradient formula."""

from dataclasses import dataclass

import numpy as np

from ..brownian import TwoSidedPath, damping_matrices
from ..geometry import Euclidean, GeometryError, Sphere2
from ..montecarlo import MonteCarloEstimate, combined_z
from .cutoff import cutoff as make_cutoff
from .cutoff import no_cutoff
from .cylinder import h_inner, leg_weights


def _legs(path):
    if isinstance(path, TwoSidedPath):
        return [(path.forward, 1.0), (path.backward, -1.0)]
    return [(path, 1.0)]


def _as_tuple(grad):
    return grad if isinstance(grad, tuple) else (grad,)


def gradient(F, path):
    """Grid representation of DF (see :meth:`CylinderFunction.gradient`)."""
    return F.gradient(path)


def directional_derivative(F, path, h, cutoff=None):
    return F.directional_derivative(path, h, cutoff)


def inner_H(path, a, b):
    """<a, b>_H summed over the legs of ``path``; a and b as returned by gradient()."""
    total = 0.0
    for (leg, _), x, y in zip(_legs(path), _as_tuple(a), _as_tuple(b)):
        total = total + h_inner(x, y, leg.times)
    return total


def direction_on_grid(path, h):
    """h sampled on each leg (backward legs see h(-s))."""
    return tuple(h(sign * leg.times) for leg, sign in _legs(path))


def energy_samples(F, G, path):
    """Per-path 1/2 <DF, DG>_H."""
    dF = F.gradient(path)
    dG = dF if G is F else G.gradient(path)
    return 0.5 * inner_H(path, dF, dG)


def dirichlet_form(F, G, ensemble):
    """Monte Carlo estimate of E(F, G) = 1/2 E <DF, DG>_H."""
    out = ensemble.map(lambda paths, idx: {"e": energy_samples(F, G, paths)})
    return MonteCarloEstimate.from_samples(out["e"], ensemble.stream.master_seed)


# -- integration by parts ---------------------------------------------------

def cutoffs_for(path, m=None, T=None, origin=None):
    """One cut-off process per leg; ``m=None`` switches the cut-off off."""
    legs = [leg for leg, _ in _legs(path)]
    if m is None:
        return tuple(no_cutoff(leg) for leg in legs)
    if origin is None:
        origin = legs[0].points[:, :1]
    return tuple(make_cutoff(leg, m, T, origin) for leg in legs)


def ito_weight(leg, hv, lvals):
    """Left-point Ito sum of <(l h)' + 1/2 Ric (l h), d beta> on one leg.

    (l h)' is the forward grid difference; the cut-off value at the next node
    only depends on the past, so the integrand stays adapted. Increments
    past the end of the stored leg are not included: the functionals used
    here do not look beyond it, so those terms have mean zero.
    """
    if leg.n_steps == 0:
        return np.zeros(leg.n_paths)
    lh = lvals[:, :, None] * hv[None, :, :]
    slope = np.diff(lh, axis=1) / leg.dt
    integrand = slope + 0.5 * leg.manifold.ricci_apply(leg.frames[:, :-1], lh[:, :-1])
    return np.einsum("bki,bki->b", integrand, leg.increments)


def ibp_samples(F, h, path, m=None, T=None, origin=None):
    """Per-path samples of <DF, l h>_H (lhs) and F * Theta (rhs)."""
    out = _ibp_block([F], [h], path, m, T, origin)
    return {"lhs": out["lhs0_0"], "rhs": out["rhs0_0"], "F": out["F0"], "theta": out["theta0"]}


def _ibp_block(functions, directions, path, m=None, T=None, origin=None):
    """lhs/rhs samples for every (F, h) pair on one batch of paths.

    Theta only depends on h and DF only on F, so each is computed once.
    """
    legs = [leg for leg, _ in _legs(path)]
    cuts = cutoffs_for(path, m, T, origin)
    out = {}
    weighted = []
    for j, h in enumerate(directions):
        hv = direction_on_grid(path, h)
        out[f"theta{j}"] = sum(ito_weight(leg, hk, c.values) for leg, hk, c in zip(legs, hv, cuts))
        weighted.append([c.values[:, :, None] * hk[None] for c, hk in zip(cuts, hv)])
    for i, F in enumerate(functions):
        u = F.integrals(path)
        value = F.outer(u)
        out[f"F{i}"] = value
        dF = _as_tuple(F.gradient(path, integrals=u))
        for j in range(len(directions)):
            lhs = sum(h_inner(g, lh, leg.times) for leg, g, lh in zip(legs, dF, weighted[j]))
            out[f"lhs{i}_{j}"] = lhs
            out[f"rhs{i}_{j}"] = value * out[f"theta{j}"]
    return out


@dataclass
class IBPResult:
    lhs: MonteCarloEstimate
    rhs: MonteCarloEstimate
    z: float
    paired_z: float
    label: str = ""

    @property
    def passed(self):
        return abs(self.z) <= 3.0


def ibp_from_samples(samples, seed=0, label=""):
    lhs = MonteCarloEstimate.from_samples(samples["lhs"], seed)
    rhs = MonteCarloEstimate.from_samples(samples["rhs"], seed)
    z = float(combined_z(lhs, rhs))
    diff = MonteCarloEstimate.from_samples(samples["lhs"] - samples["rhs"], seed, keep=False)
    paired = float(diff.z_against(0.0))
    return IBPResult(lhs, rhs, z, paired, label)


def ibp_residual(F, h, ensemble, m=None, T=None):
    """Both sides of the integration by parts identity on one ensemble."""
    out = ensemble.map(lambda paths, idx: ibp_samples(F, h, paths, m, T))
    return ibp_from_samples(out, ensemble.stream.master_seed, f"{F.name}/{h.name}")


def ibp_suite(functions, directions, ensemble, m=None, T=None):
    """All (F, h) pairs evaluated on one shared ensemble of paths."""
    out = ensemble.map(lambda paths, idx: _ibp_block(functions, directions, paths, m, T))
    results = []
    for i, F in enumerate(functions):
        for j, h in enumerate(directions):
            samples = {"lhs": out[f"lhs{i}_{j}"], "rhs": out[f"rhs{i}_{j}"]}
            results.append(ibp_from_samples(samples, ensemble.stream.master_seed, f"{F.name}/{h.name}"))
    return results


# -- gradient of the expectation ---------------------------------------------

def damped_weight(F, path):
    """J(gamma) = sum over legs of int M_s DF(s) ds, shape (B, n)."""
    total = 0.0
    for (leg, _), g in zip(_legs(path), _as_tuple(F.gradient(path))):
        c = leg_weights(leg.times)
        M = damping_matrices(leg)
        total = total + np.einsum("bkij,bkj,k->bi", M, g, c)
    return total


def _check_compact(manifold):
    if not isinstance(manifold, (Sphere2, Euclidean)):
        raise GeometryError("the damped gradient formula is used on compact (or flat) manifolds only")


def gradient_samples(F, path):
    J = damped_weight(F, path)
    leg = path.forward if isinstance(path, TwoSidedPath) else path
    return np.einsum("bdi,bi->bd", leg.frames[:, 0], J)


def gradient_of_expectation(F, ensemble):
    """Estimate of grad_x E_x[F] as an ambient/chart vector at the start point."""
    _check_compact(ensemble.manifold)
    out = ensemble.map(lambda paths, idx: {"g": gradient_samples(F, paths)})
    return MonteCarloEstimate.from_samples(out["g"], ensemble.stream.master_seed)


def shifted_start(ensemble, direction, eps):
    """Ensembles started at exp(x, +-eps e) with the frame carried along."""
    M = ensemble.manifold
    x = np.asarray(ensemble.x0, dtype=float)
    e = np.asarray(direction, dtype=float)
    frame = M.standard_frame(x) if ensemble.frame0 is None else np.asarray(ensemble.frame0)
    out = []
    for sign in (1.0, -1.0):
        y = M.exp(x, sign * eps * e)
        moved = M.transport(x[None, :], y[None, :], frame.T).T if not isinstance(M, Euclidean) else frame
        out.append(ensemble.with_(x0=y, frame0=M.orthonormalize(y, moved)))
    return out


def fd_directional_gradient(F, ensemble, direction, eps=0.02):
    """Central difference (E_{x+} F - E_{x-} F) / (2 eps) with common random numbers."""
    plus, minus = shifted_start(ensemble, direction, eps)
    fp = plus.map(lambda paths, idx: {"F": F(paths)})["F"]
    fm = minus.map(lambda paths, idx: {"F": F(paths)})["F"]
    return MonteCarloEstimate.from_samples((fp - fm) / (2 * eps), ensemble.stream.master_seed)
