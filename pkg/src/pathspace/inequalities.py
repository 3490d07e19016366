"""Functional inequalities on path space: LSI, Poincare, and their failures.

All checks are one-sided: an inequality ``lhs <= rhs`` passes when
``lhs <= rhs + 3 sqrt(se_lhs^2 + se_rhs^2)``. Nothing here asserts that a
constant is sharp.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .geometry import Euclidean, GeometryError, Hyperbolic2
from .montecarlo import MonteCarloEstimate
from .pathcalc.calculus import energy_samples
from .pathcalc.ensemble import EnsembleSpec
from .pathcalc.library import mean_coordinate
from .rng import RngStream

CLAMP = 1e-12


def lsi_constant(K):
    """C(K) = 4 / K^2 for Ric >= K > 0."""
    if K <= 0:
        raise ValueError("the log-Sobolev constant needs a positive Ricci lower bound")
    return 4.0 / (K * K)


def whole_line_lsi_constant(K, C1):
    """8 / K^2 + 2 C1 / K: the whole-line constant when the start law has LSI constant C1."""
    if K <= 0:
        raise ValueError("the log-Sobolev constant needs a positive Ricci lower bound")
    return 8.0 / (K * K) + 2.0 * C1 / K


# -- eta and delta_eps -------------------------------------------------------------

def eta(manifold, s, probes=None, n_paths=2000, dt=1e-2, stream: RngStream = None):
    """eta(s) = sup_x E_x exp(-int_0^s K(gamma(r)) dr).

    On constant-curvature manifolds K is constant and eta(s) = exp(-K s).
    Otherwise the supremum is taken over the given probe start points by
    Monte Carlo.
    """
    s = np.asarray(s, dtype=float)
    if manifold.constant_curvature:
        K = float(np.asarray(manifold.ricci_lower_bound(manifold.origin())))
        return np.exp(-K * s)
    from .brownian import sample_paths

    stream = stream or RngStream(0, "eta")
    probes = [manifold.origin()] if probes is None else probes
    best = np.zeros_like(s)
    horizon = float(np.max(s))
    for i, x in enumerate(probes):
        path = sample_paths(manifold, x, horizon, dt, stream.child(f"probe{i}"), np.arange(n_paths))
        K = manifold.ricci_lower_bound(path.points)
        integral = np.concatenate([np.zeros((n_paths, 1)), np.cumsum(K[:, :-1] * dt, axis=1)], axis=1)
        idx = np.rint(s / dt).astype(int)
        best = np.maximum(best, np.exp(-integral[:, idx]).mean(axis=0))
    return best


def _check_eps(eps):
    if not 0 < eps < 1:
        raise ValueError("epsilon must lie in (0, 1)")


def delta_eps_T(eta_fn, eps, T):
    """delta_eps(T) = eps^{-1} (1 - e^{-eps T}) int_0^T e^{eps s} eta(s) ds, by quadrature."""
    _check_eps(eps)
    if T == 0:
        return 0.0
    value, _ = integrate.quad(lambda s: math.exp(eps * s) * float(eta_fn(s)), 0.0, T, limit=200)
    return -math.expm1(-eps * T) / eps * value


def delta_eps(eta_fn, eps, T_grid=None):
    """sup over T of delta_eps(T), evaluated on a grid of horizons."""
    _check_eps(eps)
    T_grid = np.concatenate([np.linspace(0, 10, 41), np.geomspace(10, 400, 40)]) if T_grid is None else T_grid
    values = np.array([delta_eps_T(eta_fn, eps, float(T)) for T in T_grid])
    return float(values.max()), T_grid, values


def delta_eps_closed_form(K, eps, T=math.inf):
    """Closed form for eta(s) = e^{-K s}; the supremum (T -> infinity) is 1 / (eps (K - eps))."""
    _check_eps(eps)
    if K <= eps:
        return math.inf if math.isinf(T) else -math.expm1(-eps * T) / eps * (
            T if K == eps else math.expm1((eps - K) * T) / (eps - K))
    if math.isinf(T):
        return 1.0 / (eps * (K - eps))
    return -math.expm1(-eps * T) / eps * -math.expm1(-(K - eps) * T) / (K - eps)


# -- estimators --------------------------------------------------------------------

def entropy_estimate(values, master_seed=0, clamp=CLAMP):
    """Ent(F^2) = E[F^2 log F^2] - E[F^2] log E[F^2] with a delta-method standard error.

    Returns ``(estimate, n_clamped)``. ``|F|`` below ``clamp`` is raised to
    ``clamp`` before the logarithm and counted.
    """
    values = np.asarray(values, dtype=float)
    small = np.abs(values) < clamp
    a = np.where(small, clamp, np.abs(values))
    sq = a * a
    m = sq.mean()
    influence = sq * np.log(sq) - (math.log(m) + 1.0) * sq
    est = MonteCarloEstimate.from_samples(influence, master_seed, keep=False)
    est.value = float(np.mean(sq * np.log(sq)) - m * math.log(m))
    return est, int(small.sum())


def variance_estimate(values, master_seed=0):
    values = np.asarray(values, dtype=float)
    centred = (values - values.mean()) ** 2
    est = MonteCarloEstimate.from_samples(centred, master_seed, keep=False)
    est.value = float(values.var(ddof=1))
    return est


@dataclass
class InequalityRow:
    name: str
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    constant: float
    clamped: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def ratio(self):
        form = self.rhs / self.constant if self.constant else 0.0
        return self.lhs / form if form > 0 else (0.0 if self.lhs <= 0 else math.inf)

    @property
    def passed(self):
        return self.lhs <= self.rhs + 3.0 * math.hypot(self.lhs_se, self.rhs_se)

    def as_dict(self):
        out = {"function": self.name, "lhs": self.lhs, "lhs_se": self.lhs_se, "rhs": self.rhs,
               "rhs_se": self.rhs_se, "constant": self.constant, "ratio": self.ratio,
               "clamped": self.clamped, "passed": self.passed}
        out.update(self.extra)
        return out


@dataclass
class InequalityReport:
    label: str
    rows: list

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    @property
    def clamped(self):
        return sum(r.clamped for r in self.rows)

    def table(self):
        return [r.as_dict() for r in self.rows]


def functional_samples(functions, ensemble: EnsembleSpec):
    """Per-path values F and energies 1/2 |DF|_H^2 for every function, on one ensemble."""
    def block(paths, idx):
        out = {}
        for i, F in enumerate(functions):
            out[f"F{i}"] = F(paths)
            out[f"e{i}"] = energy_samples(F, F, paths)
        return out

    return ensemble.map(block)


def _dirichlet(samples, i, seed):
    return MonteCarloEstimate.from_samples(samples[f"e{i}"], seed, keep=False)


def lsi_report(functions, samples, constant, seed=0, label="lsi"):
    """Ent(F^2) <= 2 C E(F, F), with both sides divided by the empirical mu(F^2)."""
    rows = []
    for i, F in enumerate(functions):
        values = samples[f"F{i}"]
        norm = float(np.mean(values ** 2))
        ent, clamped = entropy_estimate(values, seed)
        form = _dirichlet(samples, i, seed)
        rows.append(InequalityRow(F.name, ent.value / norm, ent.stderr / norm,
                                  2 * constant * form.value / norm, 2 * constant * form.stderr / norm,
                                  2 * constant, clamped,
                                  {"dirichlet": form.value / norm, "entropy": ent.value / norm}))
    return InequalityReport(label, rows)


def poincare_report(functions, samples, constant, seed=0, label="poincare"):
    """Var(F) <= constant * E(F, F), normalized by mu(F^2)."""
    rows = []
    for i, F in enumerate(functions):
        values = samples[f"F{i}"]
        norm = float(np.mean(values ** 2))
        var = variance_estimate(values, seed)
        form = _dirichlet(samples, i, seed)
        rows.append(InequalityRow(F.name, var.value / norm, var.stderr / norm,
                                  constant * form.value / norm, constant * form.stderr / norm, constant,
                                  0, {"dirichlet": form.value / norm, "variance": var.value / norm}))
    return InequalityReport(label, rows)


def lsi_check(functions, ensemble: EnsembleSpec, K=1.0, samples=None):
    samples = functional_samples(functions, ensemble) if samples is None else samples
    return lsi_report(functions, samples, lsi_constant(K), ensemble.stream.master_seed)


def poincare_check(functions, ensemble: EnsembleSpec, delta=None, K=1.0, eps=0.5, samples=None):
    """Var(F) <= delta_eps E(F, F) with delta_eps from the curvature bound (4 at K=1, eps=1/2)."""
    if delta is None:
        delta = delta_eps_closed_form(K, eps)
    samples = functional_samples(functions, ensemble) if samples is None else samples
    return poincare_report(functions, samples, delta, ensemble.stream.master_seed)


def whole_line_check(functions, ensemble: EnsembleSpec, K=1.0, C1=2.0, samples=None):
    """LSI for two-sided functionals under a randomized start, constant 8/K^2 + 2 C1/K."""
    if not ensemble.two_sided:
        raise ValueError("the whole-line check needs a two-sided ensemble")
    samples = functional_samples(functions, ensemble) if samples is None else samples
    constant = whole_line_lsi_constant(K, C1)
    return lsi_report(functions, samples, constant, ensemble.stream.master_seed, label="whole-line-lsi")


def linearization_check(G, ensemble: EnsembleSpec, eps=0.1, K=1.0):
    """F = 1 + eps (G - mean G): Ent(F^2) ~ 2 eps^2 Var(G) and LSI at second order.

    Returns a dict with the entropy, its second-order prediction, the LSI
    right side 2 C(K) E(F, F) and the relative gap of the Taylor prediction.
    """
    out = ensemble.map(lambda paths, idx: {"G": G(paths), "e": energy_samples(G, G, paths)})
    g = out["G"] - out["G"].mean()
    F = 1.0 + eps * g
    ent, clamped = entropy_estimate(F, ensemble.stream.master_seed)
    predicted = 2 * eps * eps * float(np.mean(g * g))
    form = eps * eps * float(np.mean(out["e"]))
    return {"entropy": ent.value, "entropy_se": ent.stderr, "taylor": predicted,
            "relative_gap": abs(ent.value - predicted) / predicted if predicted > 0 else 0.0,
            "lsi_rhs": 2 * lsi_constant(K) * form, "clamped": clamped,
            "passed": ent.value <= 2 * lsi_constant(K) * form + 3 * ent.stderr}


# -- Poincare failure in flat space --------------------------------------------------

def poincare_failure(T_list=(1.0, 2.0, 4.0, 8.0), n_paths=20_000, dt=1e-3, stream: RngStream = None, dim=1):
    """Var(F_T) and E(F_T, F_T) for F_T = int_0^T gamma_1 ds in flat space.

    The exact values are T^3/3 and T/2, so the ratio grows like 2 T^2 / 3 and
    no Poincare constant can exist.
    """
    stream = stream or RngStream(0, "poincare-failure")
    M = Euclidean(dim)
    rows = []
    for T in T_list:
        F = mean_coordinate(M, T)
        ens = EnsembleSpec(M, np.zeros(dim), dt, n_paths, stream.child(f"T={T:g}"), T)
        samples = functional_samples([F], ens)
        var = variance_estimate(samples["F0"], stream.master_seed)
        form = _dirichlet(samples, 0, stream.master_seed)
        ratio = var.value / form.value
        ratio_se = var.stderr / form.value
        target = 2 * T * T / 3
        rows.append({"T": T, "variance": var.value, "variance_se": var.stderr, "dirichlet": form.value,
                     "dirichlet_se": form.stderr, "ratio": ratio, "ratio_se": ratio_se, "target": target,
                     "relative_error": abs(ratio - target) / target,
                     "lower_bound": T ** 3 / 6, "bound_ok": var.value + 3 * var.stderr >= T ** 3 / 6})
    Ts = np.array([r["T"] for r in rows])
    ratios = np.array([r["ratio"] for r in rows])
    slope = float(np.polyfit(np.log(Ts), np.log(ratios), 1)[0]) if len(rows) > 1 else float("nan")
    return rows, slope


# -- non-ergodicity on the hyperbolic plane --------------------------------------------

def harmonic_h2(p):
    """u(x, y) = atan2(y, x) / pi: bounded, non-constant and harmonic on the half-plane."""
    p = np.asarray(p, dtype=float)
    if np.any(p[..., 1] <= 0):
        raise GeometryError("half-plane points need y > 0")
    return np.arctan2(p[..., 1], p[..., 0]) / np.pi


def harmonic_h2_gradient(p):
    """Chart partial derivatives (du/dx, du/dy) = (-y, x) / (pi r^2)."""
    p = np.asarray(p, dtype=float)
    x, y = p[..., 0], p[..., 1]
    r2 = x * x + y * y
    return np.stack([-y, x], axis=-1) / (np.pi * r2[..., None])


def nonergodicity_witness(T_list=(2.0, 4.0, 8.0, 16.0, 32.0), n_paths=10_000, dt=1e-2,
                          stream: RngStream = None):
    """Time averages F_T = T^{-1} int_0^T u(gamma) ds of the bounded harmonic u on H^2.

    Per T: Var(F_T) (stays bounded away from zero), E(F_T, F_T) by the
    gradient formula and by the Ito-isometry formula
    (1/2) T^{-2} E|u(gamma(T)) - u(o)|^2, and the martingale drift
    E[u(gamma(T)) - u(o)].
    """
    stream = stream or RngStream(0, "nonergodicity")
    M = Hyperbolic2()
    o = M.origin()
    horizon = max(T_list)
    ens = EnsembleSpec(M, o, dt, n_paths, stream, horizon)
    nodes = [int(round(T / dt)) for T in T_list]
    u0 = float(harmonic_h2(o))

    def block(paths, idx):
        pts = paths.points
        u = harmonic_h2(pts)
        grad = harmonic_h2_gradient(pts)
        # |grad u|_g^2 = y^2 |du|^2 in the half-plane chart
        g2 = pts[..., 1] ** 2 * np.sum(grad * grad, axis=-1)
        out = {}
        for T, k in zip(T_list, nodes):
            w = np.full(k + 1, dt)
            w[0] = w[-1] = dt / 2
            out[f"F{T}"] = (u[:, : k + 1] @ w) / T
            out[f"grad{T}"] = 0.5 * (g2[:, : k + 1] @ w) / T ** 2
            out[f"ito{T}"] = 0.5 * (u[:, k] - u0) ** 2 / T ** 2
            out[f"drift{T}"] = u[:, k] - u0
        return out

    out = ens.map(block)
    seed = stream.master_seed
    rows = []
    for T in T_list:
        var = variance_estimate(out[f"F{T}"], seed)
        grad = MonteCarloEstimate.from_samples(out[f"grad{T}"], seed, keep=False)
        ito = MonteCarloEstimate.from_samples(out[f"ito{T}"], seed, keep=False)
        cross = MonteCarloEstimate.from_samples(out[f"grad{T}"] - out[f"ito{T}"], seed, keep=False)
        drift = MonteCarloEstimate.from_samples(out[f"drift{T}"], seed, keep=False)
        rows.append({"T": T, "variance": var.value, "variance_se": var.stderr,
                     "dirichlet": grad.value, "dirichlet_se": grad.stderr,
                     "dirichlet_ito": ito.value, "dirichlet_ito_se": ito.stderr,
                     "cross_z": float(cross.z_against(0.0)),
                     "drift": drift.value, "drift_se": drift.stderr, "drift_z": float(drift.z_against(0.0))})
    Ts = np.array(T_list, dtype=float)
    forms = np.array([r["dirichlet"] for r in rows])
    slope = float(np.polyfit(np.log(Ts), np.log(forms), 1)[0])
    return rows, slope

