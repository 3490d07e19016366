"""Path-space distances, heat kernels, finite-dimensional densities and symmetry tests.

Paths given on a finite grid are treated as frozen after their last node:
the distance between two paths beyond the horizon is the distance between
their final points. With that convention both series below are finite sums
plus a closed-form geometric tail.
"""

import math

import numpy as np
from scipy import special, stats

from .brownian import PointMass, TruncatedLebesgue, UniformOnCompact, ball_volume
from .geometry import Euclidean, GeometryError, Sphere2
from .montecarlo import MonteCarloEstimate
from .pathcalc.ensemble import EnsembleSpec
from .rng import RngStream

L_MAX = 60
T_FLOOR = 0.01


# -- distances ------------------------------------------------------------------

def _check_grid(gamma, sigma, times):
    gamma = np.asarray(gamma, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    times = np.asarray(times, dtype=float)
    if gamma.shape != sigma.shape:
        raise ValueError(f"paths are on different grids: {gamma.shape} vs {sigma.shape}")
    if gamma.shape[-2] != times.size:
        raise ValueError("time grid does not match the paths")
    if times[0] != 0 or np.any(np.diff(times) <= 0):
        raise ValueError("time grid must start at 0 and increase")
    return gamma, sigma, times


def _rho_tilde(manifold, gamma, sigma):
    return np.minimum(manifold.distance(gamma, sigma), 1.0)


def _half_sup_series(r, times):
    """sum_k 2^-k sup_{[0,k]} r with r frozen after the horizon."""
    H = times[-1]
    K = max(1, math.ceil(H - 1e-12))
    running = np.maximum.accumulate(r, axis=-1)
    total = 0.0
    for k in range(1, K + 1):
        idx = np.searchsorted(times, k + 1e-12) - 1
        total = total + 0.5 ** k * running[..., idx]
    return total + 0.5 ** K * running[..., -1]


def _half_block_series(r, times):
    """sum_k 2^-k int_{k-1}^k r ds (trapezoid) with r frozen after the horizon."""
    H = times[-1]
    cumulative = np.concatenate([np.zeros(r.shape[:-1] + (1,)),
                                 np.cumsum(0.5 * (r[..., 1:] + r[..., :-1]) * np.diff(times), axis=-1)],
                                axis=-1)
    K = max(1, math.ceil(H - 1e-12))

    def integral_to(t):
        if t >= H:
            return cumulative[..., -1] + (t - H) * r[..., -1]
        i = np.searchsorted(times, t, side="right") - 1
        frac = (t - times[i]) / (times[i + 1] - times[i])
        # exact trapezoid of the linear interpolant on the partial cell
        r_t = r[..., i] + frac * (r[..., i + 1] - r[..., i])
        return cumulative[..., i] + 0.5 * (r[..., i] + r_t) * (t - times[i])

    total = 0.0
    for k in range(1, K + 1):
        total = total + 0.5 ** k * (integral_to(float(k)) - integral_to(float(k - 1)))
    return total + 0.5 ** K * r[..., -1]


def d_infinity(manifold, gamma, sigma, times):
    """Uniform-on-compacts distance sum_k 2^-k sup_{[0,k]} min(rho, 1) for half-line paths.

    ``gamma``/``sigma`` are (..., N+1, d) arrays on the common grid ``times``.
    """
    gamma, sigma, times = _check_grid(gamma, sigma, times)
    return _half_sup_series(_rho_tilde(manifold, gamma, sigma), times)


def d_tilde(manifold, gamma, sigma, times):
    """Weighted L1 distance sum_k 2^-k int_{k-1}^k min(rho, 1) ds for half-line paths."""
    gamma, sigma, times = _check_grid(gamma, sigma, times)
    return _half_block_series(_rho_tilde(manifold, gamma, sigma), times)


def d_infinity_two_sided(manifold, gamma, sigma, times):
    """Whole-line version: sup over [-k, k]. Paths are (forward, backward) pairs on the same grid."""
    rf = _rho_tilde(manifold, *_check_grid(gamma[0], sigma[0], times)[:2])
    rb = _rho_tilde(manifold, *_check_grid(gamma[1], sigma[1], times)[:2])
    return _half_sup_series(np.maximum(rf, rb), np.asarray(times, dtype=float))


def d_tilde_two_sided(manifold, gamma, sigma, times):
    """Whole-line weighted L1 distance: forward and backward blocks added."""
    times = np.asarray(times, dtype=float)
    rf = _rho_tilde(manifold, *_check_grid(gamma[0], sigma[0], times)[:2])
    rb = _rho_tilde(manifold, *_check_grid(gamma[1], sigma[1], times)[:2])
    return _half_block_series(rf, times) + _half_block_series(rb, times)


# -- heat kernels -----------------------------------------------------------------

class HeatKernel:
    """Transition density of Brownian motion (generator 1/2 Laplacian) w.r.t. volume."""

    def __init__(self, manifold, l_max=L_MAX, t_floor=T_FLOOR):
        if not isinstance(manifold, (Euclidean, Sphere2)):
            raise GeometryError("heat kernels are available for Euclidean and Sphere2 only")
        self.manifold = manifold
        self.l_max = int(l_max)
        self.t_floor = float(t_floor)

    def __repr__(self):
        return f"HeatKernel({self.manifold!r}, l_max={self.l_max})"

    def from_distance(self, t, r):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise ValueError("heat kernel needs t > 0")
        r = np.asarray(r, dtype=float)
        if isinstance(self.manifold, Euclidean):
            n = self.manifold.dim
            return (2 * np.pi * t) ** (-n / 2) * np.exp(-r * r / (2 * t))
        if np.any(t < self.t_floor):
            raise ValueError(f"t={np.min(t):g} is below the spectral truncation floor {self.t_floor:g}")
        c = np.cos(r)
        total = np.zeros(np.broadcast_shapes(t.shape, c.shape))
        for l in range(self.l_max + 1):
            total = total + (2 * l + 1) / (4 * np.pi) * np.exp(-l * (l + 1) * t / 2) * special.eval_legendre(l, c)
        return total

    def __call__(self, t, x, y):
        return self.from_distance(t, self.manifold.distance(x, y))


def heat_kernel(manifold, t, x, y, l_max=L_MAX):
    return HeatKernel(manifold, l_max)(t, x, y)


def sphere_quadrature(n_theta=96, n_phi=192):
    """Gauss-Legendre in cos(theta) times a uniform grid in phi on the unit sphere.

    Returns ``(points (Q, 3), weights (Q,))`` with weights summing to 4 pi; exact
    for spherical polynomials of degree < min(2 n_theta, n_phi).
    """
    z, wz = np.polynomial.legendre.leggauss(n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    s = np.sqrt(1 - z * z)
    pts = np.stack([np.outer(s, np.cos(phi)), np.outer(s, np.sin(phi)),
                    np.outer(z, np.ones(n_phi))], axis=-1).reshape(-1, 3)
    w = np.outer(wz, np.full(n_phi, 2 * np.pi / n_phi)).reshape(-1)
    return pts, w


def nu_density(nu, manifold, y0):
    """Density of the normalized initial law at y0 w.r.t. volume (1 for a point mass at its atom)."""
    y0 = np.asarray(y0, dtype=float)
    if isinstance(nu, PointMass):
        at = np.all(np.isclose(y0, np.asarray(nu.point, dtype=float)), axis=-1)
        if not np.all(at):
            raise ValueError("a point-mass initial law only charges its atom")
        return np.ones(y0.shape[:-1])
    if isinstance(nu, UniformOnCompact):
        return np.full(y0.shape[:-1], 1 / (4 * np.pi))
    if isinstance(nu, TruncatedLebesgue):
        inside = manifold.distance(manifold.origin(), y0) <= nu.radius
        return inside / ball_volume(manifold, nu.radius)
    raise GeometryError(f"unknown initial distribution {nu!r}")


def finite_dim_density(manifold, nu, times, points, kernel=None):
    """Joint density of (gamma(t_0), ..., gamma(t_m)) for the two-sided measure with start law nu.

    ``times`` are sorted and must contain 0; ``points`` has one row per time.
    The chain runs outward from gamma(0) in both directions, so the value is
    nu(y_0) times the product of heat kernels over consecutive gaps.
    """
    kernel = kernel or HeatKernel(manifold)
    times = np.asarray(times, dtype=float)
    points = np.asarray(points, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    zero = np.nonzero(np.isclose(times, 0.0))[0]
    if zero.size != 1:
        raise ValueError("times must contain 0 exactly once")
    i0 = int(zero[0])
    value = nu_density(nu, manifold, points[..., i0, :])
    for i in range(i0 + 1, times.size):
        value = value * kernel(times[i] - times[i - 1], points[..., i - 1, :], points[..., i, :])
    for i in range(i0 - 1, -1, -1):
        value = value * kernel(times[i + 1] - times[i], points[..., i + 1, :], points[..., i, :])
    return value


def marginal_distance_probabilities(manifold, t, edges, kernel=None):
    """P(rho(x0, gamma(t)) in each bin) from the heat kernel (Euclidean n or Sphere2)."""
    from scipy import integrate

    kernel = kernel or HeatKernel(manifold)
    if isinstance(manifold, Sphere2):
        def density(r):
            return 2 * np.pi * np.sin(r) * kernel.from_distance(t, r)
    else:
        n = manifold.dim
        area = 2 * math.pi ** (n / 2) / math.gamma(n / 2)

        def density(r):
            return area * r ** (n - 1) * kernel.from_distance(t, r)
    return np.array([integrate.quad(density, a, b, limit=200)[0] for a, b in zip(edges[:-1], edges[1:])])


def marginal_consistency(manifold, distances, t, edges, kernel=None):
    """Chi-square test of sampled rho(x0, gamma(t)) against the heat kernel marginal.

    The last bin absorbs any mass beyond the final edge.
    """
    probs = marginal_distance_probabilities(manifold, t, edges, kernel)
    counts, _ = np.histogram(distances, bins=edges)
    overflow = np.sum(distances >= edges[-1])
    counts = counts.astype(float)
    counts[-1] += overflow
    probs = probs.copy()
    probs[-1] += max(0.0, 1.0 - probs.sum())
    expected = probs / probs.sum() * counts.sum()
    stat, pvalue = stats.chisquare(counts, expected)
    return {"statistic": float(stat), "pvalue": float(pvalue), "bins": len(counts)}


# -- symmetry tests ------------------------------------------------------------------

def _z(est, target):
    return float(est.z_against(target)) if np.ndim(est.value) == 0 else est.z_against(target)


def stationarity_test(times=(0.0, 0.5, 1.0), n_paths=10_000, dt=1e-3, stream: RngStream = None,
                      manifold=None):
    """Marginals of stationary spherical Brownian motion (uniform start).

    Per time: the coordinate moments E[x_i^k], k = 1, 2, 3 (targets 0, 1/3, 0),
    the largest deviation of |gamma(t)| from 1, and the pair statistic
    E<gamma(0), gamma(t)> against e^{-t}.
    """
    manifold = manifold or Sphere2()
    stream = stream or RngStream(0, "stationarity")
    times = [float(t) for t in times]
    horizon = max(times)
    ens = EnsembleSpec(manifold, manifold.origin(), dt, n_paths, stream, max(horizon, dt),
                       nu=UniformOnCompact())
    steps = [int(round(t / dt)) for t in times]

    def block(paths, idx):
        pts = paths.points[:, steps]
        return {"x": pts, "pair": np.einsum("bkd,bd->bk", pts, paths.points[:, 0])}

    out = ens.map(block)
    rows = []
    targets = {1: 0.0, 2: 1.0 / 3.0, 3: 0.0}
    for i, t in enumerate(times):
        x = out["x"][:, i]
        for k, target in targets.items():
            est = MonteCarloEstimate.from_samples(x ** k, stream.master_seed, keep=False)
            for axis in range(3):
                se = est.stderr[axis]
                z = (est.value[axis] - target) / se if se > 0 else 0.0
                rows.append({"time": t, "statistic": f"E[x{axis}^{k}]", "estimate": float(est.value[axis]),
                             "stderr": float(se), "target": target, "z": float(z),
                             "passed": abs(z) <= 3.0})
        pair = MonteCarloEstimate.from_samples(out["pair"][:, i], stream.master_seed, keep=False)
        target = math.exp(-t)
        z = _z(pair, target) if pair.stderr > 0 else 0.0
        rows.append({"time": t, "statistic": "E<g(0),g(t)>", "estimate": pair.value, "stderr": pair.stderr,
                     "target": target, "z": z, "passed": abs(z) <= 3.0})
        norm_dev = float(np.max(np.abs(np.linalg.norm(x, axis=1) - 1.0)))
        rows.append({"time": t, "statistic": "max||g(t)|-1|", "estimate": norm_dev, "stderr": 0.0,
                     "target": 0.0, "z": 0.0, "passed": norm_dev <= 1e-12})
    return rows


def default_statistics(manifold):
    """Bounded (sphere) or moment (flat) statistics of a tuple of marginals (g1, g2)."""
    if isinstance(manifold, Sphere2):
        return {
            "<g1,g2>": lambda g1, g2: np.einsum("bd,bd->b", g1, g2),
            "g1_z": lambda g1, g2: g1[:, 2],
            "g1_z^2": lambda g1, g2: g1[:, 2] ** 2,
            "g2_x*g2_y": lambda g1, g2: g2[:, 0] * g2[:, 1],
            "cos rho(g1,g2)": lambda g1, g2: np.cos(manifold.distance(g1, g2)),
        }
    return {
        "|g1|^2": lambda g1, g2: np.sum(g1 * g1, axis=1),
        "|g2|^2": lambda g1, g2: np.sum(g2 * g2, axis=1),
        "|g2-g1|^2": lambda g1, g2: np.sum((g2 - g1) ** 2, axis=1),
        "tanh(g1_0)": lambda g1, g2: np.tanh(g1[:, 0]),
    }


def shift_invariance_test(manifold, nu, shift=0.7, times=(0.2, 1.0), n_paths=10_000, dt=1e-3,
                          stream: RngStream = None, statistics=None):
    """Compare statistics of (gamma(t1), gamma(t2)) and (gamma(t1+s), gamma(t2+s)).

    Both marginals come from the same two-sided paths, so each statistic is a
    paired difference. Times may be negative; the simulated horizon covers
    all of them. The report passes iff every |z| <= 3.
    """
    stream = stream or RngStream(0, "shift-invariance")
    statistics = statistics or default_statistics(manifold)
    t1, t2 = (float(t) for t in times)
    shifted = (t1 + shift, t2 + shift)
    all_times = [t1, t2, *shifted]
    fwd = max(max(all_times), dt)
    back = max(-min(all_times), dt)
    x0 = nu.point if isinstance(nu, PointMass) else manifold.origin()
    ens = EnsembleSpec(manifold, np.asarray(x0, dtype=float), dt, n_paths, stream, fwd,
                       two_sided=True, backward_horizon=back,
                       nu=None if isinstance(nu, PointMass) else nu)

    def snap(t):
        return round(t / dt) * dt

    def block(paths, idx):
        a1, a2 = paths.at(snap(t1)), paths.at(snap(t2))
        b1, b2 = paths.at(snap(shifted[0])), paths.at(snap(shifted[1]))
        out = {}
        for name, stat in statistics.items():
            out[name] = stat(b1, b2) - stat(a1, a2)
            out[name + "/base"] = stat(a1, a2)
        return out

    out = ens.map(block)
    rows = []
    for name in statistics:
        diff = MonteCarloEstimate.from_samples(out[name], stream.master_seed, keep=False)
        base = float(np.mean(out[name + "/base"]))
        z = _z(diff, 0.0) if diff.stderr > 0 else (0.0 if diff.value == 0 else math.inf)
        rows.append({"statistic": name, "shift": shift, "base": base, "difference": diff.value,
                     "stderr": diff.stderr, "z": z, "passed": abs(z) <= 3.0})
    return rows


def endpoint_distances(manifold, x0, T, dt, n_paths, stream):
    """rho(x0, gamma(T)) samples, used by the density/sampler consistency check."""
    ens = EnsembleSpec(manifold, np.asarray(x0, dtype=float), dt, n_paths, stream, T)
    return ens.map(lambda paths, idx: {"r": manifold.distance(paths.points[:, 0], paths.points[:, -1])})["r"]


__all__ = [
    "HeatKernel", "d_infinity", "d_tilde", "d_infinity_two_sided", "d_tilde_two_sided", "heat_kernel",
    "finite_dim_density", "marginal_consistency", "nu_density", "shift_invariance_test",
    "sphere_quadrature", "stationarity_test", "endpoint_distances",
]
