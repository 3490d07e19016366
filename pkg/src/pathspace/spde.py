"""Stochastic heat equation for manifold-valued strings.

The string u(x), x in a window of the line, evolves by

    du = 1/2 (u'' + Gamma(u)(u', u')) dt + U dW(t, x)

with space-time white noise read in an orthonormal frame U. On the lattice
the drift at site j is ``(log(u_j, u_{j+1}) + log(u_j, u_{j-1})) / (2 h^2)``:
for a chart manifold the second-order expansion of the logarithm supplies
the Christoffel term, so no connection coefficients appear in the scheme.
Each site then moves along ``exp(u_j, drift dt + U_j dW_j / sqrt(h))`` with
``dW_j ~ N(0, dt I)`` and its frame is carried along the same geodesic.

For flat space the lattice is a linear Ornstein-Uhlenbeck system whose
generator is diagonal in a sine basis, which gives exact-in-time Gaussian
laws (:func:`exact_euclidean_evolve`) and an exact stationary covariance.

Boundary conditions:

``pinned``
    u_0 is held at the origin; the right end is free (one-sided difference).
    This is the half-line window [0, L]; its stationary law is discrete
    Brownian motion started at the origin.
``dirichlet``
    both ends are held fixed.
``free``
    both ends use one-sided differences (whole-line window [-L, L]).
"""

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .brownian import walk
from .geometry import Euclidean
from .montecarlo import MonteCarloEstimate, ensemble_map
from .rng import LEG_AUX, LEG_INITIAL, RngStream

BOUNDARIES = ("pinned", "dirichlet", "free")


class CFLError(ValueError):
    """Raised when the time step is too large for the explicit lattice scheme."""


def check_cfl(dt, h):
    if dt <= 0:
        raise CFLError("dt must be positive")
    if dt > 0.5 * h * h * (1 + 1e-12):
        raise CFLError(f"dt={dt:g} exceeds the stability limit h^2/2={0.5 * h * h:g}")


@dataclass
class StringState:
    """A batch of lattice strings.

    ``points`` has shape (B, J+1, d) and ``frames`` (B, J+1, d, n). The sites
    sit at ``x_j = left + j h``.
    """

    manifold: object
    points: np.ndarray
    frames: np.ndarray
    h: float
    boundary: str = "pinned"
    time: float = 0.0
    left: float = 0.0

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        if self.h <= 0:
            raise ValueError("lattice spacing must be positive")

    @property
    def n_sites(self):
        return self.points.shape[1]

    @property
    def J(self):
        return self.n_sites - 1

    @property
    def batch(self):
        return self.points.shape[0]

    @property
    def sites(self):
        return self.left + self.h * np.arange(self.n_sites)

    def moving(self):
        """Boolean mask of the sites that are updated by the dynamics."""
        mask = np.ones(self.n_sites, dtype=bool)
        if self.boundary in ("pinned", "dirichlet"):
            mask[0] = False
        if self.boundary == "dirichlet":
            mask[-1] = False
        return mask


def constant_state(manifold, point, J, L, batch=1, boundary="pinned"):
    """Every site at ``point`` with the manifold's standard frame."""
    point = np.asarray(point, dtype=float)
    pts = np.broadcast_to(point, (batch, J + 1, point.size)).copy()
    frames = manifold.standard_frame(pts)
    left = -L if boundary == "free" else 0.0
    width = 2 * L if boundary == "free" else L
    return StringState(manifold, pts, frames, width / J, boundary, 0.0, left)


def brownian_state(manifold, origin, J, L, stream: RngStream, indices, boundary="pinned"):
    """Lattice analogue of Wiener measure: a geodesic random walk in space.

    Site increments are N(0, h I) read in the transported frame, so for
    flat space the sites are partial sums of independent N(0, h) variables.
    """
    h = L / J
    indices = np.atleast_1d(indices)
    db = stream.normals(indices, LEG_INITIAL, (J, manifold.dim)) * math.sqrt(h)
    points, frames = walk(manifold, origin, None, db)
    return StringState(manifold, points, np.array(frames), h, boundary, 0.0, 0.0)


# -- the lattice step -----------------------------------------------------------

def intrinsic_drift(state: StringState):
    """(1/(2h^2)) sum over present neighbours of log(u_j, u_nb), shape (B, J+1, d)."""
    M = state.manifold
    u = state.points
    drift = np.zeros_like(u)
    drift[:, :-1] += M.log(u[:, :-1], u[:, 1:])
    drift[:, 1:] += M.log(u[:, 1:], u[:, :-1])
    drift /= 2 * state.h * state.h
    drift[:, ~state.moving()] = 0.0
    return drift


def step(state: StringState, dt, noise=None):
    """Advance the lattice by one explicit step.

    ``noise`` holds standard normals of shape (B, J+1, n) (``None`` gives the
    noiseless heat flow). The increment at each moving site is
    ``drift dt + U (sqrt(dt/h) noise)``.
    """
    check_cfl(dt, state.h)
    M = state.manifold
    move = state.moving()
    v = intrinsic_drift(state) * dt
    if noise is not None:
        scaled = np.asarray(noise, dtype=float) * math.sqrt(dt / state.h)
        scaled[:, ~move] = 0.0
        v = v + np.einsum("bjdi,bji->bjd", state.frames, scaled)
    if isinstance(M, Euclidean):
        points = state.points + v
        frames = state.frames
    else:
        B, S, d = state.points.shape
        p, u = M.step_frame(state.points.reshape(B * S, d), v.reshape(B * S, d),
                            state.frames.reshape((B * S,) + state.frames.shape[2:]))
        points = p.reshape(B, S, d)
        frames = u.reshape(state.frames.shape)
        points[:, ~move] = state.points[:, ~move]
        frames[:, ~move] = state.frames[:, ~move]
    return replace(state, points=points, frames=frames, time=state.time + dt)


def n_steps_for(t, dt):
    n = int(round(t / dt))
    if not math.isclose(n * dt, t, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"evolution time {t} is not a multiple of dt={dt}")
    return n


def evolve(state: StringState, t, dt, stream: RngStream, indices, snapshot_every=None):
    """Run ``t/dt`` steps; noise for trajectory ``indices[b]`` comes from its own lane.

    Returns the final state and, if ``snapshot_every`` is set, a list of
    ``(time, points)`` pairs taken every that many steps (including t=0).
    """
    check_cfl(dt, state.h)
    n = n_steps_for(t, dt)
    indices = np.atleast_1d(indices)
    noise = stream.normals(indices, LEG_AUX, (n, state.n_sites, state.manifold.dim))
    snaps = [(state.time, state.points.copy())] if snapshot_every else []
    for k in range(n):
        state = step(state, dt, noise[:, k])
        if snapshot_every and (k + 1) % snapshot_every == 0:
            snaps.append((state.time, state.points.copy()))
    if snapshot_every:
        return state, snaps
    return state


def chart_drift(manifold, left, mid, right, h):
    """1/2 (u'' + Gamma(u', u')) with centred differences, for chart manifolds."""
    left, mid, right = (np.asarray(a, dtype=float) for a in (left, mid, right))
    second = (left + right - 2 * mid) / (h * h)
    first = (right - left) / (2 * h)
    G = manifold.christoffel(mid)
    return 0.5 * (second + np.einsum("...abc,...b,...c->...a", G, first, first))


def three_site_drift(manifold, left, mid, right, h):
    """The intrinsic lattice drift at the middle of three frozen sites."""
    left, mid, right = (np.asarray(a, dtype=float) for a in (left, mid, right))
    return (manifold.log(mid, left) + manifold.log(mid, right)) / (2 * h * h)


# -- the flat-space lattice in closed form --------------------------------------

def lattice_laplacian(J, right="free"):
    """Second-difference matrix on the moving sites 1..J of a pinned-left lattice.

    ``right="free"`` drops the missing neighbour at site J (one-sided end);
    ``right="pinned"`` holds site J fixed so the moving sites are 1..J-1.
    """
    size = J if right == "free" else J - 1
    Lap = -2.0 * np.eye(size) + np.eye(size, k=1) + np.eye(size, k=-1)
    if right == "free":
        Lap[-1, -1] = -1.0
    return Lap


def eigenpairs(J, h, right="free"):
    """Eigenvalues lambda_k > 0 and orthonormal eigenvectors of -A, A = Lap / (2 h^2).

    Free right end: theta_k = (2k-1) pi / (2J+1), V[j-1, k] = 2 sin(theta_k j) / sqrt(2J+1).
    Pinned right end: theta_k = k pi / J, V[j-1, k] = sqrt(2/J) sin(theta_k j).
    In both cases lambda_k = (1 - cos theta_k) / h^2.
    """
    if right == "free":
        k = np.arange(1, J + 1)
        theta = (2 * k - 1) * np.pi / (2 * J + 1)
        j = np.arange(1, J + 1)
        V = 2.0 / math.sqrt(2 * J + 1) * np.sin(np.outer(j, theta))
    elif right == "pinned":
        k = np.arange(1, J)
        theta = k * np.pi / J
        j = np.arange(1, J)
        V = math.sqrt(2.0 / J) * np.sin(np.outer(j, theta))
    else:
        raise ValueError("right must be 'free' or 'pinned'")
    lam = (1.0 - np.cos(theta)) / (h * h)
    return lam, V


def slowest_rate(J, h, right="free"):
    return float(eigenpairs(J, h, right)[0][0])


def stationary_covariance(J, h, right="free"):
    """Exact stationary covariance V diag(1 / (2 h lambda)) V^T of the lattice OU system.

    Solves A C + C A^T + I/h = 0; with a free right end this equals
    ``h * min(i, j)``, the covariance of discrete Brownian motion.
    """
    lam, V = eigenpairs(J, h, right)
    return (V / (2 * h * lam)) @ V.T


@dataclass
class LatticeGaussian:
    """Gaussian law of one coordinate of the pinned flat-space lattice (sites 1..J).

    Coordinates of R^n are independent with identical laws, so one scalar
    field describes the whole system.
    """

    mean: np.ndarray
    cov: np.ndarray
    h: float
    right: str = "free"

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        if self.cov.shape != (self.mean.size, self.mean.size):
            raise ValueError("covariance shape does not match the mean")
        if not np.allclose(self.cov, self.cov.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")

    @property
    def J(self):
        return self.mean.size if self.right == "free" else self.mean.size + 1

    @property
    def sites(self):
        return self.h * np.arange(1, self.mean.size + 1)

    @classmethod
    def deterministic(cls, values, h, right="free"):
        values = np.asarray(values, dtype=float)
        return cls(values, np.zeros((values.size, values.size)), h, right)

    @classmethod
    def stationary(cls, J, h, right="free"):
        size = J if right == "free" else J - 1
        return cls(np.zeros(size), stationary_covariance(J, h, right), h, right)

    def site_index(self, x):
        """Row of the site at position x (must lie on the lattice)."""
        i = int(round(x / self.h)) - 1
        if i < 0 or i >= self.mean.size or not math.isclose((i + 1) * self.h, x, abs_tol=1e-9):
            raise ValueError(f"x={x} is not an interior lattice site")
        return i

    def sample(self, stream: RngStream, indices, leg=LEG_AUX):
        w, Q = np.linalg.eigh(self.cov)
        root = Q * np.sqrt(np.clip(w, 0.0, None))
        z = stream.normals(indices, leg, (self.mean.size,))
        return self.mean + z @ root.T


def exact_euclidean_evolve(g: LatticeGaussian, t, noise=True):
    """Exact law after time t of du = A u dt + h^{-1/2} dW, A = Lap / (2 h^2).

    In the sine basis every mode is an independent Ornstein-Uhlenbeck
    process: mean e^{-lambda t} m, variance e^{-2 lambda t} s + (1 - e^{-2 lambda t}) / (2 h lambda).
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return LatticeGaussian(g.mean.copy(), g.cov.copy(), g.h, g.right)
    lam, V = eigenpairs(g.J, g.h, g.right)
    decay = np.exp(-lam * t)
    mean = V @ (decay * (V.T @ g.mean))
    S = V.T @ g.cov @ V
    S = decay[:, None] * S * decay[None, :]
    if noise:
        S = S + np.diag(-np.expm1(-2 * lam * t) / (2 * g.h * lam))
    cov = V @ S @ V.T
    return LatticeGaussian(mean, 0.5 * (cov + cov.T), g.h, g.right)


def propagator(J, h, t, right="free"):
    """e^{tA} on the moving sites."""
    lam, V = eigenpairs(J, h, right)
    return (V * np.exp(-lam * t)) @ V.T


def dirichlet_heat_kernel(t, x, y):
    """Kernel of 1/2 d^2/dx^2 on the half-line killed at 0 (image charges)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("heat kernel needs t > 0")
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(x < 0) or np.any(y < 0):
        raise ValueError("half-line kernel needs x, y >= 0")
    c = 1.0 / np.sqrt(2 * np.pi * t)
    return c * (np.exp(-(x - y) ** 2 / (2 * t)) - np.exp(-(x + y) ** 2 / (2 * t)))


def halfline_noise_covariance(t, x, y):
    """Covariance of the noise part at time t on the true half-line.

    Equals int_0^t p(2r, x, y) dr; it increases to min(x, y) as t grows.
    """
    from scipy import integrate

    def integrand(r):
        return dirichlet_heat_kernel(2 * r, x, y) if r > 0 else 0.0

    value, _ = integrate.quad(integrand, 0.0, t, limit=200)
    return value


# -- statistical experiments ----------------------------------------------------

def _pair_stats(samples, sites, pairs, target=None, seed=0):
    """Empirical covariances with standard errors for the given site pairs."""
    centred = samples - samples.mean(axis=0)
    rows = []
    for a, b in pairs:
        prod = centred[:, sites[a]] * centred[:, sites[b]]
        est = MonteCarloEstimate.from_samples(prod, seed, keep=False)
        n = est.n_samples
        est.value *= n / max(n - 1, 1)
        row = {"x": a, "y": b, "estimate": est.value, "stderr": est.stderr}
        if target is not None:
            row["target"] = float(target(a, b))
            row["z"] = (row["estimate"] - row["target"]) / est.stderr if est.stderr > 0 else 0.0
        rows.append(row)
    return rows


def covariance_limit(t=10.0, L=8.0, J=256, xs=(0.5, 1.0, 2.0), n_samples=10_000,
                     stream: RngStream = None):
    """Sample the exact flat-space law at time t from zero data and compare with min(x, y).

    Each check passes when ``|C_hat - min(x, y)| <= h + 3 s.e.``.
    """
    stream = stream or RngStream(0, "covariance-limit")
    h = L / J
    g = exact_euclidean_evolve(LatticeGaussian.deterministic(np.zeros(J), h), t)
    sites = {x: g.site_index(x) for x in xs}
    samples = ensemble_map(lambda i: g.sample(stream, i), n_samples, J)
    pairs = [(a, b) for i, a in enumerate(xs) for b in xs[i:]]
    rows = _pair_stats(samples, sites, pairs, lambda a, b: min(a, b), stream.master_seed)
    for row in rows:
        a, b = row["x"], row["y"]
        row["exact"] = float(g.cov[sites[a], sites[b]])
        row["tolerance"] = h + 3 * row["stderr"]
        row["passed"] = abs(row["estimate"] - row["target"]) <= row["tolerance"]
    return rows


def euclidean_invariance(J=64, L=4.0, dt=None, t=1.0, xs=(0.5, 1.0, 2.0, 4.0), n_paths=2000,
                         stream: RngStream = None):
    """Start at discrete Brownian motion, run the lattice stepper and compare covariances.

    The reference is the exact stationary covariance of the time-continuous
    lattice system; the explicit Euler step adds a bias of about dt/(4h).
    """
    stream = stream or RngStream(0, "spde-invariance")
    h = L / J
    dt = h * h / 4 if dt is None else dt
    M = Euclidean(1)
    ref = stationary_covariance(J, h)
    sites = {x: int(round(x / h)) for x in xs}

    def block(idx):
        s0 = brownian_state(M, np.zeros(1), J, L, stream, idx)
        s1 = evolve(s0, t, dt, stream, idx) if t > 0 else s0
        return {"before": s0.points[:, :, 0], "after": s1.points[:, :, 0]}

    per_path = (n_steps_for(t, dt) + 4) * (J + 1)
    out = ensemble_map(block, n_paths, per_path)
    pairs = [(a, b) for i, a in enumerate(xs) for b in xs[i:]]

    def target(a, b):
        return ref[sites[a] - 1, sites[b] - 1]

    rows = []
    for label in ("before", "after"):
        for row in _pair_stats(out[label], sites, pairs, target, stream.master_seed):
            row["stage"] = label
            row["passed"] = abs(row["z"]) <= 3.0
            rows.append(row)
    return rows


def cos_distance_stats(manifold, points, pairs):
    """Per-trajectory cos(rho(u_j, u_k)) for the site index pairs."""
    return np.stack([np.cos(manifold.distance(points[:, j], points[:, k])) for j, k in pairs], axis=1)


def sphere_invariance(manifold=None, J=32, L=2.0, dt=None, t=0.5, pairs=((0, 8), (0, 32), (8, 24), (16, 32)),
                      n_paths=1000, band=0.05, stream: RngStream = None):
    """Self-comparison of E[cos rho(u_j, u_k)] before and after lattice evolution."""
    from .geometry import Sphere2

    manifold = manifold or Sphere2()
    stream = stream or RngStream(0, "spde-invariance-sphere")
    h = L / J
    dt = h * h / 4 if dt is None else dt
    o = manifold.origin()

    def block(idx):
        s0 = brownian_state(manifold, o, J, L, stream, idx)
        s1 = evolve(s0, t, dt, stream, idx) if t > 0 else s0
        return {"before": cos_distance_stats(manifold, s0.points, pairs),
                "after": cos_distance_stats(manifold, s1.points, pairs)}

    per_path = (n_steps_for(t, dt) + 4) * (J + 1) * 6
    out = ensemble_map(block, n_paths, per_path)
    rows = []
    for i, (j, k) in enumerate(pairs):
        before = MonteCarloEstimate.from_samples(out["before"][:, i], stream.master_seed, keep=False)
        after = MonteCarloEstimate.from_samples(out["after"][:, i], stream.master_seed, keep=False)
        diff = MonteCarloEstimate.from_samples(out["after"][:, i] - out["before"][:, i],
                                               stream.master_seed, keep=False)
        exact = math.exp(-abs(k - j) * h)
        rows.append({"site_j": j, "site_k": k, "before": before.value, "after": after.value,
                     "drift": diff.value, "stderr": diff.stderr, "continuum": exact,
                     "passed": abs(diff.value) <= 3 * diff.stderr + band})
    return rows


def invariance_test(mode="euclidean", **kwargs):
    """Report table for the invariance of the lattice Wiener measure (flat or spherical)."""
    if mode == "euclidean":
        return euclidean_invariance(**kwargs)
    if mode == "sphere":
        return sphere_invariance(**kwargs)
    raise ValueError("mode must be 'euclidean' or 'sphere'")


def linear_decay(a, J, h, times, right="free"):
    """mu(|P_t F - mu F|^2) for F(u) = <a, u> under the stationary lattice law."""
    C = stationary_covariance(J, h, right)
    out = []
    for t in times:
        v = propagator(J, h, t, right).T @ a
        out.append(float(v @ C @ v))
    return np.array(out)


def quadratic_decay(Q, J, h, times, right="free"):
    """Same for F(u) = u^T Q u: the variance of a Gaussian quadratic form, 2 tr((Q_t C)^2)."""
    C = stationary_covariance(J, h, right)
    out = []
    for t in times:
        P = propagator(J, h, t, right)
        Qt = P.T @ Q @ P
        QC = Qt @ C
        out.append(float(2 * np.trace(QC @ QC)))
    return np.array(out)


def ergodicity_decay(x=1.0, L=8.0, J=256, times=None, right="free"):
    """Decay table of mu(|P_t F - mu F|^2) for F = value at site x.

    Returns ``(times, values, info)`` where ``info`` holds the slowest rate
    lambda_1, the fitted rate over the late window [T1/2, 2 T1]
    (T1 = 1/lambda_1) and the monotonicity flag.
    """
    h = L / J
    lam1 = slowest_rate(J, h, right)
    T1 = 1.0 / lam1
    if times is None:
        times = np.linspace(0.0, 2 * T1, 41)
    times = np.asarray(times, dtype=float)
    size = J if right == "free" else J - 1
    a = np.zeros(size)
    a[int(round(x / h)) - 1] = 1.0
    values = linear_decay(a, J, h, times, right)
    late = (times >= 0.5 * T1) & (times <= 2 * T1) & (values > 0)
    if late.sum() >= 2:
        slope = np.polyfit(times[late], np.log(values[late]), 1)[0]
    else:
        slope = float("nan")
    info = {
        "lambda1": lam1,
        "mode_time": T1,
        "fitted_rate": -slope / 2,
        "monotone": bool(np.all(np.diff(values) <= 1e-15)),
        "final_fraction": float(values[-1] / values[0]) if values[0] > 0 else 0.0,
    }
    return times, values, info


# -- output ----------------------------------------------------------------------

def write_snapshots(path, snapshots, trajectories=None):
    """CSV with columns trajectory, time, site_index, coord_0..coord_{d-1}."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        d = snapshots[0][1].shape[-1]
        writer.writerow(["trajectory", "time", "site_index"] + [f"coord_{i}" for i in range(d)])
        for time, points in snapshots:
            traj = range(points.shape[0]) if trajectories is None else trajectories
            for b, label in enumerate(traj):
                for j in range(points.shape[1]):
                    writer.writerow([label, f"{time:.17g}", j] + [f"{c:.17g}" for c in points[b, j]])
