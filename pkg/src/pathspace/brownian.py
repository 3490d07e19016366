"""Brownian motion on a manifold via the geodesic random walk.

A step draws ``db ~ N(0, dt I)`` in R^n, moves along the geodesic
``x -> exp(x, U db)`` and parallel-transports the frame ``U`` along the same
geodesic. The driving increments double as the anti-development of the path.

Paths are batched: a :class:`FramedPath` holds ``B`` trajectories on a common
time grid.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import optimize, special

from .geometry import Euclidean, GeometryError, Hyperbolic2, Sphere2
from .montecarlo import MonteCarloEstimate, ensemble_map
from .rng import LEG_BACKWARD, LEG_FORWARD, LEG_INITIAL, RngStream


@dataclass
class FramedPath:
    """Batch of discrete framed paths.

    Shapes: ``times (N+1,)``, ``points (B, N+1, d)``, ``frames (B, N+1, d, n)``,
    ``increments (B, N, n)``.
    """

    manifold: object
    times: np.ndarray
    points: np.ndarray
    frames: np.ndarray
    increments: np.ndarray

    @property
    def n_paths(self):
        return self.points.shape[0]

    @property
    def n_steps(self):
        return len(self.times) - 1

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if self.n_steps else 0.0

    @property
    def horizon(self):
        return float(self.times[-1])

    def antidevelopment(self):
        """beta(t_k) = sum of the first k increments, shape (B, N+1, n)."""
        b = np.zeros(self.increments.shape[:1] + (len(self.times),) + self.increments.shape[2:])
        np.cumsum(self.increments, axis=1, out=b[:, 1:])
        return b

    def ricci(self):
        return self.manifold.ricci_operator(self.frames)

    def select(self, rows):
        return FramedPath(self.manifold, self.times, self.points[rows], self.frames[rows],
                          self.increments[rows])

    def truncate(self, k):
        """The path restricted to the first ``k+1`` grid nodes."""
        return FramedPath(self.manifold, self.times[: k + 1], self.points[:, : k + 1],
                          self.frames[:, : k + 1], self.increments[:, :k])


@dataclass
class TwoSidedPath:
    """Forward leg for t >= 0 and backward leg parametrised by s = -t >= 0."""

    forward: FramedPath
    backward: FramedPath

    @property
    def manifold(self):
        return self.forward.manifold

    @property
    def n_paths(self):
        return self.forward.n_paths

    def at(self, t):
        """Points at signed time ``t`` (must lie on the grid)."""
        leg = self.forward if t >= 0 else self.backward
        k = int(round(abs(t) / leg.dt)) if leg.n_steps else 0
        if not np.isclose(leg.times[k], abs(t), atol=1e-9):
            raise GeometryError(f"time {t} is not on the path grid")
        return leg.points[:, k]


# -- initial distributions --------------------------------------------------

@dataclass(frozen=True)
class PointMass:
    point: tuple


@dataclass(frozen=True)
class UniformOnCompact:
    """Normalized area measure on Sphere2 (total area 4 pi recorded as the mass)."""


@dataclass(frozen=True)
class TruncatedLebesgue:
    """Riemannian volume restricted to the geodesic ball B(o, radius)."""

    radius: float


NuSpec = (PointMass, UniformOnCompact, TruncatedLebesgue)


def ball_volume(manifold, radius):
    if isinstance(manifold, Euclidean):
        n = manifold.dim
        return math.pi ** (n / 2) * radius ** n / math.gamma(n / 2 + 1)
    if isinstance(manifold, Hyperbolic2):
        return 2 * math.pi * (math.cosh(radius) - 1)
    if isinstance(manifold, Sphere2):
        return 2 * math.pi * (1 - math.cos(min(radius, math.pi)))
    raise GeometryError("no volume formula for this manifold")


def sample_initial(nu, manifold, stream: RngStream, indices):
    """Draw starting points for the given trajectory indices.

    Returns ``(points (B, d), mass)`` where ``mass`` is the total mass of the
    un-normalized measure.
    """
    indices = np.atleast_1d(indices)
    if isinstance(nu, PointMass):
        x0 = np.asarray(nu.point, dtype=float)
        return np.broadcast_to(x0, (len(indices), x0.size)).copy(), 1.0
    if isinstance(nu, UniformOnCompact):
        if not isinstance(manifold, Sphere2):
            raise GeometryError("UniformOnCompact is only available on Sphere2")
        g = stream.normals(indices, LEG_INITIAL, (3,))
        return manifold.project(g), 4 * math.pi
    if isinstance(nu, TruncatedLebesgue):
        R = float(nu.radius)
        u = stream.uniforms(indices, LEG_INITIAL, (1,))[:, 0]
        g = stream.normals(indices, LEG_INITIAL + 8, (manifold.dim,))
        direction = g / np.linalg.norm(g, axis=1, keepdims=True)
        o = manifold.origin()
        if isinstance(manifold, Euclidean):
            r = R * u ** (1.0 / manifold.dim)
            return o + r[:, None] * direction, ball_volume(manifold, R)
        if isinstance(manifold, Hyperbolic2):
            # area element sinh(r) dr dphi
            r = np.arccosh(1 + u * (math.cosh(R) - 1))
            v = (r[:, None] * direction) * o[1]
            return manifold.exp(np.broadcast_to(o, v.shape), v), ball_volume(manifold, R)
        raise GeometryError("TruncatedLebesgue is for Euclidean or Hyperbolic2")
    raise GeometryError(f"unknown initial distribution {nu!r}")


# -- sampling ---------------------------------------------------------------

def time_grid(T, dt):
    if dt <= 0:
        raise GeometryError("dt must be positive")
    n = int(round(T / dt))
    if n < 0 or not math.isclose(n * dt, T, rel_tol=1e-9, abs_tol=1e-12):
        raise GeometryError(f"horizon {T} is not a multiple of dt={dt}")
    return np.arange(n + 1) * dt, n


def _broadcast_start(manifold, x0, frame0, batch):
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim == 1:
        x0 = np.broadcast_to(x0, (batch, x0.size))
    x0 = manifold.check_point(x0)
    if frame0 is None:
        frame0 = manifold.standard_frame(x0)
    frame0 = np.asarray(frame0, dtype=float)
    if frame0.ndim == 2:
        frame0 = np.broadcast_to(frame0, (batch,) + frame0.shape)
    return x0, frame0


def walk(manifold, x0, frame0, increments):
    """Run the geodesic random walk for given increments (B, N, n).

    Returns ``points (B, N+1, d)`` and ``frames (B, N+1, d, n)``. The loop
    fills time-major buffers (contiguous per-step writes) which are then
    transposed once.
    """
    B, N, _ = increments.shape
    x0, frame0 = _broadcast_start(manifold, x0, frame0, B)
    d, n = frame0.shape[-2:]
    if isinstance(manifold, Euclidean):
        points = np.empty((B, N + 1, d))
        points[:, 0] = x0
        steps = increments @ np.swapaxes(frame0, -1, -2)
        np.cumsum(steps, axis=1, out=points[:, 1:])
        points[:, 1:] += x0[:, None, :]
        frames = np.broadcast_to(frame0[:, None], (B, N + 1, d, n))
        return points, frames
    points = np.empty((N + 1, B, d))
    frames = np.empty((N + 1, B, d, n))
    points[0] = x0
    frames[0] = frame0
    steps = np.ascontiguousarray(np.swapaxes(increments, 0, 1))
    p, u = points[0], frames[0]
    for k in range(N):
        v = np.einsum("bdi,bi->bd", u, steps[k])
        p, u = manifold.step_frame(p, v, u)
        points[k + 1] = p
        frames[k + 1] = u
    return (np.ascontiguousarray(np.swapaxes(points, 0, 1)),
            np.ascontiguousarray(np.swapaxes(frames, 0, 1)))


def sample_paths(manifold, x0, T, dt, stream: RngStream, indices, leg=LEG_FORWARD, frame0=None):
    """Brownian paths for a block of trajectory indices (one lane each)."""
    times, N = time_grid(T, dt)
    indices = np.atleast_1d(indices)
    db = stream.normals(indices, leg, (N, manifold.dim)) * math.sqrt(dt)
    points, frames = walk(manifold, x0, frame0, db)
    return FramedPath(manifold, times, points, frames, db)


def sample_bm(manifold, x0, T, dt, stream: RngStream, index=0, frame0=None):
    """A single Brownian path (batch of one)."""
    return sample_paths(manifold, x0, T, dt, stream, [index], frame0=frame0)


def sample_two_sided(manifold, x0, T, dt, stream: RngStream, indices, frame0=None, T_back=None):
    """Two independent legs from the same start point and frame."""
    indices = np.atleast_1d(indices)
    x0, frame0 = _broadcast_start(manifold, x0, frame0, len(indices))
    fwd = sample_paths(manifold, x0, T, dt, stream, indices, LEG_FORWARD, frame0)
    back = sample_paths(manifold, x0, T if T_back is None else T_back, dt, stream, indices,
                        LEG_BACKWARD, frame0)
    return TwoSidedPath(fwd, back)


# -- Ricci damping ------------------------------------------------------------

def _expm_sym(A):
    w, V = np.linalg.eigh(A)
    return np.einsum("...ij,...j,...kj->...ik", V, np.exp(w), V)


def damping_matrices(path: FramedPath):
    """Solve dM/dt = -1/2 M Ric_U along the path, M_0 = I.

    Ric read in the frame is frozen on each step, so each step multiplies by
    an exact matrix exponential. Returns an array (B, N+1, n, n).
    """
    ric = path.ricci()
    B, K, n, _ = ric.shape
    M = np.empty_like(ric)
    M[:, 0] = np.eye(n)
    if path.n_steps == 0:
        return M
    step = _expm_sym(-0.5 * path.dt * 0.5 * (ric[:, :-1] + np.swapaxes(ric[:, :-1], -1, -2)))
    for k in range(path.n_steps):
        M[:, k + 1] = M[:, k] @ step[:, k]
    return M


# -- tail probabilities -----------------------------------------------------

def tail_constant_c2(n, c1=1.0, K1=None, t_max=100.0):
    """sup_{t>0} ( t sqrt((n-1) K1(t)) - 2 c1 t^2 ), by bounded maximization.

    ``K1`` is the radial lower Ricci bound function; ``None`` means K1 = 0.
    """
    if K1 is None or n == 1:
        return 0.0

    def objective(t):
        return -(t * math.sqrt(max(0.0, (n - 1) * K1(t))) - 2 * c1 * t * t)

    grid = np.linspace(0.0, t_max, 2001)
    vals = np.array([-objective(t) for t in grid])
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(objective, bounds=(lo, hi), method="bounded")
    return float(max(vals[i], -res.fun, 0.0))


def kappa(T, c1=1.0):
    return math.exp(-1 - 2 * c1 * T) / (2 * T)


def tail_bound(n, T, N, c1=1.0, c2=0.0):
    """Upper bound exp(n + c2 - kappa(T) N^2) on P(sup rho > N)."""
    return math.exp(n + c2 - kappa(T, c1) * N * N)


def sup_abs_bm_tail(T, a, terms=200):
    """P(sup_{s<=T} |B_s| >= a) for one-dimensional BM, exact series."""
    if a <= 0:
        return 1.0
    k = np.arange(terms)
    m = 2 * k + 1
    inside = 4 / np.pi * np.sum((-1.0) ** k / m * np.exp(-(m ** 2) * np.pi ** 2 * T / (8 * a * a)))
    return float(min(1.0, max(0.0, 1.0 - inside)))


DISCRETE_MONITORING_SHIFT = -special.zeta(0.5) / math.sqrt(2 * math.pi)  # 0.5826


def sup_abs_bm_tail_discrete(T, a, dt):
    """Same probability for a walk observed every dt (shifted-barrier correction)."""
    return sup_abs_bm_tail(T, a + DISCRETE_MONITORING_SHIFT * math.sqrt(dt))


def sup_distances(manifold, x0, T, dt, stream: RngStream, n_paths):
    """Running sup of rho(x0, gamma(s)) over [0, T] for each trajectory."""
    x0 = np.asarray(x0, dtype=float)
    N = time_grid(T, dt)[1]
    per = (N + 1) * (manifold.ambient_dim * (1 + manifold.dim) + manifold.dim)

    def block(idx):
        path = sample_paths(manifold, x0, T, dt, stream, idx)
        return manifold.distance(x0, path.points).max(axis=1)

    return ensemble_map(block, n_paths, per)


def tail_probability(manifold, x0, T, thresholds, n_paths, dt, stream: RngStream):
    """Monte Carlo P(sup_{s<=T} rho(x0, gamma(s)) > N) for each threshold N."""
    sups = sup_distances(manifold, x0, T, dt, stream, n_paths)
    out = {}
    for N in np.atleast_1d(thresholds):
        out[float(N)] = MonteCarloEstimate.from_samples((sups > N).astype(float), stream.master_seed)
    return out


# -- summary statistics -------------------------------------------------------

def coordinate_covariance(manifold, x0, times, n_paths, dt, stream: RngStream):
    """Empirical Cov(gamma_i(s), gamma_j(t)) over a grid of times.

    Returns rows with the pair of times, the pair of coordinates, the
    estimate and its standard error (from per-path products, the mean
    taken as known to be x0).
    """
    times = [float(t) for t in times]
    T = max(times)
    nodes = [int(round(t / dt)) for t in times]
    x0 = np.asarray(x0, dtype=float)
    n = manifold.dim
    per = (int(round(T / dt)) + 1) * (manifold.ambient_dim * (1 + n) + n)

    def block(idx):
        path = sample_paths(manifold, x0, T, dt, stream, idx)
        return path.points[:, nodes] - x0

    X = ensemble_map(block, n_paths, per)
    rows = []
    for a, s in enumerate(times):
        for b, t in enumerate(times):
            for i in range(X.shape[-1]):
                for j in range(X.shape[-1]):
                    est = MonteCarloEstimate.from_samples(X[:, a, i] * X[:, b, j], stream.master_seed, keep=False)
                    rows.append({"s": s, "t": t, "i": i, "j": j, "estimate": est.value, "stderr": est.stderr})
    return rows


def rayleigh_cos_mean(dt):
    """E[cos R] for R the length of an N(0, dt I_2) vector: 1 - sqrt(2 dt) D(sqrt(dt/2)).

    D is Dawson's integral. On the unit sphere one geodesic random-walk step
    multiplies E[cos rho(x0, .)] by exactly this factor (cos rho is a
    degree-one spherical harmonic, whose circle averages scale by cos r).
    """
    return 1.0 - math.sqrt(2 * dt) * special.dawsn(math.sqrt(dt / 2))


def walk_cos_mean(t, dt):
    """Exact E[cos rho(x0, gamma(t))] for the geodesic random walk on the unit sphere."""
    return rayleigh_cos_mean(dt) ** int(round(t / dt))


def cos_decay(manifold, x0, times, n_paths, dt, stream: RngStream):
    """Monte Carlo E[cos rho(x0, gamma(t))] at each time (unit sphere: -> e^{-t})."""
    times = [float(t) for t in times]
    T = max(times)
    nodes = [int(round(t / dt)) for t in times]
    x0 = np.asarray(x0, dtype=float)
    per = (int(round(T / dt)) + 1) * (manifold.ambient_dim * (1 + manifold.dim) + manifold.dim)

    def block(idx):
        path = sample_paths(manifold, x0, T, dt, stream, idx)
        return np.cos(manifold.distance(x0, path.points[:, nodes]))

    C = ensemble_map(block, n_paths, per)
    return {t: MonteCarloEstimate.from_samples(C[:, k], stream.master_seed, keep=False)
            for k, t in enumerate(times)}
