"""Exit times and the adapted cut-off multiplier l_{m,T}.

The localizing function is rho_hat = rho(o, .) / 2. On a discrete path the
running supremum entering l at node k only looks at nodes strictly before
k, so l(t_k) is known one step ahead. This makes (l h)(t_{k+1}) - (l h)(t_k)
an adapted Ito integrand and keeps the discrete integration by parts exact
in flat space.
"""

from dataclasses import dataclass

import numpy as np


def rho_hat(path, origin=None):
    """Half the distance to the origin along each path, shape (B, N+1)."""
    if origin is None:
        origin = path.points[:, :1]
    else:
        origin = np.asarray(origin, dtype=float)
    return 0.5 * path.manifold.distance(origin, path.points)


def hitting_time(path, m, origin=None):
    """First grid time with rho_hat >= m (``inf`` when the path never exits)."""
    rh = rho_hat(path, origin)
    hit = rh >= m
    first = np.argmax(hit, axis=1)
    return np.where(hit.any(axis=1), path.times[first], np.inf)


def time_hat(times, T):
    """1 on [0, T], linear down to 0 on [T, T+1], 0 afterwards."""
    return np.clip(T + 1.0 - np.asarray(times, dtype=float), 0.0, 1.0)


@dataclass
class CutoffProcess:
    values: np.ndarray      # (B, N+1)
    derivative: np.ndarray  # (B, N+1), backward differences, 0 at t_0
    m: float
    T: float


def cutoff(path, m, T, origin=None):
    """Cut-off multiplier for a batch of paths."""
    if m < 1:
        raise ValueError("cut-off level m must be at least 1")
    rh = rho_hat(path, origin)
    running = np.maximum.accumulate(rh, axis=1)
    past = np.concatenate([running[:, :1], running[:, :-1]], axis=1)
    space = np.clip(m - np.maximum(m - 1.0, past), 0.0, 1.0)
    values = time_hat(path.times, T)[None, :] * space
    deriv = np.zeros_like(values)
    if path.n_steps:
        deriv[:, 1:] = np.diff(values, axis=1) / path.dt
    return CutoffProcess(values, deriv, float(m), float(T))


def no_cutoff(path):
    ones = np.ones(path.points.shape[:2])
    return CutoffProcess(ones, np.zeros_like(ones), np.inf, np.inf)
