"""Cameron-Martin directions h with h(0) = 0 and compact support."""

import numpy as np


class DirectionField:
    """A piecewise-C1 map from time to R^n with its derivative.

    ``func(s)`` and ``deriv(s)`` take a 1-d array of times and return an
    array of shape ``(len(s), n)``. Both must vanish outside ``support``.
    """

    def __init__(self, func, deriv, dim, support, name="h"):
        self.func = func
        self.deriv = deriv
        self.dim = int(dim)
        self.support = (float(support[0]), float(support[1]))
        self.name = name
        if self.support[0] > 0 or self.support[1] < 0:
            raise ValueError("support must contain 0")
        if np.any(np.abs(self(np.array([0.0]))) > 0):
            raise ValueError("direction must vanish at time 0")

    def __call__(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        inside = (s >= self.support[0]) & (s <= self.support[1])
        return np.where(inside[:, None], self.func(s), 0.0)

    def derivative(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        inside = (s >= self.support[0]) & (s <= self.support[1])
        return np.where(inside[:, None], self.deriv(s), 0.0)

    def energy(self, n_grid=20001):
        """int |h'(s)|^2 ds by the trapezoid rule."""
        s = np.linspace(*self.support, n_grid)
        return float(np.trapezoid(np.sum(self.derivative(s) ** 2, axis=1), s))

    def __repr__(self):
        return f"DirectionField({self.name!r}, dim={self.dim})"


def _embed(values, dim, axis=0):
    out = np.zeros(values.shape[:1] + (dim,))
    out[:, axis] = values
    return out


def ramp(dim=1, axis=0):
    """min(s, 1) on [0, 1], then a smoothstep back to 0 on [1, 2]."""

    def func(s):
        u = np.clip(s - 1.0, 0.0, 1.0)
        val = np.where(s <= 1.0, np.clip(s, 0.0, 1.0), 1.0 - u * u * (3.0 - 2.0 * u))
        return _embed(np.where(s < 0, 0.0, val), dim, axis)

    def deriv(s):
        u = np.clip(s - 1.0, 0.0, 1.0)
        val = np.where((s >= 0) & (s <= 1.0), 1.0, np.where(s > 1.0, -6.0 * u * (1.0 - u), 0.0))
        return _embed(val, dim, axis)

    return DirectionField(func, deriv, dim, (0.0, 2.0), "ramp")


def bump(dim=1):
    """sin^2(pi s / 2) on [0, 2], with 0.5 sin(pi s) in the second component."""

    def func(s):
        out = np.zeros(s.shape + (dim,))
        on = (s >= 0) & (s <= 2)
        out[:, 0] = np.where(on, np.sin(np.pi * s / 2) ** 2, 0.0)
        if dim > 1:
            out[:, 1] = np.where(on, 0.5 * np.sin(np.pi * s), 0.0)
        return out

    def deriv(s):
        out = np.zeros(s.shape + (dim,))
        on = (s >= 0) & (s <= 2)
        out[:, 0] = np.where(on, 0.5 * np.pi * np.sin(np.pi * s), 0.0)
        if dim > 1:
            out[:, 1] = np.where(on, 0.5 * np.pi * np.cos(np.pi * s), 0.0)
        return out

    return DirectionField(func, deriv, dim, (0.0, 2.0), "bump")


def symmetric_bump(dim=1):
    """The bump profile extended to negative times, supported on [-2, 2]."""

    def func(s):
        out = np.zeros(s.shape + (dim,))
        on = np.abs(s) <= 2
        out[:, 0] = np.where(on, np.sin(np.pi * s / 2) ** 2, 0.0)
        if dim > 1:
            out[:, 1] = np.where(on, 0.5 * np.sin(np.pi * s), 0.0)
        return out

    def deriv(s):
        out = np.zeros(s.shape + (dim,))
        on = np.abs(s) <= 2
        out[:, 0] = np.where(on, 0.5 * np.pi * np.sin(np.pi * s), 0.0)
        if dim > 1:
            out[:, 1] = np.where(on, 0.5 * np.pi * np.cos(np.pi * s), 0.0)
        return out

    return DirectionField(func, deriv, dim, (-2.0, 2.0), "symmetric-bump")
