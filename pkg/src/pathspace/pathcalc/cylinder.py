"""Cylinder functions F(gamma) = f(int g_1(s, gamma(s)) ds, ...).

Integrands are written in ambient coordinates (R^3 for the sphere, the chart
for the half-plane). Their gradients are the coordinate partial derivatives;
reading them against an orthonormal frame gives the frame components of the
Riemannian gradient, for the sphere because the frame is tangent and for a
chart because dg(e_i) = g(grad g, e_i).
"""

import numpy as np

from ..brownian import FramedPath, TwoSidedPath

FD_STEP = 1e-6
FD_TOL = 1e-5


class Integrand:
    """g(s, x) integrated over [0, window] (or [-window, 0] when ``backward``).

    ``func(s, x)`` receives ``s`` broadcastable against ``x[..., 0]`` and
    returns values of shape ``x.shape[:-1]``; ``grad(s, x)`` returns the
    coordinate gradient with the shape of ``x``. Backward integrands receive
    the signed (negative) time.
    """

    def __init__(self, func, grad, window, backward=False, name="g", bound=None):
        if window <= 0:
            raise ValueError("integration window must be positive")
        self.func = func
        self.grad = grad
        self.window = float(window)
        self.backward = bool(backward)
        self.name = name
        self.bound = bound

    def __repr__(self):
        side = "backward" if self.backward else "forward"
        return f"Integrand({self.name!r}, {side}, window={self.window})"


def _central_difference(func, x, step=FD_STEP):
    out = np.empty(x.shape)
    for i in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[i] = step
        out[..., i] = (func(x + e) - func(x - e)) / (2 * step)
    return out


def check_gradient(func, grad, points, what="function"):
    """Compare a supplied gradient with central differences."""
    fd = _central_difference(func, points)
    supplied = grad(points)
    err = np.abs(fd - supplied)
    if np.any(err > FD_TOL * (1.0 + np.abs(supplied))):
        worst = float(err.max())
        raise ValueError(f"supplied gradient of {what} disagrees with finite differences (max error {worst:.3g})")


def window_weights(times, window):
    """Trapezoid weights on the grid nodes for the integral over [0, window].

    A window ending inside a grid cell uses linear interpolation on that cell.
    """
    times = np.asarray(times, dtype=float)
    w = np.zeros(len(times))
    if window > times[-1] + 1e-9:
        raise ValueError(f"path horizon {times[-1]:g} is shorter than the window {window:g}")
    if len(times) == 1:
        return w
    dt = times[1] - times[0]
    full = int(np.floor(window / dt + 1e-9))
    full = min(full, len(times) - 1)
    if full > 0:
        w[:full + 1] = dt
        w[0] = w[full] = dt / 2
    r = window - full * dt
    if r > 1e-12 and full + 1 < len(times):
        w[full] += r - r * r / (2 * dt)
        w[full + 1] += r * r / (2 * dt)
    return w


def leg_weights(times):
    """Trapezoid weights for the whole grid (the L2(ds) inner product)."""
    times = np.asarray(times, dtype=float)
    if len(times) == 1:
        return np.zeros(1)
    return window_weights(times, times[-1])


class CylinderFunction:
    """F = f(int g_1, ..., int g_m) over forward and backward time windows."""

    def __init__(self, outer, outer_grad, integrands, ambient_dim, name="F",
                 validate=True, bounds=None, positive=False):
        self.outer = outer
        self.outer_grad = outer_grad
        self.integrands = list(integrands)
        self.ambient_dim = int(ambient_dim)
        self.name = name
        self.bounds = bounds or {}
        self.positive = positive
        if validate:
            self.validate()

    def __repr__(self):
        return f"CylinderFunction({self.name!r}, {len(self.integrands)} integrands)"

    @property
    def forward_horizon(self):
        return max([g.window for g in self.integrands if not g.backward], default=0.0)

    @property
    def backward_horizon(self):
        return max([g.window for g in self.integrands if g.backward], default=0.0)

    @property
    def two_sided(self):
        return self.backward_horizon > 0

    def validate(self, n_probes=16, seed=12345):
        """Check every supplied gradient against finite differences."""
        rng = np.random.default_rng(seed)
        m = len(self.integrands)
        if m:
            u = rng.uniform(-1.0, 1.0, size=(n_probes, m))
            check_gradient(self.outer, self.outer_grad, u, f"outer function of {self.name}")
        for g in self.integrands:
            x = rng.uniform(0.5, 1.5, size=(n_probes, self.ambient_dim))
            s = rng.uniform(0.0, g.window, size=n_probes) * (-1.0 if g.backward else 1.0)
            check_gradient(lambda y: g.func(s, y), lambda y: g.grad(s, y), x, f"integrand {g.name}")

    # -- per-leg pieces --------------------------------------------------
    def _legs(self, path):
        if isinstance(path, TwoSidedPath):
            return {False: path.forward, True: path.backward}
        if isinstance(path, FramedPath):
            if self.two_sided:
                raise ValueError(f"{self.name} needs a two-sided path")
            return {False: path}
        raise TypeError("expected a FramedPath or TwoSidedPath")

    @staticmethod
    def _node_data(g, leg):
        w = window_weights(leg.times, g.window)
        last = int(np.nonzero(w)[0][-1]) + 1 if np.any(w) else 0
        s = leg.times[:last] * (-1.0 if g.backward else 1.0)
        return w[:last], s, last

    def integrals(self, path):
        """The vector of window integrals, shape (B, m)."""
        legs = self._legs(path)
        B = next(iter(legs.values())).n_paths
        out = np.empty((B, len(self.integrands)))
        for j, g in enumerate(self.integrands):
            leg = legs[g.backward]
            w, s, last = self._node_data(g, leg)
            vals = g.func(s[None, :], leg.points[:, :last])
            out[:, j] = vals @ w
        return out

    def __call__(self, path):
        return self.outer(self.integrals(path))

    evaluate = __call__

    def _frame_gradients(self, g, leg):
        w, s, last = self._node_data(g, leg)
        dg = g.grad(s[None, :], leg.points[:, :last])
        coords = np.einsum("bkdi,bkd->bki", leg.frames[:, :last], dg)
        return w, coords, last

    def gradient(self, path, integrals=None):
        """Grid values of DF on each leg.

        Returns an array (B, N+1, n) for a half-line path, or a pair
        ``(forward, backward)`` for a two-sided path. The node values are
        chosen so that the trapezoid inner product with any direction
        reproduces the directional derivative exactly.
        """
        legs = self._legs(path)
        u = self.integrals(path) if integrals is None else integrals
        df = self.outer_grad(u)
        grads = {}
        for side, leg in legs.items():
            grads[side] = np.zeros(leg.points.shape[:2] + (leg.manifold.dim,))
        for j, g in enumerate(self.integrands):
            leg = legs[g.backward]
            w, coords, last = self._frame_gradients(g, leg)
            c = leg_weights(leg.times)[:last]
            ratio = np.divide(w, c, out=np.zeros_like(w), where=c > 0)
            grads[g.backward][:, :last] += df[:, j, None, None] * ratio[None, :, None] * coords
        if isinstance(path, TwoSidedPath):
            return grads[False], grads[True]
        return grads[False]

    def directional_derivative(self, path, h, cutoff=None, integrals=None):
        """D_h F = sum_j df_j int <U^{-1} grad g_j, h> ds, computed window by window.

        ``cutoff`` may be a :class:`CutoffProcess` (half-line) or a pair of
        them (two-sided); its values multiply h node by node.
        """
        legs = self._legs(path)
        u = self.integrals(path) if integrals is None else integrals
        df = self.outer_grad(u)
        if cutoff is not None and not isinstance(cutoff, tuple):
            cutoff = (cutoff, None)
        total = np.zeros(u.shape[0])
        for j, g in enumerate(self.integrands):
            leg = legs[g.backward]
            w, coords, last = self._frame_gradients(g, leg)
            sign = -1.0 if g.backward else 1.0
            hv = h(sign * leg.times[:last])
            inner = np.einsum("bki,ki->bk", coords, hv)
            if cutoff is not None:
                lp = cutoff[1 if g.backward else 0]
                if lp is not None:
                    inner = inner * lp.values[:, :last]
            total += df[:, j] * (inner @ w)
        return total


def h_inner(a, b, times):
    """Trapezoid L2(ds; R^n) inner product of grid functions (B, N+1, n)."""
    c = leg_weights(times)
    return np.einsum("bki,bki,k->b", a, b, c)
