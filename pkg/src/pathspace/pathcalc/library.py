"""Built-in cylinder functions and directions, addressable by string id."""

import numpy as np

from ..geometry import Hyperbolic2, Sphere2
from . import directions
from .cylinder import CylinderFunction, Integrand


# -- integrand factories ------------------------------------------------------

def coordinate(axis, window, backward=False):
    """g(s, x) = x[axis]."""

    def func(s, x):
        return x[..., axis] + 0.0 * s

    def grad(s, x):
        out = np.zeros(np.broadcast_shapes(x.shape, np.shape(s) + (x.shape[-1],)))
        out[..., axis] = 1.0
        return out

    return Integrand(func, grad, window, backward, name=f"x{axis}")


def tanh_projection(a, window, backward=False):
    """g(s, x) = tanh(<a, x>), bounded by 1."""
    a = np.asarray(a, dtype=float)

    def func(s, x):
        return np.tanh(x @ a) + 0.0 * s

    def grad(s, x):
        t = np.tanh(x @ a) + 0.0 * s
        return (1.0 - t * t)[..., None] * a

    return Integrand(func, grad, window, backward, name="tanh", bound=1.0)


def linear_projection(a, window, backward=False):
    """g(s, x) = <a, x>; bounded on the sphere."""
    a = np.asarray(a, dtype=float)

    def func(s, x):
        return x @ a + 0.0 * s

    def grad(s, x):
        return np.broadcast_to(a, np.broadcast_shapes(x.shape, np.shape(s) + a.shape)).copy()

    return Integrand(func, grad, window, backward, name="linear")


def gaussian_bump(center, window, backward=False):
    """g(s, x) = (1 + cos(pi s) / 2) exp(-|x - c|^2 / 2)."""
    c = np.asarray(center, dtype=float)

    def weight(s):
        return 1.0 + 0.5 * np.cos(np.pi * s)

    def func(s, x):
        r2 = np.sum((x - c) ** 2, axis=-1)
        return weight(s) * np.exp(-0.5 * r2)

    def grad(s, x):
        r2 = np.sum((x - c) ** 2, axis=-1)
        return (-(weight(s) * np.exp(-0.5 * r2)))[..., None] * (x - c)

    return Integrand(func, grad, window, backward, name="bump", bound=1.5)


# -- outer functions ----------------------------------------------------------

def _identity():
    return (lambda u: u[..., 0]), (lambda u: np.ones_like(u))


def _cos_sin():
    def f(u):
        return np.cos(u[..., 0]) + 0.5 * np.sin(u[..., 1])

    def df(u):
        return np.stack([-np.sin(u[..., 0]), 0.5 * np.cos(u[..., 1])], axis=-1)

    return f, df


def _exp(alpha=1.0, shift=0.0):
    def f(u):
        return np.exp(alpha * u.sum(axis=-1) + shift)

    def df(u):
        return np.repeat((alpha * np.exp(alpha * u.sum(axis=-1) + shift))[..., None], u.shape[-1], axis=-1)

    return f, df


def _geometry_vectors(manifold):
    d = manifold.ambient_dim
    if isinstance(manifold, Sphere2):
        return np.array([1.0, 0.5, 0.3]), np.array([-0.4, 0.8, 0.2]), np.array([0.3, 0.2, 0.93])
    if isinstance(manifold, Hyperbolic2):
        return np.array([1.0, 0.5]), np.array([-0.3, 0.6]), np.array([0.0, 1.0])
    a = np.zeros(d)
    a[0] = 1.0
    b = np.full(d, 0.5)
    return a, b, np.zeros(d)


# -- named functions ----------------------------------------------------------

def mean_coordinate(manifold, T=1.0, axis=0):
    """F_T(gamma) = int_0^T gamma_axis(s) ds (unbounded; flat space)."""
    f, df = _identity()
    return CylinderFunction(f, df, [coordinate(axis, T)], manifold.ambient_dim, name=f"mean-x{axis}[T={T:g}]")


def constant(manifold, value=1.0):
    return CylinderFunction(lambda u: np.full(u.shape[:-1], float(value)),
                            lambda u: np.zeros(u.shape), [], manifold.ambient_dim, name="constant",
                            positive=value > 0)


def avg_tanh(manifold):
    a, _, _ = _geometry_vectors(manifold)
    f, df = _identity()
    return CylinderFunction(f, df, [tanh_projection(a, 1.0)], manifold.ambient_dim, name="avg-tanh")


def cos_two_window(manifold):
    a, b, _ = _geometry_vectors(manifold)
    f, df = _cos_sin()
    return CylinderFunction(f, df, [tanh_projection(a, 0.5), tanh_projection(b, 1.5)],
                            manifold.ambient_dim, name="cos-two-window")


def exp_bump(manifold):
    _, _, c = _geometry_vectors(manifold)

    def f(u):
        return np.exp(-u[..., 0])

    def df(u):
        return -np.exp(-u[..., :1])

    return CylinderFunction(f, df, [gaussian_bump(c, 1.0)], manifold.ambient_dim, name="exp-bump")


IBP_SUITE = ("avg-tanh", "cos-two-window", "exp-bump")


def _positive(f, df, integrands, name):
    return CylinderFunction(f, df, integrands, 3, name=name, positive=True)


def sphere_positive_suite():
    """Positive, bounded-below functionals on the unit sphere (12 members)."""
    e3 = np.array([0.0, 0.0, 1.0])
    b1 = np.array([1.0, 0.0, 0.0])
    b2 = np.array([0.6, 0.8, 0.0])
    b3 = np.array([0.3, -0.4, 0.866])
    suite = []
    for alpha in (0.25, 0.5, 1.0):
        f, df = _exp(alpha)
        suite.append(_positive(f, df, [linear_projection(b1, 1.0)], f"exp{alpha:g}-x"))
    f, df = _exp(0.5)
    suite.append(_positive(f, df, [linear_projection(e3, 1.0)], "exp0.5-z"))
    suite.append(_positive(f, df, [linear_projection(b2, 0.5), linear_projection(b3, 1.5)], "exp0.5-two-window"))

    def f_sin(u):
        return 2.0 + np.sin(u[..., 0])

    def df_sin(u):
        return np.cos(u[..., :1])

    suite.append(_positive(f_sin, df_sin, [linear_projection(b2, 1.0)], "2+sin"))

    def f_tanh(u):
        return 1.0 + 0.5 * np.tanh(u[..., 0])

    def df_tanh(u):
        return 0.5 / np.cosh(u[..., :1]) ** 2

    suite.append(_positive(f_tanh, df_tanh, [tanh_projection(2 * b3, 1.0)], "1+tanh/2"))

    def f_sqrt(u):
        return np.sqrt(1.0 + u[..., 0] ** 2)

    def df_sqrt(u):
        return u[..., :1] / np.sqrt(1.0 + u[..., :1] ** 2)

    suite.append(_positive(f_sqrt, df_sqrt, [linear_projection(b1 + e3, 1.0)], "sqrt(1+u^2)"))

    def f_bump(u):
        return np.exp(-u[..., 0])

    def df_bump(u):
        return -np.exp(-u[..., :1])

    suite.append(_positive(f_bump, df_bump, [gaussian_bump(e3, 1.0)], "exp-bump"))

    def f_prod(u):
        return (1.5 + np.cos(u[..., 0])) * (2.0 + np.tanh(u[..., 1]))

    def df_prod(u):
        return np.stack([-np.sin(u[..., 0]) * (2.0 + np.tanh(u[..., 1])),
                         (1.5 + np.cos(u[..., 0])) / np.cosh(u[..., 1]) ** 2], axis=-1)

    suite.append(_positive(f_prod, df_prod, [linear_projection(b1, 0.5), linear_projection(b3, 1.0)], "product"))

    def f_ratio(u):
        return 1.0 / (1.0 + 0.3 * u[..., 0] ** 2)

    def df_ratio(u):
        return (-0.6 * u[..., :1]) / (1.0 + 0.3 * u[..., :1] ** 2) ** 2

    suite.append(_positive(f_ratio, df_ratio, [linear_projection(b2 + b3, 2.0)], "rational"))
    f, df = _exp(1.0)
    suite.append(_positive(f, df, [linear_projection(0.5 * b1, 1.0), linear_projection(-0.5 * b1, 2.0)], "exp-difference"))
    return suite


def sphere_two_sided_suite():
    """Positive functionals with forward and backward windows on the sphere."""
    b1 = np.array([1.0, 0.0, 0.0])
    b2 = np.array([0.6, 0.8, 0.0])
    e3 = np.array([0.0, 0.0, 1.0])
    suite = []
    for alpha in (0.5, 1.0):
        f, df = _exp(alpha)
        suite.append(_positive(f, df, [linear_projection(b1, 1.0), linear_projection(b1, 1.0, backward=True)],
                               f"exp{alpha:g}-both"))

    def f_sin(u):
        return 2.0 + np.sin(u[..., 0] - u[..., 1])

    def df_sin(u):
        c = np.cos(u[..., 0] - u[..., 1])
        return np.stack([c, -c], axis=-1)

    suite.append(_positive(f_sin, df_sin, [linear_projection(b2, 1.0), linear_projection(e3, 0.5, backward=True)],
                           "2+sin-both"))

    def f_tanh(u):
        return 1.0 + 0.5 * np.tanh(u[..., 0])

    def df_tanh(u):
        return 0.5 / np.cosh(u[..., :1]) ** 2

    suite.append(_positive(f_tanh, df_tanh, [tanh_projection(2 * b2, 1.5, backward=True)], "backward-only"))
    f, df = _exp(0.5)
    suite.append(_positive(f, df, [linear_projection(e3, 1.0)], "forward-only"))
    return suite


FUNCTIONS = {
    "avg-tanh": avg_tanh,
    "cos-two-window": cos_two_window,
    "exp-bump": exp_bump,
    "mean-x0": mean_coordinate,
    "constant": constant,
}

DIRECTIONS = {
    "ramp": directions.ramp,
    "bump": directions.bump,
    "symmetric-bump": directions.symmetric_bump,
}


def get_function(name, manifold, **kwargs):
    try:
        factory = FUNCTIONS[name]
    except KeyError:
        raise KeyError(f"unknown cylinder function {name!r}; choose from {sorted(FUNCTIONS)}") from None
    return factory(manifold, **kwargs)


def get_direction(name, dim):
    try:
        factory = DIRECTIONS[name]
    except KeyError:
        raise KeyError(f"unknown direction {name!r}; choose from {sorted(DIRECTIONS)}") from None
    return factory(dim)


def default_manifold_functions(manifold):
    return [get_function(name, manifold) for name in IBP_SUITE]

