"""Riemannian manifolds with closed-form geodesics.

Three instances are provided: flat space ``Euclidean(n)``, the unit sphere
``Sphere2`` (extrinsic coordinates in R^3) and the hyperbolic half-plane
``Hyperbolic2`` (chart coordinates ``(x, y)`` with ``y > 0``).

All methods are vectorized: points have shape ``(..., d)`` where ``d`` is the
ambient/chart dimension, tangent vectors are stored in the same
representation as their base point, and orthonormal frames have shape
``(..., d, n)`` with one tangent vector per column.
"""

from dataclasses import dataclass

import numpy as np

SPHERE_CUT_TOL = 1e-9


class GeometryError(ValueError):
    """Input outside the domain of a geometric operation."""


class CutLocusError(GeometryError):
    """Two points are (numerically) conjugate; log/transport undefined."""


@dataclass(frozen=True)
class TangentVector:
    base: np.ndarray
    components: np.ndarray


@dataclass(frozen=True)
class OrthonormalFrame:
    base: np.ndarray
    columns: np.ndarray  # (d, n)


def _dot(a, b):
    return np.einsum("...d,...d->...", a, b)


def _unpack(p, v):
    if isinstance(v, TangentVector):
        if not np.allclose(v.base, p, rtol=0, atol=1e-12):
            raise GeometryError("tangent vector is not based at the given point")
        return v.components
    return np.asarray(v, dtype=float)


def gram_schmidt(vectors, inner):
    """Orthonormalize the columns of ``vectors`` (..., d, n) under ``inner``."""
    out = np.array(vectors, dtype=float, copy=True)
    n = out.shape[-1]
    for i in range(n):
        col = out[..., :, i]
        for j in range(i):
            prev = out[..., :, j]
            col = col - inner(col, prev)[..., None] * prev
        col = col / np.sqrt(inner(col, col))[..., None]
        out[..., :, i] = col
    return out


class Manifold:
    """Base class; subclasses fill in the closed-form geometry."""

    name = "manifold"
    dim = 0
    ambient_dim = 0
    sectional_curvature = 0.0

    # -- points and vectors -------------------------------------------------
    def origin(self):
        raise NotImplementedError

    def check_point(self, p):
        return np.asarray(p, dtype=float)

    def metric(self, p, v, w):
        """Riemannian inner product g_p(v, w)."""
        p = self.check_point(p)
        return self._inner(p, _unpack(p, v), _unpack(p, w))

    def norm(self, p, v):
        return np.sqrt(self.metric(p, v, v))

    def _inner(self, p, v, w):
        return _dot(v, w)

    def metric_tensor(self, p):
        """Chart metric matrix g_ij(p); only defined on chart manifolds."""
        raise GeometryError(f"{self.name} has no chart metric tensor")

    def christoffel(self, p):
        """Christoffel symbols ``G[..., a, b, c]`` = Gamma^a_{bc} in the chart."""
        raise GeometryError(f"{self.name} has no global chart; use SphericalChart")

    # -- geodesics ----------------------------------------------------------
    def exp(self, p, v):
        raise NotImplementedError

    def log(self, p, q):
        raise NotImplementedError

    def distance(self, p, q):
        raise NotImplementedError

    def truncated_distance(self, p, q):
        return np.minimum(self.distance(p, q), 1.0)

    def transport(self, p, q, v):
        """Parallel transport of ``v`` from ``p`` to ``q`` along the minimal geodesic."""
        raise NotImplementedError

    def transport_along(self, p, v, w):
        """Endpoint of ``t -> exp(p, t v)`` at t=1 and ``w`` transported there."""
        raise NotImplementedError

    # -- frames -------------------------------------------------------------
    def standard_frame(self, p):
        raise NotImplementedError

    def orthonormalize(self, p, frame):
        return gram_schmidt(frame, lambda a, b: self._inner(p, a, b))

    def frame_coordinates(self, frame, covector):
        """Coefficients of the gradient of a function in an orthonormal frame.

        ``covector`` holds the chart/ambient partial derivatives dg; the result
        is U^{-1} grad g, i.e. dg(e_i) for each frame column.
        """
        return np.einsum("...di,...d->...i", frame, covector)

    def step_frame(self, p, v, frame):
        """Move along exp(p, v), transporting and re-orthonormalizing the frame."""
        q, moved = self.transport_along(p[..., None, :], v[..., None, :], np.swapaxes(frame, -1, -2))
        q = q[..., 0, :]
        moved = np.swapaxes(moved, -1, -2)
        return q, self.orthonormalize(q, moved)

    # -- curvature ----------------------------------------------------------
    def ricci_operator(self, frame):
        """Ricci tensor read in an orthonormal frame, shape (..., n, n)."""
        frame = np.asarray(frame, dtype=float)
        k = (self.dim - 1) * self.sectional_curvature
        eye = np.eye(self.dim)
        return np.broadcast_to(k * eye, frame.shape[:-2] + (self.dim, self.dim)).copy()

    def ricci_apply(self, frame, vectors):
        """Ric_U applied to frame-coordinate vectors (..., n)."""
        if self.constant_curvature:
            return (self.dim - 1) * self.sectional_curvature * np.asarray(vectors, dtype=float)
        return np.einsum("...ij,...j->...i", self.ricci_operator(frame), vectors)

    def ricci_lower_bound(self, p):
        """K(p) = inf of Ric_p(X, X) over unit X."""
        p = self.check_point(p)
        frame = self.standard_frame(p)
        return np.linalg.eigvalsh(self.ricci_operator(frame))[..., 0]

    @property
    def constant_curvature(self):
        return True

    def __repr__(self):
        return f"{type(self).__name__}()"


class Euclidean(Manifold):
    sectional_curvature = 0.0

    def __init__(self, n=2):
        if int(n) < 1:
            raise GeometryError("dimension must be positive")
        self.dim = self.ambient_dim = int(n)
        self.name = f"euclidean{self.dim}"

    def __repr__(self):
        return f"Euclidean(n={self.dim})"

    def origin(self):
        return np.zeros(self.dim)

    def metric_tensor(self, p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(np.eye(self.dim), p.shape[:-1] + (self.dim, self.dim)).copy()

    def christoffel(self, p):
        p = np.asarray(p, dtype=float)
        return np.zeros(p.shape[:-1] + (self.dim,) * 3)

    def exp(self, p, v):
        return np.asarray(p, dtype=float) + np.asarray(v, dtype=float)

    def log(self, p, q):
        return np.asarray(q, dtype=float) - np.asarray(p, dtype=float)

    def distance(self, p, q):
        return np.linalg.norm(np.asarray(q, dtype=float) - np.asarray(p, dtype=float), axis=-1)

    def transport(self, p, q, v):
        return np.array(v, dtype=float, copy=True)

    def transport_along(self, p, v, w):
        return self.exp(p, v), np.array(w, dtype=float, copy=True)

    def step_frame(self, p, v, frame):
        return p + v, frame

    def standard_frame(self, p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(np.eye(self.dim), p.shape[:-1] + (self.dim, self.dim)).copy()

    def ricci_operator(self, frame):
        frame = np.asarray(frame, dtype=float)
        return np.zeros(frame.shape[:-2] + (self.dim, self.dim))


class Sphere2(Manifold):
    """Unit sphere in R^3; tangent vectors are R^3 vectors orthogonal to the base."""

    name = "sphere2"
    dim = 2
    ambient_dim = 3
    sectional_curvature = 1.0

    def origin(self):
        return np.array([0.0, 0.0, 1.0])

    def check_point(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != 3 or np.any(np.abs(_dot(p, p) - 1.0) > 1e-10):
            raise GeometryError("point is not on the unit sphere")
        return p

    def project(self, p):
        p = np.asarray(p, dtype=float)
        return p / np.linalg.norm(p, axis=-1, keepdims=True)

    def to_tangent(self, p, v):
        return v - _dot(v, p)[..., None] * p

    def exp(self, p, v):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        theta = np.linalg.norm(v, axis=-1)
        q = np.cos(theta)[..., None] * p + np.sinc(theta / np.pi)[..., None] * v
        return self.project(q)

    def _check_cut(self, c):
        if np.any(c < -1.0 + SPHERE_CUT_TOL):
            raise CutLocusError("antipodal points: outside the injectivity domain")

    def log(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        c = _dot(p, q)
        self._check_cut(c)
        w = q - c[..., None] * p
        s = np.linalg.norm(w, axis=-1)
        theta = np.arctan2(s, c)
        scale = np.where(s > 0, theta / np.where(s > 0, s, 1.0), 1.0)
        return scale[..., None] * w

    def distance(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        return np.arctan2(np.linalg.norm(np.cross(p, q), axis=-1), _dot(p, q))

    def transport(self, p, q, v):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        c = _dot(p, q)
        self._check_cut(c)
        return v - (_dot(q, v) / (1.0 + c))[..., None] * (p + q)

    def transport_along(self, p, v, w):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        theta = np.linalg.norm(v, axis=-1)
        safe = np.where(theta > 0, theta, 1.0)
        e = v / safe[..., None]
        q = self.exp(p, v)
        a = _dot(w, e)
        moved = w + a[..., None] * ((np.cos(theta) - 1.0)[..., None] * e - np.sin(theta)[..., None] * p)
        return q, moved

    def orthonormalize(self, p, frame):
        frame = frame - np.einsum("...d,...di->...i", p, frame)[..., None, :] * p[..., :, None]
        return gram_schmidt(frame, _dot)

    def step_frame(self, p, v, frame):
        # closed-form transport of both columns along the step geodesic,
        # written out by component because the arrays are tiny in d
        theta = np.sqrt(v[..., 0] ** 2 + v[..., 1] ** 2 + v[..., 2] ** 2)
        cos_t = np.cos(theta)
        sinc = np.sinc(theta / np.pi)
        half = -0.5 * np.sinc(theta / (2 * np.pi)) ** 2  # (cos - 1) / theta^2
        q = cos_t[..., None] * p + sinc[..., None] * v
        q /= np.sqrt(q[..., 0] ** 2 + q[..., 1] ** 2 + q[..., 2] ** 2)[..., None]
        shift = half[..., None] * v - sinc[..., None] * p
        cols = []
        for i in range(2):
            w = frame[..., :, i]
            a = w[..., 0] * v[..., 0] + w[..., 1] * v[..., 1] + w[..., 2] * v[..., 2]
            w = w + a[..., None] * shift
            w -= (w[..., 0] * q[..., 0] + w[..., 1] * q[..., 1] + w[..., 2] * q[..., 2])[..., None] * q
            for prev in cols:
                w -= (w[..., 0] * prev[..., 0] + w[..., 1] * prev[..., 1] + w[..., 2] * prev[..., 2])[..., None] * prev
            w /= np.sqrt(w[..., 0] ** 2 + w[..., 1] ** 2 + w[..., 2] ** 2)[..., None]
            cols.append(w)
        return q, np.stack(cols, axis=-1)

    def standard_frame(self, p):
        p = np.asarray(p, dtype=float)
        axis = np.where(np.abs(p[..., 2:3]) < 0.9, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
        e1 = axis - _dot(axis, p)[..., None] * p
        e1 = e1 / np.linalg.norm(e1, axis=-1, keepdims=True)
        e2 = np.cross(p, e1)
        return np.stack([e1, e2], axis=-1)


class Hyperbolic2(Manifold):
    """Upper half-plane ``y > 0`` with metric (dx^2 + dy^2) / y^2.

    Geodesics are computed with Moebius maps: the isometry z -> (z - x) / y
    sends a point to i, and rotations about i send any direction to the
    vertical one, along which the geodesic is t -> i e^t.
    """

    name = "hyperbolic2"
    dim = 2
    ambient_dim = 2
    sectional_curvature = -1.0

    def origin(self):
        return np.array([0.0, 1.0])

    def check_point(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != 2 or np.any(p[..., 1] <= 0):
            raise GeometryError("half-plane points need y > 0")
        return p

    def _inner(self, p, v, w):
        return _dot(v, w) / p[..., 1] ** 2

    def metric_tensor(self, p):
        p = self.check_point(p)
        y2 = p[..., 1] ** 2
        return np.eye(2) / y2[..., None, None]

    def christoffel(self, p):
        p = self.check_point(p)
        inv = 1.0 / p[..., 1]
        g = np.zeros(p.shape[:-1] + (2, 2, 2))
        g[..., 0, 0, 1] = g[..., 0, 1, 0] = -inv
        g[..., 1, 0, 0] = inv
        g[..., 1, 1, 1] = -inv
        return g

    @staticmethod
    def _rotate(angle, z):
        c, s = np.cos(angle / 2), np.sin(angle / 2)
        return (c * z + s) / (c - s * z), 1.0 / (c - s * z) ** 2

    def _geodesic(self, p, v):
        x, y = p[..., 0], p[..., 1]
        u = (v[..., 0] + 1j * v[..., 1]) / y
        t = np.abs(u)
        turn = np.angle(u) - np.pi / 2
        top = 1j * np.exp(t)
        w, dw = self._rotate(turn, top)
        q = np.stack([x + y * w.real, y * w.imag], axis=-1)
        # Euclidean direction of the geodesic velocity at the endpoint
        velocity = dw * top
        return q, velocity, t

    def exp(self, p, v):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        q, _, t = self._geodesic(p, v)
        return np.where((t == 0)[..., None], p, q)

    def _normalized(self, p, q):
        x, y = p[..., 0], p[..., 1]
        zeta = ((q[..., 0] - x) + 1j * q[..., 1]) / y
        return zeta.real, zeta.imag

    def distance(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        chord = np.hypot(q[..., 0] - p[..., 0], q[..., 1] - p[..., 1])
        return 2.0 * np.arcsinh(chord / (2.0 * np.sqrt(p[..., 1] * q[..., 1])))

    def log(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        a, b = self._normalized(p, q)
        direction = np.stack([2.0 * a, a * a + (b - 1.0) * (b + 1.0)], axis=-1)
        size = np.linalg.norm(direction, axis=-1)
        d = self.distance(p, q)
        scale = np.where(size > 0, d / np.where(size > 0, size, 1.0), 0.0)
        return (p[..., 1] * scale)[..., None] * direction

    @staticmethod
    def _as_complex(v):
        return v[..., 0] + 1j * v[..., 1]

    @staticmethod
    def _as_real(z):
        return np.stack([z.real, z.imag], axis=-1)

    def transport(self, p, q, v):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        start = self._as_complex(self.log(p, q))
        end = -self._as_complex(self.log(q, p))
        same = np.abs(start) == 0
        turn = np.where(same, 0.0, np.angle(end) - np.angle(start))
        scale = q[..., 1] / p[..., 1]
        return self._as_real(self._as_complex(v) * np.exp(1j * turn) * scale)

    def transport_along(self, p, v, w):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        q, velocity, t = self._geodesic(p, v)
        still = t == 0
        q = np.where(still[..., None], p, q)
        turn = np.where(still, 0.0, np.angle(velocity) - np.angle(self._as_complex(v)))
        scale = q[..., 1] / p[..., 1]
        return q, self._as_real(self._as_complex(w) * np.exp(1j * turn) * scale)

    def orthonormalize(self, p, frame):
        y = p[..., 1][..., None, None]
        return gram_schmidt(frame / y, _dot) * y

    def step_frame(self, p, v, frame):
        q, velocity, t = self._geodesic(p, v)
        still = t == 0
        q = np.where(still[..., None], p, q)
        # transport in the half-plane is a rotation by the turning angle of
        # the geodesic followed by the conformal rescaling y_q / y_p
        turn = np.where(still, 0.0, np.angle(velocity) - np.angle(self._as_complex(v)))
        rot = np.exp(1j * turn) * (q[..., 1] / p[..., 1])
        cols = (frame[..., 0, :] + 1j * frame[..., 1, :]) * rot[..., None]
        moved = np.stack([cols.real, cols.imag], axis=-2)
        return q, self.orthonormalize(q, moved)

    def standard_frame(self, p):
        p = np.asarray(p, dtype=float)
        return p[..., 1][..., None, None] * np.eye(2)


class SphericalChart:
    """Colatitude/longitude chart (theta, phi) of the unit sphere.

    Only used to cross-check curvature data; simulations use ``Sphere2``.
    """

    dim = 2

    def _check(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(np.abs(np.sin(p[..., 0])) < 1e-12):
            raise GeometryError("spherical chart is singular at the poles")
        return p

    def metric_tensor(self, p):
        p = self._check(p)
        g = np.zeros(p.shape[:-1] + (2, 2))
        g[..., 0, 0] = 1.0
        g[..., 1, 1] = np.sin(p[..., 0]) ** 2
        return g

    def christoffel(self, p):
        p = self._check(p)
        s, c = np.sin(p[..., 0]), np.cos(p[..., 0])
        g = np.zeros(p.shape[:-1] + (2, 2, 2))
        g[..., 0, 1, 1] = -s * c
        g[..., 1, 0, 1] = g[..., 1, 1, 0] = c / s
        return g

    def embed(self, p):
        p = self._check(p)
        th, ph = p[..., 0], p[..., 1]
        return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)


MANIFOLDS = {
    "euclidean": Euclidean,
    "sphere2": Sphere2,
    "hyperbolic2": Hyperbolic2,
}


def make_manifold(kind, dim=None):
    """Build a manifold from its name: ``euclidean``, ``sphere2`` or ``hyperbolic2``."""
    key = kind.lower().replace("-", "").replace("_", "")
    aliases = {"sphere": "sphere2", "s2": "sphere2", "hyperbolic": "hyperbolic2", "h2": "hyperbolic2",
               "flat": "euclidean", "rn": "euclidean"}
    key = aliases.get(key, key)
    if key not in MANIFOLDS:
        raise GeometryError(f"unknown manifold {kind!r}")
    if key == "euclidean":
        return Euclidean(2 if dim is None else dim)
    if dim not in (None, 2):
        raise GeometryError(f"{key} is two-dimensional")
    return MANIFOLDS[key]()
