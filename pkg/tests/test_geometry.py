import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathspace.geometry import (CutLocusError, Euclidean, GeometryError, Hyperbolic2, SphericalChart, Sphere2,
                                make_manifold)


# -- finite-difference oracles --------------------------------------------------

def christoffel_from_metric(metric_tensor, p, step=1e-5):
    """Gamma^a_{bc} = 1/2 g^{ad} (d_b g_dc + d_c g_db - d_d g_bc) with central differences."""
    p = np.asarray(p, dtype=float)
    n = p.size
    dg = np.zeros((n, n, n))  # dg[k] = d_k g
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        dg[k] = (metric_tensor(p + e) - metric_tensor(p - e)) / (2 * step)
    ginv = np.linalg.inv(metric_tensor(p))
    G = np.zeros((n, n, n))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                G[a, b, c] = 0.5 * sum(ginv[a, d] * (dg[b, d, c] + dg[c, d, b] - dg[d, b, c]) for d in range(n))
    return G


def ricci_from_christoffel(christoffel, p, step=1e-5):
    """Ric_bd = R^a_{bad}, R^a_{bcd} = d_c G^a_db - d_d G^a_cb + G^a_ce G^e_db - G^a_de G^e_cb."""
    p = np.asarray(p, dtype=float)
    n = p.size
    G = christoffel(p)
    dG = np.zeros((n, n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        dG[k] = (christoffel(p + e) - christoffel(p - e)) / (2 * step)
    R = (np.einsum("cadb->abcd", dG) - np.einsum("dacb->abcd", dG)
         + np.einsum("ace,edb->abcd", G, G) - np.einsum("ade,ecb->abcd", G, G))
    return np.einsum("abad->bd", R)


# -- metric -----------------------------------------------------------------------

def test_euclidean_coordinate_vectors_orthogonal():
    E = Euclidean(2)
    assert E.metric(E.origin(), np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_half_plane_metric_value():
    H = Hyperbolic2()
    v = np.array([1.0, 0.0])
    assert H.metric(np.array([0.0, 2.0]), v, v) == pytest.approx(0.25, abs=1e-15)


def test_half_plane_metric_matches_distance_growth():
    # rho(p, p + s v) / s -> |v|_g as s -> 0
    H = Hyperbolic2()
    p, v = np.array([0.3, 2.0]), np.array([1.0, 0.0])
    s = 1e-6
    assert H.distance(p, p + s * v) / s == pytest.approx(math.sqrt(H.metric(p, v, v)), rel=1e-5)


def test_sphere_unit_tangent_has_unit_norm():
    S = Sphere2()
    assert S.metric(S.origin(), np.array([0.0, 1.0, 0.0]), np.array([0.0, 1.0, 0.0])) == 1.0


# -- Christoffel symbols --------------------------------------------------------------

def test_euclidean_christoffel_zero():
    assert np.all(Euclidean(3).christoffel(np.zeros(3)) == 0)


def test_half_plane_christoffel_values():
    G = Hyperbolic2().christoffel(np.array([0.0, 2.0]))
    x, y = 0, 1
    assert G[y, y, y] == pytest.approx(-0.5)
    assert G[y, x, x] == pytest.approx(0.5)
    assert G[x, x, y] == pytest.approx(-0.5)
    assert G[x, y, x] == pytest.approx(-0.5)


def test_spherical_chart_equator():
    G = SphericalChart().christoffel(np.array([math.pi / 2, 0.3]))
    assert G[0, 1, 1] == pytest.approx(0.0, abs=1e-15)


def test_spherical_chart_pole_raises():
    with pytest.raises(GeometryError):
        SphericalChart().christoffel(np.array([0.0, 0.2]))


@settings(max_examples=40, deadline=None)
@given(x=st.floats(-3, 3), y=st.floats(0.2, 5))
def test_half_plane_christoffel_matches_metric_differences(x, y):
    H = Hyperbolic2()
    p = np.array([x, y])
    np.testing.assert_allclose(H.christoffel(p), christoffel_from_metric(H.metric_tensor, p), atol=1e-5)


@settings(max_examples=40, deadline=None)
@given(th=st.floats(0.2, math.pi - 0.2), ph=st.floats(-3, 3))
def test_spherical_chart_christoffel_matches_metric_differences(th, ph):
    C = SphericalChart()
    p = np.array([th, ph])
    np.testing.assert_allclose(C.christoffel(p), christoffel_from_metric(C.metric_tensor, p), atol=1e-5)


# -- curvature ----------------------------------------------------------------------

def test_ricci_constant_curvature_values():
    for M, K in ((Euclidean(3), 0.0), (Sphere2(), 1.0), (Hyperbolic2(), -1.0)):
        p = M.origin()
        np.testing.assert_allclose(M.ricci_operator(M.standard_frame(p)), K * np.eye(M.dim))
        assert float(M.ricci_lower_bound(p)) == pytest.approx(K)


def test_sphere_ricci_from_chart_curvature():
    th = 1.1
    C = SphericalChart()
    ric = ricci_from_christoffel(C.christoffel, np.array([th, 0.4]))
    frame = np.diag([1.0, 1.0 / math.sin(th)])  # orthonormal chart frame
    np.testing.assert_allclose(frame.T @ ric @ frame, np.eye(2), atol=1e-6)
    S = Sphere2()
    np.testing.assert_allclose(S.ricci_operator(S.standard_frame(S.origin())), np.eye(2))


def test_half_plane_ricci_from_chart_curvature():
    H = Hyperbolic2()
    p = np.array([0.7, 1.6])
    ric = ricci_from_christoffel(H.christoffel, p)
    frame = H.standard_frame(p)
    np.testing.assert_allclose(frame.T @ ric @ frame, -np.eye(2), atol=1e-6)


# -- geodesics --------------------------------------------------------------------------

def test_exp_examples():
    np.testing.assert_array_equal(Euclidean(2).exp(np.zeros(2), np.array([3.0, 4.0])), [3.0, 4.0])
    q = Sphere2().exp(np.array([0.0, 0.0, 1.0]), np.array([math.pi / 2, 0.0, 0.0]))
    np.testing.assert_allclose(q, [1.0, 0.0, 0.0], atol=1e-15)
    t = 0.8
    H = Hyperbolic2()
    q = H.exp(np.array([0.0, 1.0]), np.array([0.0, t]))
    np.testing.assert_allclose(q, [0.0, math.exp(t)], atol=1e-12)
    assert H.distance(np.array([0.0, 1.0]), q) == pytest.approx(t, abs=1e-12)


def test_exp_of_zero_is_identity():
    for M in (Euclidean(2), Sphere2(), Hyperbolic2()):
        p = M.origin()
        np.testing.assert_array_equal(M.exp(p, np.zeros_like(p)), p)


def test_log_examples():
    S = Sphere2()
    v = S.log(np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(v, [math.pi / 2, 0.0, 0.0], atol=1e-15)
    E = Euclidean(2)
    np.testing.assert_allclose(E.log(np.array([1.0, 2.0]), np.array([0.5, -1.0])), [-0.5, -3.0])
    for M in (E, S, Hyperbolic2()):
        p = M.origin()
        np.testing.assert_allclose(M.log(p, p), 0.0, atol=1e-15)


def test_antipodal_log_raises():
    S = Sphere2()
    with pytest.raises(CutLocusError):
        S.log(np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0]))


def test_distance_examples():
    assert Sphere2().distance(np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])) == pytest.approx(math.pi / 2)
    assert Hyperbolic2().distance(np.array([0.0, 1.0]), np.array([0.0, math.e])) == pytest.approx(1.0, abs=1e-14)
    for M in (Euclidean(2), Sphere2(), Hyperbolic2()):
        assert M.distance(M.origin(), M.origin()) == pytest.approx(0.0, abs=1e-7)
    far = Sphere2().truncated_distance(np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
    assert far == 1.0


def random_tangent(M, rng, scale):
    p = M.origin()
    if isinstance(M, Sphere2):
        p = rng.normal(size=3)
        p /= np.linalg.norm(p)
    elif isinstance(M, Hyperbolic2):
        p = np.array([rng.normal(), math.exp(rng.normal())])
    else:
        p = rng.normal(size=M.dim)
    frame = M.standard_frame(p)
    v = frame @ (rng.normal(size=M.dim) * scale)
    return p, v


@pytest.mark.parametrize("M", [Euclidean(3), Sphere2(), Hyperbolic2()], ids=["euclidean", "sphere", "hyperbolic"])
@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.01, 0.9))
def test_exp_log_round_trip(M, seed, scale):
    rng = np.random.default_rng(seed)
    p, v = random_tangent(M, rng, scale)
    q = M.exp(p, v)
    np.testing.assert_allclose(M.log(p, q), v, atol=1e-8)
    assert float(M.norm(p, M.log(p, q))) == pytest.approx(float(M.distance(p, q)), abs=1e-10)


@pytest.mark.parametrize("M", [Euclidean(2), Sphere2(), Hyperbolic2()], ids=["euclidean", "sphere", "hyperbolic"])
def test_transport_isometry_and_round_trip(M):
    rng = np.random.default_rng(11)
    for _ in range(300):
        p, v = random_tangent(M, rng, 0.8)
        _, w = random_tangent(M, rng, 1.0)
        if isinstance(M, Sphere2):
            w = w - np.dot(w, p) * p
        q = M.exp(p, v)
        tw = M.transport(p, q, w)
        assert float(M.norm(q, tw)) == pytest.approx(float(M.norm(p, w)), abs=1e-10)
        np.testing.assert_allclose(M.transport(q, p, tw), w, atol=1e-8)


def test_transport_same_point_is_identity():
    for M in (Euclidean(2), Sphere2(), Hyperbolic2()):
        p = M.origin()
        v = M.standard_frame(p)[:, 0]
        np.testing.assert_allclose(M.transport(p, p, v), v, atol=1e-15)


def test_sphere_holonomy_of_octant_triangle():
    S = Sphere2()
    a, b, c = np.eye(3)[2], np.eye(3)[0], np.eye(3)[1]
    v = np.array([1.0, 0.0, 0.0])
    w = S.transport(c, a, S.transport(b, c, S.transport(a, b, v)))
    angle = math.atan2(np.dot(np.cross(v, w), a), np.dot(v, w))
    assert abs(angle) == pytest.approx(math.pi / 2, abs=1e-12)


def test_metric_axioms_on_random_triples():
    rng = np.random.default_rng(5)
    for M in (Euclidean(2), Sphere2(), Hyperbolic2()):
        pts = [random_tangent(M, rng, 1.0)[0] for _ in range(3 * 1000)]
        p, q, r = (np.array(pts[i::3]) for i in range(3))
        dpq, dqr, dpr = M.distance(p, q), M.distance(q, r), M.distance(p, r)
        np.testing.assert_allclose(dpq, M.distance(q, p), atol=1e-12)
        assert np.all(dpr <= dpq + dqr + 1e-9)


def test_make_manifold_names():
    assert isinstance(make_manifold("sphere"), Sphere2)
    assert make_manifold("euclidean", 3).dim == 3
    with pytest.raises(GeometryError):
        make_manifold("torus")
