import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, linalg

from pathspace import spde
from pathspace.geometry import Euclidean, Hyperbolic2, Sphere2
from pathspace.rng import RngStream


def linear_state(J=16, L=2.0, slope=0.7, boundary="dirichlet"):
    E = Euclidean(1)
    s = spde.constant_state(E, np.zeros(1), J, L, 1, boundary)
    s.points[0, :, 0] = slope * s.sites
    return s


# -- the explicit step -------------------------------------------------------------------

def test_linear_data_is_stationary_without_noise():
    s = linear_state()
    start = s.points.copy()
    for _ in range(50):
        s = spde.step(s, s.h * s.h / 4)
    np.testing.assert_allclose(s.points, start, atol=1e-12)


def test_flat_step_is_finite_difference_heat_step():
    J, L = 12, 3.0
    E = Euclidean(1)
    s = spde.brownian_state(E, np.zeros(1), J, L, RngStream(1, "fd"), [0])
    dt = s.h * s.h / 3
    z = RngStream(1, "noise").normals([0], 3, (J + 1, 1))
    new = spde.step(s, dt, z)
    u = s.points[0, :, 0]
    lap = np.zeros_like(u)
    lap[1:-1] = u[2:] + u[:-2] - 2 * u[1:-1]
    lap[-1] = u[-2] - u[-1]
    expected = u + dt * lap / (2 * s.h * s.h) + math.sqrt(dt / s.h) * z[0, :, 0]
    expected[0] = u[0]
    np.testing.assert_allclose(new.points[0, :, 0], expected, atol=1e-14)


def test_sphere_two_site_drift_points_to_pinned_neighbour():
    S = Sphere2()
    o = S.origin()
    u = S.exp(o, np.array([0.3, 0.0, 0.0]))
    h = 0.1
    pts = np.stack([o, u, u])[None]
    state = spde.StringState(S, pts, S.standard_frame(pts), h, "pinned")
    drift = spde.intrinsic_drift(state)[0]
    rho = float(S.distance(u, o))
    assert np.linalg.norm(drift[1]) == pytest.approx(rho / (2 * h * h), rel=1e-12)
    direction = S.log(u, o) / rho
    np.testing.assert_allclose(drift[1] / np.linalg.norm(drift[1]), direction, atol=1e-12)
    np.testing.assert_allclose(drift[[0, 2]], 0.0, atol=1e-12)


def test_chart_expansion_supplies_christoffel_term():
    H = Hyperbolic2()
    gaps = []
    for h in (0.04, 0.02, 0.01):
        xs = np.array([-h, 0.0, h])
        pts = np.stack([0.3 * np.sin(xs) + 0.1 * xs ** 2, 1.0 + 0.5 * xs], axis=-1)
        a = spde.chart_drift(H, pts[0], pts[1], pts[2], h)
        b = spde.three_site_drift(H, pts[0], pts[1], pts[2], h)
        gaps.append(np.max(np.abs(a - b)))
    assert gaps[1] / gaps[0] == pytest.approx(0.25, rel=0.15)
    assert gaps[2] / gaps[1] == pytest.approx(0.25, rel=0.15)


def test_cfl_guard():
    s = linear_state()
    with pytest.raises(spde.CFLError):
        spde.step(s, s.h * s.h)
    with pytest.raises(spde.CFLError):
        spde.check_cfl(-1.0, 0.1)


def test_sphere_strings_stay_on_sphere():
    S = Sphere2()
    s = spde.brownian_state(S, S.origin(), 16, 1.0, RngStream(2, "sph"), np.arange(3))
    dt = s.h * s.h / 4
    s = spde.evolve(s, 40 * dt, dt, RngStream(2, "sph"), np.arange(3))
    np.testing.assert_allclose(np.linalg.norm(s.points, axis=-1), 1.0, atol=1e-12)
    np.testing.assert_array_equal(s.points[:, 0], np.broadcast_to(S.origin(), (3, 3)))


# -- flat-space closed forms -----------------------------------------------------------------

@pytest.mark.parametrize("right", ["free", "pinned"])
def test_eigenpairs_diagonalize_the_lattice_operator(right):
    J, h = 20, 0.1
    lam, V = spde.eigenpairs(J, h, right)
    A = spde.lattice_laplacian(J, right) / (2 * h * h)
    np.testing.assert_allclose(V.T @ V, np.eye(len(lam)), atol=1e-12)
    np.testing.assert_allclose(-A @ V, V * lam, atol=1e-9)


@pytest.mark.parametrize("right", ["free", "pinned"])
def test_stationary_covariance_solves_lyapunov(right):
    J, h = 24, 0.125
    A = spde.lattice_laplacian(J, right) / (2 * h * h)
    C = linalg.solve_continuous_lyapunov(A, -np.eye(A.shape[0]) / h)
    np.testing.assert_allclose(spde.stationary_covariance(J, h, right), C, atol=1e-10)


def test_free_end_stationary_law_is_discrete_brownian_motion():
    J, h = 32, 0.25
    i = np.arange(1, J + 1)
    np.testing.assert_allclose(spde.stationary_covariance(J, h), h * np.minimum.outer(i, i), atol=1e-10)


def test_exact_evolution_limits():
    J, h = 32, 0.25
    g = spde.LatticeGaussian.deterministic(np.linspace(1, 2, J), h)
    same = spde.exact_euclidean_evolve(g, 0.0)
    np.testing.assert_array_equal(same.mean, g.mean)
    late = spde.exact_euclidean_evolve(g, 2000.0, noise=False)
    assert np.max(np.abs(late.mean)) < 1e-6
    stat = spde.LatticeGaussian.stationary(J, h)
    kept = spde.exact_euclidean_evolve(stat, 3.0)
    np.testing.assert_allclose(kept.cov, stat.cov, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(t=st.floats(0.01, 5.0), s=st.floats(0.01, 5.0))
def test_exact_evolution_is_a_semigroup(t, s):
    J, h = 16, 0.25
    g = spde.LatticeGaussian(np.linspace(-1, 1, J), 0.1 * np.eye(J), h)
    a = spde.exact_euclidean_evolve(spde.exact_euclidean_evolve(g, t), s)
    b = spde.exact_euclidean_evolve(g, t + s)
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-10)
    np.testing.assert_allclose(a.cov, b.cov, atol=1e-10)


def test_dirichlet_heat_kernel_values():
    assert spde.dirichlet_heat_kernel(1.0, 1.0, 1.0) == pytest.approx((1 - math.exp(-2)) / math.sqrt(2 * math.pi))
    assert spde.dirichlet_heat_kernel(0.7, 0.0, 1.3) == 0.0
    mass, _ = integrate.quad(lambda y: spde.dirichlet_heat_kernel(1.0, 0.5, y), 0, np.inf)
    assert 0 < mass < 1
    assert mass == pytest.approx(math.erf(0.5 / math.sqrt(2)), abs=1e-8)


def test_halfline_noise_covariance_increases_to_min():
    vals = [spde.halfline_noise_covariance(t, 1.0, 2.0) for t in (1.0, 10.0, 100.0, 1000.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    # the gap to min(x, y) is the kernel tail int_t^inf p(2r, x, y) dr ~ x y / sqrt(pi t)
    for t, v in zip((100.0, 1000.0), vals[2:]):
        assert 1.0 - v == pytest.approx(2.0 / math.sqrt(math.pi * t), rel=0.05)


# -- experiments ------------------------------------------------------------------------------

def test_zero_time_invariance_gives_identical_ensembles():
    rows = spde.euclidean_invariance(J=16, L=2.0, t=0.0, xs=(0.5, 1.0), n_paths=200)
    before = [r for r in rows if r["stage"] == "before"]
    after = [r for r in rows if r["stage"] == "after"]
    for a, b in zip(before, after):
        assert a["estimate"] == b["estimate"]


def test_ergodicity_decay_table():
    times, values, info = spde.ergodicity_decay(1.0, 8.0, 64)
    assert values[0] == pytest.approx(1.0, abs=1e-10)  # BM variance at x = 1
    assert info["monotone"]
    assert info["final_fraction"] < 0.01
    assert info["fitted_rate"] == pytest.approx(info["lambda1"], rel=0.1)
    const = spde.quadratic_decay(np.zeros((64, 64)), 64, 0.125, times[:3])
    assert np.all(const == 0)


def test_snapshots_csv(tmp_path):
    E = Euclidean(1)
    s = spde.brownian_state(E, np.zeros(1), 8, 1.0, RngStream(3), np.arange(2))
    _, snaps = spde.evolve(s, 0.0625, s.h * s.h / 4, RngStream(3), np.arange(2), snapshot_every=2)
    path = tmp_path / "snap.csv"
    spde.write_snapshots(path, snaps)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("trajectory,time,site_index")
    assert len(lines) == 1 + len(snaps) * 2 * 9
