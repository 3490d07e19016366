import math

import numpy as np
import pytest
from scipy import integrate, stats

from pathspace import brownian
from pathspace.brownian import PointMass, TruncatedLebesgue, UniformOnCompact
from pathspace.geometry import Euclidean, GeometryError, Hyperbolic2, Sphere2
from pathspace.montecarlo import MonteCarloEstimate
from pathspace.rng import RngStream

MANIFOLDS = [Euclidean(2), Sphere2(), Hyperbolic2()]
IDS = ["euclidean", "sphere", "hyperbolic"]


@pytest.mark.parametrize("M", MANIFOLDS, ids=IDS)
def test_zero_horizon_gives_single_node(M):
    path = brownian.sample_bm(M, M.origin(), 0.0, 1e-3, RngStream(0, "t0"))
    assert path.points.shape == (1, 1, M.ambient_dim)
    assert path.increments.shape == (1, 0, M.dim)
    np.testing.assert_array_equal(path.points[0, 0], M.origin())


@pytest.mark.parametrize("M", MANIFOLDS, ids=IDS)
def test_paths_stay_on_manifold_with_orthonormal_frames(M):
    path = brownian.sample_paths(M, M.origin(), 1.0, 1e-2, RngStream(1, "frames"), np.arange(50))
    if isinstance(M, Sphere2):
        np.testing.assert_allclose(np.linalg.norm(path.points, axis=-1), 1.0, atol=1e-12)
    if isinstance(M, Hyperbolic2):
        assert np.all(path.points[..., 1] > 0)
    P = path.points.reshape(-1, M.ambient_dim)
    U = path.frames.reshape(-1, M.ambient_dim, M.dim)
    gram = np.stack([[M.metric(P, U[:, :, i], U[:, :, j]) for j in range(M.dim)] for i in range(M.dim)])
    np.testing.assert_allclose(gram, np.eye(M.dim)[:, :, None] * np.ones(len(P)), atol=1e-8)


def test_euclidean_path_is_cumulative_sum_of_increments():
    E = Euclidean(2)
    path = brownian.sample_paths(E, np.array([0.5, -1.0]), 0.5, 0.01, RngStream(2, "flat"), np.arange(4))
    np.testing.assert_allclose(path.points[:, 1:] - np.array([0.5, -1.0]), path.antidevelopment()[:, 1:],
                               atol=1e-14)


def test_euclidean_covariance_matches_min():
    rows = brownian.coordinate_covariance(Euclidean(2), np.zeros(2), [0.25, 0.5, 1.0], 4000, 1e-2,
                                          RngStream(3, "cov"))
    z = [(r["estimate"] - (r["i"] == r["j"]) * min(r["s"], r["t"])) / r["stderr"] for r in rows]
    assert max(abs(v) for v in z) < 4.5


def test_two_sided_legs_start_together_and_are_independent():
    E = Euclidean(1)
    paths = brownian.sample_two_sided(E, np.zeros(1), 1.0, 1e-2, RngStream(4, "two"), np.arange(4000))
    np.testing.assert_array_equal(paths.forward.points[:, 0], paths.backward.points[:, 0])
    a, b = paths.at(0.5)[:, 0], paths.at(-0.7)[:, 0]
    est = MonteCarloEstimate.from_samples(a * b)
    assert abs(float(est.z_against(0.0))) < 3.5
    # same marginal law on both sides
    assert stats.ks_2samp(np.abs(paths.at(0.6)[:, 0]), np.abs(paths.at(-0.6)[:, 0])).pvalue > 0.001
    with pytest.raises(GeometryError):
        paths.at(0.505)


def test_rayleigh_factor_matches_quadrature():
    for dt in (1e-3, 0.25, 1.0):
        s = math.sqrt(dt)
        val, _ = integrate.quad(lambda r: math.cos(r) * r / dt * math.exp(-r * r / (2 * dt)), 0, 40 * s)
        assert brownian.rayleigh_cos_mean(dt) == pytest.approx(val, abs=1e-12)


def test_walk_bias_halves_with_dt():
    for t in (0.25, 0.5, 1.0):
        e1 = brownian.walk_cos_mean(t, 1e-3) - math.exp(-t)
        e2 = brownian.walk_cos_mean(t, 5e-4) - math.exp(-t)
        assert e2 / e1 == pytest.approx(0.5, rel=0.01)


def test_sphere_cos_decay_coarse_step_oracle():
    S = Sphere2()
    est = brownian.cos_decay(S, S.origin(), [1.0], 20000, 0.25, RngStream(5, "coarse"))[1.0]
    assert abs(float(est.z_against(brownian.walk_cos_mean(1.0, 0.25)))) < 3.5


# -- initial laws ----------------------------------------------------------------

def test_point_mass_start():
    pts, mass = brownian.sample_initial(PointMass((1.0, 2.0)), Euclidean(2), RngStream(0), [0, 1])
    np.testing.assert_array_equal(pts, [[1.0, 2.0], [1.0, 2.0]])
    assert mass == 1.0


def test_uniform_sphere_start_is_centred():
    pts, mass = brownian.sample_initial(UniformOnCompact(), Sphere2(), RngStream(6, "nu"), np.arange(20000))
    est = MonteCarloEstimate.from_samples(pts)
    assert np.all(np.abs(est.z_against(0.0)) < 4.0)
    assert mass == pytest.approx(4 * math.pi)


def test_truncated_lebesgue_mass_and_support():
    E = Euclidean(2)
    pts, mass = brownian.sample_initial(TruncatedLebesgue(2.0), E, RngStream(7, "nu"), np.arange(5000))
    assert mass == pytest.approx(4 * math.pi)
    r = np.linalg.norm(pts, axis=1)
    assert r.max() <= 2.0
    # radius law r^2/4 ~ uniform
    assert stats.kstest((r / 2) ** 2, "uniform").pvalue > 0.001
    H = Hyperbolic2()
    pts, mass = brownian.sample_initial(TruncatedLebesgue(1.0), H, RngStream(7, "nuh"), np.arange(500))
    assert np.all(H.distance(H.origin(), pts) <= 1.0 + 1e-9)
    assert mass == pytest.approx(2 * math.pi * (math.cosh(1.0) - 1))
    with pytest.raises(GeometryError):
        brownian.sample_initial(UniformOnCompact(), E, RngStream(0), [0])


# -- damping ------------------------------------------------------------------------

def test_damping_flat_is_identity():
    path = brownian.sample_paths(Euclidean(3), np.zeros(3), 1.0, 0.01, RngStream(8), np.arange(3))
    M = brownian.damping_matrices(path)
    np.testing.assert_allclose(M, np.broadcast_to(np.eye(3), M.shape), atol=0)


def test_damping_sphere_closed_form():
    path = brownian.sample_paths(Sphere2(), Sphere2().origin(), 1.0, 1e-3, RngStream(8, "s"), np.arange(5))
    M = brownian.damping_matrices(path)
    target = np.exp(-path.times / 2)[None, :, None, None] * np.eye(2)
    assert np.max(np.abs(M - target)) <= 1e-10


# -- tails ----------------------------------------------------------------------------

def test_sup_abs_bm_tail_matches_reflection_scale():
    p = brownian.sup_abs_bm_tail(1.0, 3.0)
    assert p == pytest.approx(4 * stats.norm.sf(3.0), rel=2e-3)
    assert brownian.sup_abs_bm_tail(1.0, 0.0) == 1.0


def test_tail_probability_trivial_thresholds():
    S = Sphere2()
    probs = brownian.tail_probability(S, S.origin(), 1.0, [0.0, math.pi], 200, 1e-2, RngStream(9))
    assert probs[0.0].value == 1.0
    assert probs[math.pi].value == 0.0


def test_tail_bound_constants():
    assert brownian.tail_constant_c2(2, 1.0, None) == 0.0
    c2 = brownian.tail_constant_c2(2, 1.0, lambda r: 1.0)
    assert c2 == pytest.approx(1 / 8, rel=1e-6)  # sup t - 2 t^2 at t = 1/4
    assert brownian.kappa(1.0) == pytest.approx(math.exp(-3) / 2)
    assert brownian.tail_bound(1, 1.0, 0.0) == pytest.approx(math.e)


def test_ball_volume_formulas():
    assert brownian.ball_volume(Euclidean(3), 1.0) == pytest.approx(4 * math.pi / 3)
    assert brownian.ball_volume(Sphere2(), math.pi) == pytest.approx(4 * math.pi)


def test_time_grid_rejects_off_grid_horizon():
    with pytest.raises(GeometryError):
        brownian.time_grid(1.0005, 1e-3 * 2)
