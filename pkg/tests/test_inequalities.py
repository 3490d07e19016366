import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathspace import inequalities as ineq
from pathspace.brownian import UniformOnCompact
from pathspace.geometry import Euclidean, GeometryError, Hyperbolic2, Sphere2
from pathspace.pathcalc.ensemble import EnsembleSpec
from pathspace.pathcalc.library import avg_tanh, constant, sphere_positive_suite, sphere_two_sided_suite
from pathspace.rng import RngStream


def test_constants():
    assert ineq.lsi_constant(1.0) == 4.0
    assert ineq.lsi_constant(2.0) == 1.0
    assert ineq.whole_line_lsi_constant(1.0, 2.0) == 12.0
    with pytest.raises(ValueError):
        ineq.lsi_constant(0.0)


def test_eta_on_constant_curvature():
    s = np.linspace(0, 3, 7)
    np.testing.assert_allclose(ineq.eta(Sphere2(), s), np.exp(-s))
    np.testing.assert_allclose(ineq.eta(Euclidean(2), s), 1.0)


def test_delta_eps_quadrature_matches_closed_form():
    best, T, vals = ineq.delta_eps(lambda s: ineq.eta(Sphere2(), s), 0.5)
    assert best == pytest.approx(4.0, rel=1e-9)
    for Ti, v in zip(T[::7], vals[::7]):
        assert v == pytest.approx(ineq.delta_eps_closed_form(1.0, 0.5, float(Ti)), rel=1e-8, abs=1e-12)
        assert v == pytest.approx(4 * (1 - math.exp(-Ti / 2)) ** 2, rel=1e-8, abs=1e-12)


def test_flat_delta_eps_diverges():
    assert ineq.delta_eps_closed_form(0.0, 0.5) == math.inf
    assert ineq.delta_eps_closed_form(0.0, 0.5, 100.0) > ineq.delta_eps_closed_form(0.0, 0.5, 10.0)
    with pytest.raises(ValueError):
        ineq.delta_eps_closed_form(1.0, 1.5)


def test_entropy_estimator_against_closed_form():
    # F uniform on [1, 2]: Ent(F^2) = E[F^2 log F^2] - E[F^2] log E[F^2]
    rng = np.random.default_rng(0)
    F = rng.uniform(1, 2, size=200_000)
    m2 = 7 / 3
    e = 16 / 3 * math.log(2) - 14 / 9  # int_1^2 x^2 log x^2 dx
    exact = e - m2 * math.log(m2)
    est, clamped = ineq.entropy_estimate(F)
    assert clamped == 0
    assert abs(est.value - exact) <= 4 * est.stderr


def test_entropy_of_constant_is_zero_and_clamping_is_counted():
    est, _ = ineq.entropy_estimate(np.full(100, 1.7))
    assert est.value == pytest.approx(0.0, abs=1e-12)
    _, clamped = ineq.entropy_estimate(np.r_[np.zeros(3), np.ones(10)])
    assert clamped == 3


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), scale=st.floats(0.1, 10.0))
def test_entropy_is_nonnegative_and_homogeneous(seed, scale):
    F = np.random.default_rng(seed).uniform(0.5, 3.0, size=500)
    a, _ = ineq.entropy_estimate(F)
    b, _ = ineq.entropy_estimate(scale * F)
    assert a.value >= -1e-12
    assert b.value == pytest.approx(scale ** 2 * a.value, rel=1e-9, abs=1e-12)


def test_constant_function_passes_trivially():
    S = Sphere2()
    ens = EnsembleSpec(S, S.origin(), 1e-2, 200, RngStream(1), 1.0)
    rep = ineq.lsi_check([constant(S, 2.0)], ens)
    row = rep.rows[0]
    assert row.lhs == pytest.approx(0.0, abs=1e-12) and row.rhs == 0.0 and rep.passed
    assert ineq.poincare_check([constant(S, 2.0)], ens).passed


@pytest.mark.slow
def test_sphere_inequalities_small_ensemble():
    S = Sphere2()
    suite = sphere_positive_suite()
    ens = EnsembleSpec(S, S.origin(), 1e-2, 2000, RngStream(2, "ineq"), 2.0)
    samples = ineq.functional_samples(suite, ens)
    assert ineq.lsi_check(suite, ens, samples=samples).passed
    assert ineq.poincare_check(suite, ens, samples=samples).passed


def test_linearization_small_eps():
    S = Sphere2()
    ens = EnsembleSpec(S, S.origin(), 1e-2, 2000, RngStream(3, "lin"), 1.0)
    out = ineq.linearization_check(avg_tanh(S), ens, eps=0.1)
    assert out["passed"]
    assert out["relative_gap"] < 0.1


@pytest.mark.slow
def test_whole_line_check_uniform_start():
    S = Sphere2()
    suite = sphere_two_sided_suite()
    ens = EnsembleSpec(S, S.origin(), 1e-2, 2000, RngStream(4, "wl"), 1.5, two_sided=True,
                       nu=UniformOnCompact())
    rep = ineq.whole_line_check(suite, ens)
    assert rep.passed
    assert all(r.constant == 24.0 for r in rep.rows)  # 2 C with C = 12
    with pytest.raises(ValueError):
        ineq.whole_line_check(suite, ens.with_(two_sided=False))


def test_poincare_failure_small():
    rows, slope = ineq.poincare_failure((1.0, 4.0), 4000, 1e-2, RngStream(5, "pf"))
    assert rows[0]["dirichlet"] == pytest.approx(0.5, abs=1e-9)
    assert rows[1]["dirichlet"] == pytest.approx(2.0, abs=1e-9)
    for r in rows:
        assert abs(r["variance"] - r["T"] ** 3 / 3) <= 4 * r["variance_se"]
    assert slope == pytest.approx(2.0, abs=0.3)


# -- harmonic witness on the half-plane ------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(x=st.floats(-5, 5), y=st.floats(0.1, 5))
def test_harmonic_symmetries(x, y):
    assert ineq.harmonic_h2(np.array([0.0, y])) == pytest.approx(0.5)
    s = ineq.harmonic_h2(np.array([x, y])) + ineq.harmonic_h2(np.array([-x, y]))
    assert s == pytest.approx(1.0)


def test_harmonic_discrete_laplacian():
    rng = np.random.default_rng(6)
    step = 1e-3
    for _ in range(50):
        p = np.array([rng.uniform(-3, 3), rng.uniform(0.2, 3)])
        u = ineq.harmonic_h2
        lap = sum(u(p + d) for d in (np.array([step, 0]), np.array([-step, 0]), np.array([0, step]),
                                     np.array([0, -step]))) - 4 * u(p)
        assert abs(p[1] ** 2 * lap / step ** 2) <= 1e-6
        fd = [(u(p + e * 1e-6) - u(p - e * 1e-6)) / 2e-6 for e in np.eye(2)]
        np.testing.assert_allclose(ineq.harmonic_h2_gradient(p), fd, atol=1e-7)
    with pytest.raises(GeometryError):
        ineq.harmonic_h2(np.array([0.0, -1.0]))


def test_nonergodicity_small():
    rows, slope = ineq.nonergodicity_witness((1.0, 4.0, 16.0), 2000, 2e-2, RngStream(7, "ne"))
    for r in rows:
        assert abs(r["drift_z"]) < 3.5
        assert abs(r["cross_z"]) < 3.5
    assert rows[-1]["variance"] > 0.005
    assert -2.6 < slope < -1.4
