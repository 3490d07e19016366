import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathspace.montecarlo import MonteCarloEstimate, combined_z, ensemble_map, paired_difference
from pathspace.rng import LEG_BACKWARD, LEG_FORWARD, RngStream


def test_lanes_depend_only_on_index_and_leg():
    s = RngStream(3, "demo")
    a = s.normals([0, 1, 2, 3], LEG_FORWARD, (5,))
    b = s.normals([3, 1], LEG_FORWARD, (5,))
    np.testing.assert_array_equal(a[[3, 1]], b)
    assert not np.allclose(s.normals([0], LEG_BACKWARD, (5,)), a[0])


def test_seed_and_name_separate_streams():
    x = RngStream(3, "demo").normals([0], LEG_FORWARD, (4,))
    assert not np.allclose(x, RngStream(4, "demo").normals([0], LEG_FORWARD, (4,)))
    assert not np.allclose(x, RngStream(3, "other").normals([0], LEG_FORWARD, (4,)))
    assert RngStream(3, "demo").child("a") == RngStream(3, "demo/a")


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 300), threads=st.integers(1, 4))
def test_ensemble_map_is_independent_of_worker_count(n, threads):
    s = RngStream(9, "map")

    def block(idx):
        return {"z": s.normals(idx, LEG_FORWARD, (3,)), "i": idx.astype(float)}

    one = ensemble_map(block, n, doubles_per_sample=2e5, threads=1)
    many = ensemble_map(block, n, doubles_per_sample=2e5, threads=threads)
    np.testing.assert_array_equal(one["z"], many["z"])
    np.testing.assert_array_equal(one["i"], np.arange(n))


def test_estimate_basics():
    est = MonteCarloEstimate.from_samples(np.array([1.0, 2.0, 3.0, 4.0]))
    assert est.value == 2.5
    assert est.stderr == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert float(est.z_against(2.5)) == 0.0
    exact = MonteCarloEstimate.from_samples(np.full(10, 0.5))
    assert float(exact.z_against(0.5)) == 0.0
    assert float(exact.z_against(0.4)) == np.inf
    assert float(combined_z(est, est)) == 0.0
    assert paired_difference([1.0, 2.0], [1.0, 2.0]).value == 0.0
