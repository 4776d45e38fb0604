import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhcz import (DiscreteSpace, DominatingFunction, SpaceError, ball_members,
                  candidate_radii, fit_floored_power, measure,
                  validate_geometric_doubling, validate_upper_doubling)
from nhcz.scenarios import generate, non_doubling_witness

from conftest import random_space


def test_line3_ball_members(line3):
    sp = line3.space
    # points at 0, 1, 3; closed balls
    assert ball_members(sp, 0, 0.5) == frozenset({0})
    assert ball_members(sp, 0, 1.0) == frozenset({0, 1})
    assert ball_members(sp, 1, 2.0) == frozenset({0, 1, 2})
    assert ball_members(sp, 2, 1.9) == frozenset({2})


def test_line3_measure(line3):
    sp = line3.space
    assert measure(sp, ball_members(sp, 1, 2.0)) == pytest.approx(3.0)
    assert measure(sp, frozenset()) == 0.0


def test_candidate_radii_cover_all_balls(line3):
    sp = line3.space
    radii = candidate_radii(sp, 0)
    # eps floor plus the distinct positive distances 1 and 3
    assert radii[0] == pytest.approx(sp.eps_min)
    assert list(radii[1:]) == [1.0, 3.0]
    sizes = [len(ball_members(sp, 0, r)) for r in radii]
    assert sizes == [1, 2, 3]


def test_eps_min_convention(line3):
    sp = line3.space
    assert sp.eps_min == pytest.approx(1.0 / 216)
    # a 108-dilate of the eps ball is still a singleton
    assert ball_members(sp, 0, 108 * sp.eps_min) == frozenset({0})


def test_line3_lambda_validates(line3):
    rep = validate_upper_doubling(line3.space, line3.lam)
    assert rep.passed
    assert rep.worst_ratio <= 1.0 + 1e-12
    assert line3.lam.c_lambda == 2.0


def test_fit_floored_power_dominates():
    sp = random_space(3)
    lam = fit_floored_power(sp, degree=2.0)
    rep = validate_upper_doubling(sp, lam)
    assert rep.passed
    # the fit is tight: worst ratio is exactly 1
    assert rep.worst_ratio == pytest.approx(1.0)


def test_cluster_spike_is_non_doubling_but_upper_doubling(cluster32):
    rep = validate_upper_doubling(cluster32.space, cluster32.lam)
    assert rep.passed
    wit = cluster32.extras["non_doubling_witness"]
    assert wit is not None
    c, r, ratio = wit
    # the measure-doubling constant blows up even though lambda dominates
    assert ratio > 16.0
    idx = cluster32.space.index()
    assert idx.mu(c, 2 * r) == pytest.approx(ratio * idx.mu(c, r))


def test_geometric_doubling_estimate(grid64):
    n_est, n_log = validate_geometric_doubling(grid64.space)
    assert n_est >= 1 and np.isfinite(n_log)


def test_invalid_spaces_rejected():
    with pytest.raises(SpaceError):
        DiscreteSpace.from_matrix([[0.0, 1.0], [2.0, 0.0]], [1.0, 1.0])
    with pytest.raises(SpaceError):
        DiscreteSpace.from_coords([0.0, 1.0], [0.0, 0.0])
    with pytest.raises(SpaceError):
        DiscreteSpace.from_coords([0.0, 1.0], [1.0, -1.0])
    # triangle violation with A = 1
    bad = np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]])
    with pytest.raises(SpaceError):
        DiscreteSpace.from_matrix(bad, np.ones(3))
    # the same matrix is a valid quasi-metric for A = 2.5
    DiscreteSpace.from_matrix(bad, np.ones(3), quasi_constant=2.5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_measure_monotone_in_radius(seed):
    sp = random_space(seed, n=8)
    idx = sp.index()
    for c in range(sp.point_count):
        mus = [idx.mu(c, r) for r in idx.radii[c]]
        assert all(a <= b + 1e-12 for a, b in zip(mus, mus[1:]))
        assert mus[-1] == pytest.approx(sp.total_mass)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_lambda_grid_properties(seed):
    sp = random_space(seed, n=8)
    lam = fit_floored_power(sp, degree=2.0)
    idx = sp.index()
    for c in range(sp.point_count):
        radii = idx.radii[c]
        lv = lam.values(c, radii)
        assert np.all(lv > 0)
        assert np.all(np.diff(lv) >= -1e-12)
        assert np.all(lam.values(c, 2 * radii) <= lam.c_lambda * lv * (1 + 1e-12))


def test_scenario_determinism():
    a = generate("grid", 30, 7)
    b = generate("grid", 30, 7)
    assert np.array_equal(a.space.dist, b.space.dist)
    assert np.array_equal(a.space.masses, b.space.masses)
    c = generate("cluster-spike", 32, 9)
    d = generate("cluster-spike", 32, 9)
    assert np.array_equal(c.space.dist, d.space.dist)


def test_unknown_scenario_kind():
    with pytest.raises(SpaceError):
        generate("nope", 10, 0)
