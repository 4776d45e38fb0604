import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhcz import (Ball, DoublingParams, ParameterError, coefficient_K,
                  coefficient_Kprime, default_beta0, fit_floored_power,
                  is_doubling, largest_doubling_down, smallest_doubling_up)
from nhcz.fspaces import chain_inequality_check

from conftest import random_space


def test_beta0_canonical(line3):
    assert default_beta0(line3.lam) == pytest.approx(217.0)


def test_coefficient_k_line3(line3):
    rep = coefficient_K(line3.space, line3.lam, Ball(1, 1.0), Ball(1, 2.0))
    # annulus holds p0 (d=1) and p2 (d=2): 1 + 1/4 + 1/8
    assert rep.value == pytest.approx(1.375)


def test_coefficient_kprime_line3(line3):
    rep = coefficient_Kprime(line3.space, line3.lam, Ball(1, 1.0), Ball(1, 2.0))
    # one dyadic step: 1 + mu(6B)/lambda(p1, 6) = 1 + 3/24
    assert rep.n_bq == 1
    assert rep.value == pytest.approx(1.125)


def test_coefficient_k_equal_balls(line3):
    # B = Q with no point at exactly the boundary distance inside the annulus
    rep = coefficient_K(line3.space, line3.lam, Ball(1, 0.5), Ball(1, 0.5))
    assert rep.value == pytest.approx(1.0)


def test_coefficient_kprime_trivial(line3):
    rep = coefficient_Kprime(line3.space, line3.lam, Ball(1, 2.0), Ball(1, 2.0))
    assert rep.value == pytest.approx(1.0)
    assert rep.n_bq == 0


def test_k_monotone_concentric(line3):
    sp, lam = line3.space, line3.lam
    k_br = coefficient_K(sp, lam, Ball(1, 0.5), Ball(1, 1.0)).value
    k_bs = coefficient_K(sp, lam, Ball(1, 0.5), Ball(1, 3.0)).value
    assert k_br <= k_bs + 1e-15


def test_containment_violation_rejected(line3):
    from nhcz import SpaceError
    with pytest.raises(SpaceError):
        coefficient_K(line3.space, line3.lam, Ball(0, 3.0), Ball(2, 0.5))


def test_kprime_ratio_for_homogeneous_lambda():
    scn_space = random_space(5, n=10)
    from nhcz.scenarios import _fit_power
    lam = _fit_power(scn_space, degree=2.0)
    idx = scn_space.index()
    b = Ball(0, float(idx.radii[0][1]))
    q = Ball(0, float(idx.radii[0][-1]))
    rep = coefficient_Kprime(scn_space, lam, b, q)
    assert rep.ratio_to_prime is not None and rep.ratio_to_prime > 0


def test_vacuous_doubling_zero_mass():
    import nhcz
    sp = nhcz.DiscreteSpace.from_coords([0.0, 1.0, 2.0], [0.0, 1.0, 1.0])
    # ball around the massless point, small enough to carry no mass
    assert is_doubling(sp, Ball(0, 0.5), 6.0, 1.5)


def test_smallest_doubling_up_line3(line3):
    beta0 = default_beta0(line3.lam)
    b = smallest_doubling_up(line3.space, line3.lam, Ball(0, 0.5), 6.0, beta0)
    # mu(6B) = mu(B(p0,3)) = 3 <= beta0 * mu(B) = 217: already doubling
    assert b == Ball(0, 0.5)


def test_smallest_doubling_up_spike(cluster32):
    sp, lam = cluster32.space, cluster32.lam
    beta0 = default_beta0(lam)
    idx = sp.index()
    found = False
    for c in range(sp.point_count):
        for r in idx.radii[c]:
            b = Ball(c, float(r))
            bt = smallest_doubling_up(sp, lam, b, 6.0, beta0)
            assert is_doubling(sp, bt, 6.0, beta0)
            if bt.radius > b.radius:
                found = True
    assert found, "spike cluster should force at least one strict dilation"


def test_smallest_doubling_up_precondition(line3):
    with pytest.raises(ParameterError):
        smallest_doubling_up(line3.space, line3.lam, Ball(0, 1.0), 6.0, 2.0)


def test_largest_doubling_down(line3):
    beta0 = default_beta0(line3.lam)
    # singleton stays a singleton under the eps floor
    b = largest_doubling_down(line3.space, line3.lam, Ball(0, 0.5), 6.0, beta0)
    assert b is not None and is_doubling(line3.space, b, 6.0, beta0)
    b2 = largest_doubling_down(line3.space, line3.lam, Ball(1, 2.0), 216.0, beta0)
    assert b2 is not None


def test_largest_doubling_down_precondition(line3):
    with pytest.raises(ParameterError):
        largest_doubling_down(line3.space, line3.lam, Ball(0, 1.0), 6.0, 3.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(1.1, 4.0), st.floats(1.5, 300.0))
def test_three_consecutive_doubling(seed, alpha, beta):
    """(alpha^3, beta)-doubling forces doubling of B, aB and a^2 B."""
    sp = random_space(seed, n=9)
    rng = np.random.default_rng(seed)
    idx = sp.index()
    c = int(rng.integers(0, sp.point_count))
    radii = idx.radii[c]
    r = float(radii[rng.integers(0, radii.size)])
    b = Ball(c, r)
    if is_doubling(sp, b, alpha ** 3, beta):
        for bb in (b, b.dilate(alpha), b.dilate(alpha ** 2)):
            assert is_doubling(sp, bb, alpha, beta)


def test_chain_inequality_dense(cluster32):
    sp, lam = cluster32.space, cluster32.lam
    idx = sp.index()
    out = chain_inequality_check(sp, lam, 0, idx.radii[0])
    assert out["passed"]
