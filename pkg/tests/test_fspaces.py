import numpy as np
import pytest

from nhcz import (Ball, DoublingParams, apply_truncated, hardy_from_cz,
                  john_nirenberg_check, rbmo_estimate)
from nhcz.fspaces import (AtomicBlock, atomic_block_validate,
                          chain_inequality_check, commutator_pointwise_check,
                          duality_pairing_check)
from nhcz.harness import random_block
from nhcz.scenarios import sample_function

from conftest import random_space


def params_of(scn):
    return DoublingParams.for_lambda(scn.lam)


def test_rbmo_constant_function(grid64):
    f = np.full(grid64.space.point_count, 3.7)
    est = rbmo_estimate(grid64.space, grid64.lam, f, params_of(grid64),
                        pair_cap=3000)
    assert est.value == pytest.approx(0.0)


def test_rbmo_positive_homogeneous(cluster32):
    f = sample_function(cluster32, 1)
    p = params_of(cluster32)
    a = rbmo_estimate(cluster32.space, cluster32.lam, f, p, pair_cap=3000)
    b = rbmo_estimate(cluster32.space, cluster32.lam, 2.0 * f, p, pair_cap=3000)
    assert b.value == pytest.approx(2.0 * a.value)


def test_john_nirenberg_p1_exact(grid64, cluster32):
    for scn in (grid64, cluster32):
        f = sample_function(scn, 2)
        out = john_nirenberg_check(scn.space, scn.lam, f, p=1.0, rho=6.0,
                                   params=params_of(scn), pair_cap=3000)
        assert out["vacuous"] or out["constant"] <= 1.0 + 1e-9


def test_zero_block_valid(grid64):
    block = AtomicBlock(host=Ball(0, 1.0), terms=[], variant=np.inf)
    rep = atomic_block_validate(grid64.space, grid64.lam, block)
    assert rep.ok and rep.h_norm == 0.0


def test_block_size_violation_margin(grid64):
    sp, lam = grid64.space, grid64.lam
    rng = np.random.default_rng(0)
    block = random_block(sp, lam, rng, p=2.0)
    assert atomic_block_validate(sp, lam, block).ok
    # inflate the term function by 1%: the size bound breaks with margin 0.01
    lj, bj, aj = block.terms[0]
    bad = AtomicBlock(host=block.host, terms=[(lj, bj, aj * 1.01)],
                      variant=block.variant, rho=block.rho)
    rep = atomic_block_validate(sp, lam, bad)
    assert not rep.ok
    kinds = [v[1] for v in rep.violations]
    assert "size bound violated" in kinds
    margins = [v[2] for v in rep.violations if v[1] == "size bound violated"]
    assert margins[0] == pytest.approx(0.01, rel=1e-6)


def test_block_support_violation(grid64):
    sp, lam = grid64.space, grid64.lam
    idx = sp.index()
    host = Ball(0, float(idx.radii[0][2]))
    a = np.arange(sp.point_count, dtype=float)
    a -= float(a @ sp.masses) / sp.total_mass  # mean zero but global support
    block = AtomicBlock(host=host, terms=[(1.0, host, a)], variant=np.inf)
    rep = atomic_block_validate(sp, lam, block)
    assert not rep.ok


def test_hardy_from_cz_two_spikes():
    """Two well-separated tight pairs each produce a nonzero atomic block."""
    from nhcz import DiscreteSpace, fit_floored_power
    pts = np.concatenate([[0.0, 0.001], [50.0, 50.001],
                          100.0 + np.arange(20.0)])
    sp = DiscreteSpace.from_coords(pts, np.ones(pts.size))
    lam = fit_floored_power(sp, degree=1.0)
    f = np.zeros(sp.point_count)
    f[0], f[2] = 10.0, -10.0
    blocks, norm_upper = hardy_from_cz(sp, lam, f, 7.0, p=2.0, beta0=4.0)
    assert len(blocks) == 2
    for b in blocks:
        assert atomic_block_validate(sp, lam, b).ok
        assert np.any(b.function(sp.point_count) != 0)
    assert norm_upper > 0
    norm_p = float(np.abs(f) ** 2 @ sp.masses)
    fitted = norm_upper * 7.0 / norm_p
    assert np.isfinite(fitted) and fitted > 0


def test_hardy_zero_function(grid64):
    blocks, norm = hardy_from_cz(grid64.space, grid64.lam,
                                 np.zeros(grid64.space.point_count),
                                 1.0, p=1.0)
    assert blocks == [] and norm == 0.0


def test_duality_constant_g(grid64):
    sp, lam = grid64.space, grid64.lam
    rng = np.random.default_rng(4)
    block = random_block(sp, lam, rng)
    out = duality_pairing_check(sp, lam, block,
                                np.full(sp.point_count, 2.0), params_of(grid64),
                                pair_cap=3000)
    # a constant g has zero rbmo norm and zero pairing: vacuous entry
    assert out["vacuous"]


def test_duality_random(grid64):
    sp, lam = grid64.space, grid64.lam
    rng = np.random.default_rng(8)
    block = random_block(sp, lam, rng)
    g = sample_function(grid64, 9, mean_zero=True)
    out = duality_pairing_check(sp, lam, block, g, params_of(grid64),
                                pair_cap=3000)
    assert not out["vacuous"]
    assert np.isfinite(out["ratio"]) and out["ratio"] >= 0


def test_chain_inequality_qualifying_runs(cluster32):
    sp, lam = cluster32.space, cluster32.lam
    idx = sp.index()
    out = chain_inequality_check(sp, lam, 0, idx.radii[0])
    assert out["passed"]
    for run in out["runs"]:
        assert run["lhs"] <= run["rhs"] * (1 + 1e-12)


def test_chain_rejects_bad_radii(grid64):
    from nhcz import SpaceError
    with pytest.raises(SpaceError):
        chain_inequality_check(grid64.space, grid64.lam, 0, [2.0, 1.0])


def test_commutator_pointwise(bergman32):
    kernel = bergman32.extras["kernel"]
    f = sample_function(bergman32, 0, mean_zero=True)
    b = np.sin(3.0 * bergman32.space.dist[:, 0])
    out = commutator_pointwise_check(bergman32.space, bergman32.lam, kernel,
                                     b, f, p=2.0, params=params_of(bergman32),
                                     pair_cap=2000)
    assert not out["vacuous"]
    assert np.isfinite(out["constant"])
