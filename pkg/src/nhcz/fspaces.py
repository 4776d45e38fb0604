"""RBMO norm estimation, atomic blocks, Hardy-side assembly, dual pairing.

The RBMO estimate uses the canonical per-ball numbers f_B = m_{B~} f and
reports the best constant over the oscillation suprema and the nested-pair
mean-difference supremum; the infimum over abstract number collections is
not searched, so the estimate is an upper bound realizing the norm up to
structural constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .balls import Ball, DoublingParams, KCalculator, coefficient_K
from .czdecomp import CZDecomposition, cz_decompose
from .maximal import (_doubling_table, _integral_cumsums, ball_oscillations,
                      maximal_p, maximal_noncentered, sharp_maximal)
from .space import DiscreteSpace, DominatingFunction, SpaceError, as_function


@dataclass
class RBMOEstimate:
    value: float                      # the best constant C_b
    components: dict                  # named suprema feeding the max
    witness_ball: Optional[Ball]
    witness_pair: Optional[Tuple[Ball, Ball]]
    sampled: bool = False


def _all_candidate_balls(space: DiscreteSpace):
    """(center, radius, prefix) for every distinct candidate ball."""
    key = "all_balls"
    if key not in space._caches:
        idx = space.index()
        balls = []
        for c in range(space.point_count):
            for r in idx.radii[c]:
                m = idx.prefix(c, r)
                if idx.cmass[c][m - 1] > 0:
                    balls.append((c, float(r), m))
        space._caches[key] = balls
    return space._caches[key]


def _ball_masks(space: DiscreteSpace):
    key = "all_ball_masks"
    if key not in space._caches:
        idx = space.index()
        masks = []
        for c, r, m in _all_candidate_balls(space):
            mask = 0
            for p in idx.order[c][:m]:
                mask |= 1 << int(p)
            masks.append(mask)
        space._caches[key] = masks
    return space._caches[key]


def _pair_sample(space: DiscreteSpace, pair_cap: int, seed: int,
                 doubling_only: bool, beta0: float):
    """Admissible nested ball pairs, exact under the cap, else seeded sample."""
    key = ("rbmo_pairs", pair_cap, seed, doubling_only, beta0)
    cached = space._caches.get(key)
    if cached is not None:
        return cached
    if doubling_only:
        tab = _doubling_table(space, beta0)
        balls = tab.balls
        masks = tab.masks
    else:
        balls = _all_candidate_balls(space)
        masks = _ball_masks(space)
    t = len(balls)
    pairs = []
    sampled = False
    if t * t <= pair_cap:
        for i in range(t):
            mi = masks[i]
            for j in range(t):
                if i != j and (mi & masks[j]) == mi:
                    pairs.append((i, j))
    else:
        sampled = True
        rng = np.random.default_rng([seed, t])
        left = rng.integers(0, t, size=pair_cap)
        right = rng.integers(0, t, size=pair_cap)
        for a, b in zip(left, right):
            i, j = int(a), int(b)
            if i != j and (masks[i] & masks[j]) == masks[i]:
                pairs.append((i, j))
    result = (balls, pairs, sampled)
    space._caches[key] = result
    return result


def rbmo_estimate(space: DiscreteSpace, lam: DominatingFunction, f,
                  params: DoublingParams, pair_cap: int = 100_000,
                  seed: int = 0, doubling_only: bool = False) -> RBMOEstimate:
    """Best constant over the oscillation and pair characterizations.

    doubling_only=True gives the doubling-balls-only variant (plain averages
    over doubling balls, pair bound without the mass-ratio weights).
    """
    f = as_function(space, f)
    idx = space.index()
    csig = _integral_cumsums(space, f)
    kcalc = KCalculator(space, lam)

    # oscillation suprema
    osc_tilde = 0.0
    osc_plain = 0.0
    wit_ball = None
    if not doubling_only:
        for c, r, m, v in ball_oscillations(space, lam, f, params):
            if v > osc_tilde:
                osc_tilde, wit_ball = v, Ball(c, r)
        for c in range(space.point_count):
            fo = f[idx.order[c]]
            mo = idx.mass_sorted[c]
            for r in idx.radii[c]:
                m = idx.prefix(c, r)
                mu_b = idx.cmass[c][m - 1]
                mu6 = idx.mu(c, 6 * r)
                if mu_b <= 0 or mu6 <= 0:
                    continue
                mean = csig[c][m - 1] / mu_b
                v = float(np.abs(fo[:m] - mean) @ mo[:m]) / mu6
                if v > osc_plain:
                    osc_plain, wit_ball = v, Ball(c, float(r))
    else:
        tab = _doubling_table(space, params.beta0)
        for bid, (c, r, m) in enumerate(tab.balls):
            fo = f[idx.order[c]]
            mo = idx.mass_sorted[c]
            mu_b = tab.mus[bid]
            mean = csig[c][m - 1] / mu_b
            v = float(np.abs(fo[:m] - mean) @ mo[:m]) / mu_b
            if v > osc_plain:
                osc_plain, wit_ball = v, Ball(c, float(r))

    # pair supremum
    balls, pairs, sampled = _pair_sample(space, pair_cap, seed,
                                         doubling_only, params.beta0)
    mus = np.empty(len(balls))
    means = np.empty(len(balls))
    mus6 = np.empty(len(balls))
    for bid, (c, r, m) in enumerate(balls):
        mus[bid] = idx.cmass[c][m - 1]
        means[bid] = csig[c][m - 1] / mus[bid]
        mus6[bid] = idx.mu(c, 6 * r)
    pair_sup, wit_pair = 0.0, None
    for i, j in pairs:
        ci, ri, _ = balls[i]
        cj, rj, _ = balls[j]
        kk = kcalc.k(ci, ri, rj)
        if doubling_only:
            denom = kk
        else:
            denom = kk * (mus6[i] / mus[i] + mus6[j] / mus[j])
        v = abs(means[i] - means[j]) / denom
        if v > pair_sup:
            pair_sup = v
            wit_pair = (Ball(ci, ri), Ball(cj, rj))
    value = max(osc_tilde, osc_plain, pair_sup)
    return RBMOEstimate(value=value,
                        components={"osc_tilde": osc_tilde, "osc": osc_plain,
                                    "pairs": pair_sup},
                        witness_ball=wit_ball, witness_pair=wit_pair,
                        sampled=sampled)


def john_nirenberg_check(space: DiscreteSpace, lam: DominatingFunction, f,
                         p: float, rho: float, params: DoublingParams,
                         pair_cap: int = 100_000, seed: int = 0) -> dict:
    """Empirical J-N constant: p-oscillation supremum over the RBMO estimate."""
    if rho <= 1 or p < 1:
        raise SpaceError("need rho > 1 and p >= 1")
    f = as_function(space, f)
    est = rbmo_estimate(space, lam, f, params, pair_cap=pair_cap, seed=seed)
    if est.value == 0:
        return {"vacuous": True, "constant": 0.0}
    idx = space.index()
    n = space.point_count
    sup = 0.0
    for c in range(n):
        fo = f[idx.order[c]]
        mo = idx.mass_sorted[c]
        for r in idx.radii[c]:
            m = idx.prefix(c, r)
            mu_rho = idx.mu(c, rho * r)
            if mu_rho <= 0 or m == 0:
                continue
            # canonical ball number: mean over the doubling hull B~
            rt, nloc = r, space.point_count
            while True:
                mt = idx.prefix(c, rt)
                mu_t = idx.cmass[c][mt - 1] if mt else 0.0
                if mu_t == 0 or idx.mu(c, 6 * rt) <= params.beta0 * mu_t * (1 + 1e-12):
                    break
                if mt >= nloc:
                    break
                rt *= 6.0
            mt = idx.prefix(c, rt)
            f_b = (_integral_cumsums(space, f)[c][mt - 1] / idx.cmass[c][mt - 1]
                   if idx.cmass[c][mt - 1] > 0 else 0.0)
            v = (float(np.abs(fo[:m] - f_b) ** p @ mo[:m]) / mu_rho) ** (1 / p)
            sup = max(sup, v)
    return {"vacuous": False, "constant": sup / est.value,
            "numerator": sup, "rbmo": est.value}


# -- atomic blocks -------------------------------------------------------------

@dataclass
class AtomicBlock:
    host: Ball
    terms: List[Tuple[float, Ball, np.ndarray]]   # (lambda_j, B_j, a_j)
    variant: float                                 # math.inf or p in (1, inf)
    rho: float = 2.0

    def function(self, n_points: int) -> np.ndarray:
        out = np.zeros(n_points)
        for lj, _, aj in self.terms:
            out = out + lj * aj
        return out

    def h_norm_upper(self) -> float:
        return sum(abs(lj) for lj, _, _ in self.terms)


@dataclass
class BlockValidation:
    ok: bool
    h_norm: float
    violations: list       # (term index, description, margin)


def atomic_block_validate(space: DiscreteSpace, lam: DominatingFunction,
                          block: AtomicBlock) -> BlockValidation:
    """Exact check of every block invariant; returns sum |lambda_j| when valid."""
    n = space.point_count
    violations = []
    host_members = set(int(v) for v in block.host.members(space))
    total = block.function(n)
    supp = set(int(i) for i in np.where((total != 0) & (space.masses > 0))[0])
    if not supp <= host_members:
        violations.append((-1, "support escapes host ball", 0.0))
    mean = float(total @ space.masses)
    scale = float(np.abs(total) @ space.masses) + 1e-300
    if abs(mean) > 1e-9 * max(1.0, scale):
        violations.append((-1, "nonzero mean", abs(mean)))
    for j, (lj, bj, aj) in enumerate(block.terms):
        bj_members = set(int(v) for v in bj.members(space))
        if not bj_members <= host_members:
            violations.append((j, "term ball escapes host", 0.0))
        aj_supp = set(int(i) for i in np.where((aj != 0) & (space.masses > 0))[0])
        if not aj_supp <= bj_members:
            violations.append((j, "term support escapes its ball", 0.0))
        k = coefficient_K(space, lam, bj, block.host).value
        mu_rho = space.index().mu(bj.center, block.rho * bj.radius)
        if mu_rho <= 0:
            violations.append((j, "zero-mass dilated ball", 0.0))
            continue
        if math.isinf(block.variant):
            bound = 1.0 / (mu_rho * k)
            norm = float(np.max(np.abs(aj[space.masses > 0]))) if aj_supp else 0.0
        else:
            p = block.variant
            bound = mu_rho ** (1 / p - 1) / k
            norm = float(np.abs(aj) ** p @ space.masses) ** (1 / p)
        if norm > bound * (1 + 1e-9):
            violations.append((j, "size bound violated", norm / bound - 1.0))
    return BlockValidation(ok=not violations, h_norm=block.h_norm_upper(),
                           violations=violations)


def blocks_from_cz(space: DiscreteSpace, lam: DominatingFunction, f,
                   dec: CZDecomposition, p: float,
                   rho: float = 2.0) -> List[AtomicBlock]:
    """Renormalize each bad block of a decomposition into a p-atomic block."""
    f = as_function(space, f)
    idx = space.index()
    kcalc = KCalculator(space, lam)
    out = []
    for i in range(dec.n_blocks):
        host = dec.hulls[i]
        inner = dec.balls[i].dilate(6.0)
        terms = []
        g1 = f * dec.omega[i]
        norm1 = float(np.abs(g1) ** p @ space.masses) ** (1 / p)
        if norm1 > 0:
            k1 = kcalc.k(inner.center, inner.radius, host.radius)
            mu1 = idx.mu(inner.center, rho * inner.radius)
            lam1 = norm1 * mu1 ** (1 - 1 / p) * k1
            terms.append((lam1, inner, g1 / lam1))
        phi = dec.phi(i, space.point_count)
        norm2 = float(np.abs(phi) ** p @ space.masses) ** (1 / p)
        if norm2 > 0:
            k2 = kcalc.k(host.center, host.radius, host.radius)
            mu2 = idx.mu(host.center, rho * host.radius)
            lam2 = norm2 * mu2 ** (1 - 1 / p) * k2
            terms.append((lam2, host, -phi / lam2))
        if terms:
            out.append(AtomicBlock(host=host, terms=terms, variant=p, rho=rho))
    return out


def hardy_from_cz(space: DiscreteSpace, lam: DominatingFunction, f,
                  lambda_level: float, p: float, rho: float = 2.0,
                  beta0: Optional[float] = None) -> Tuple[List[AtomicBlock], float]:
    """CZ decomposition assembled into validated p-atomic blocks.

    Returns the blocks and the sum of their block norms, an upper bound for
    the atomic Hardy norm of the bad part.
    """
    f = as_function(space, f)
    if abs(float(f @ space.masses)) > 1e-9 * (float(np.abs(f) @ space.masses) + 1e-300):
        raise SpaceError("hardy_from_cz requires a mean-zero function")
    dec = cz_decompose(space, lam, f, lambda_level, p=p, beta0=beta0)
    blocks = blocks_from_cz(space, lam, f, dec, p, rho=rho)
    return blocks, sum(b.h_norm_upper() for b in blocks)


def duality_pairing_check(space: DiscreteSpace, lam: DominatingFunction,
                          block: AtomicBlock, g, params: DoublingParams,
                          pair_cap: int = 100_000, seed: int = 0) -> dict:
    """Ratio |int b g dmu| / (|b|_H * rbmo(g)); vacuous on degenerate input."""
    g = as_function(space, g)
    b = block.function(space.point_count)
    h = block.h_norm_upper()
    est = rbmo_estimate(space, lam, g, params, pair_cap=pair_cap, seed=seed)
    if h == 0 or est.value == 0:
        return {"vacuous": True, "ratio": 0.0}
    num = abs(float((b * g) @ space.masses))
    return {"vacuous": False, "ratio": num / (h * est.value),
            "numerator": num, "h_norm": h, "rbmo": est.value}


def chain_inequality_check(space: DiscreteSpace, lam: DominatingFunction,
                           center: int, radii) -> dict:
    """Concentric-chain coefficient inequality on qualifying sub-chains.

    Splits the chain at links with K <= 2; on each maximal qualifying run
    asserts sum of consecutive K <= 2 K(first, last).
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size < 2 or np.any(np.diff(radii) <= 0):
        raise SpaceError("need at least two strictly ascending radii")
    kcalc = KCalculator(space, lam)
    links = [kcalc.k(center, radii[i], radii[i + 1])
             for i in range(radii.size - 1)]
    runs = []
    start = None
    for i, kv in enumerate(links):
        if kv > 2:
            if start is None:
                start = i
        else:
            if start is not None:
                runs.append((start, i))
                start = None
    if start is not None:
        runs.append((start, len(links)))
    results = []
    all_ok = True
    for lo, hi in runs:
        lhs = sum(links[lo:hi])
        rhs = 2 * kcalc.k(center, radii[lo], radii[hi])
        ok = lhs <= rhs * (1 + 1e-12)
        all_ok = all_ok and ok
        results.append({"span": (lo, hi), "lhs": lhs, "rhs": rhs, "ok": ok})
    return {"vacuous": not runs, "runs": results, "passed": all_ok}


def commutator_pointwise_check(space: DiscreteSpace, lam: DominatingFunction,
                               kernel, b, f, p: float, params: DoublingParams,
                               pair_cap: int = 100_000, seed: int = 0) -> dict:
    """Empirical constant for the commutator sharp-maximal domination."""
    from .czop import apply_truncated, commutator_apply, maximal_truncated
    if p <= 1:
        raise SpaceError("need p > 1")
    b = as_function(space, b)
    f = as_function(space, f)
    eps = space.eps_min
    comm = commutator_apply(space, kernel, b, f, eps)
    if np.iscomplexobj(comm):
        num = (sharp_maximal(space, lam, comm.real, params,
                             pair_cap=pair_cap, seed=seed).values
               + sharp_maximal(space, lam, comm.imag, params,
                               pair_cap=pair_cap, seed=seed).values)
    else:
        num = sharp_maximal(space, lam, comm, params,
                            pair_cap=pair_cap, seed=seed).values
    est = rbmo_estimate(space, lam, b, params, pair_cap=pair_cap, seed=seed)
    if est.value == 0:
        return {"vacuous": True, "constant": 0.0}
    tf = apply_truncated(space, kernel, f, eps)
    denom_fn = (maximal_p(space, f, p, rho=5.0).values
                + maximal_p(space, np.abs(tf), p, rho=6.0).values
                + maximal_truncated(space, kernel, f))
    denom = est.value * denom_fn
    ok = denom > 0
    if not np.any(ok):
        return {"vacuous": True, "constant": 0.0}
    ratios = num[ok] / denom[ok]
    return {"vacuous": False, "constant": float(ratios.max()),
            "worst_point": int(np.where(ok)[0][np.argmax(ratios)])}
