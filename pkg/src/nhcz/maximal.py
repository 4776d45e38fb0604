"""Maximal operators over the candidate-ball grid.

All suprema range over closed balls centered at data points with radii on
the candidate grid; on a finite space with closed balls this enumeration
realizes every distinct ball, so the suprema are exact.  The sharp-operator
pair supremum is exact up to a per-point pair cap and falls back to a
seeded, geometry-only sample above it (the sample never depends on the
function, so pointwise dominations survive sampling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .balls import Ball, DoublingParams, KCalculator
from .space import DiscreteSpace, DominatingFunction, SpaceError, as_function


@dataclass
class MaximalResult:
    values: np.ndarray
    witnesses: list                 # per point: Ball or None
    tag: str
    sampled: bool = False


def _center_scan(space: DiscreteSpace, ball_values, out, wit):
    """Fold per-center, per-radius ball values into per-point suprema.

    ball_values(c) must yield (radii, prefixes, vals) with radii ascending.
    A point at sorted position i (w.r.t. center c) belongs to every ball with
    prefix > i, so its candidate value is the suffix max of vals.
    """
    idx = space.index()
    for c in range(space.point_count):
        radii, prefixes, vals = ball_values(c)
        if len(radii) == 0:
            continue
        # suffix max with arg tracking
        suff = np.empty(len(vals))
        arg = np.empty(len(vals), dtype=int)
        best, bestk = -np.inf, -1
        for k in range(len(vals) - 1, -1, -1):
            if vals[k] > best:
                best, bestk = vals[k], k
            suff[k] = best
            arg[k] = bestk
        order = idx.order[c]
        ds = idx.ds[c]
        # first radius index covering sorted position i
        ki = np.searchsorted(radii * (1 + 1e-12), ds, side="left")
        for i in range(len(order)):
            k = ki[i]
            if k >= len(vals):
                continue
            p = order[i]
            if suff[k] > out[p]:
                out[p] = suff[k]
                wit[p] = Ball(c, float(radii[arg[k]]))


def _integral_cumsums(space: DiscreteSpace, g: np.ndarray):
    """Per-center cumulative sums of g * mass in distance order."""
    idx = space.index()
    return np.cumsum(g[idx.order] * idx.mass_sorted, axis=1)


def maximal_noncentered(space: DiscreteSpace, f, rho: float = 1.0) -> MaximalResult:
    """M_(rho) f(x) = sup_{Q ni x} (1/mu(rho Q)) int_Q |f| dmu."""
    if rho < 1:
        raise SpaceError("rho must be >= 1")
    f = as_function(space, f)
    idx = space.index()
    cint = _integral_cumsums(space, np.abs(f))
    out = np.full(space.point_count, -np.inf)
    wit = [None] * space.point_count

    def ball_values(c):
        radii = idx.radii[c]
        prefixes = np.array([idx.prefix(c, r) for r in radii])
        vals = np.empty(len(radii))
        for k, r in enumerate(radii):
            denom = idx.mu(c, rho * r)
            num = cint[c][prefixes[k] - 1] if prefixes[k] else 0.0
            vals[k] = num / denom if denom > 0 else -np.inf
        return radii, prefixes, vals

    _center_scan(space, ball_values, out, wit)
    return MaximalResult(values=np.maximum(out, 0.0), witnesses=wit,
                         tag="M_(%g)" % rho)


def maximal_p(space: DiscreteSpace, f, p: float, rho: float = 1.0) -> MaximalResult:
    """M_{p,rho} f = sup_Q ((1/mu(rho Q)) int_Q |f|^p)^{1/p}.

    p in (0, 1) is accepted for the Cotlar check.
    """
    if p <= 0:
        raise SpaceError("p must be positive")
    base = maximal_noncentered(space, np.abs(as_function(space, f)) ** p, rho=rho)
    return MaximalResult(values=base.values ** (1.0 / p), witnesses=base.witnesses,
                         tag="M_{%g,%g}" % (p, rho))


def doubling_flags(space: DiscreteSpace, beta0: float):
    """Per center: boolean array over candidate radii, (6, beta0)-doubling."""
    key = ("doubling_flags", beta0)
    if key not in space._caches:
        idx = space.index()
        flags = []
        for c in range(space.point_count):
            radii = idx.radii[c]
            mus = np.array([idx.mu(c, r) for r in radii])
            mus6 = np.array([idx.mu(c, 6 * r) for r in radii])
            flags.append((mus == 0) | (mus6 <= beta0 * mus * (1 + 1e-12)))
        space._caches[key] = flags
    return space._caches[key]


def maximal_doubling(space: DiscreteSpace, f, params: DoublingParams) -> MaximalResult:
    """N f(x): sup over (6, beta0)-doubling balls of the plain average."""
    f = as_function(space, f)
    idx = space.index()
    cint = _integral_cumsums(space, np.abs(f))
    flags = doubling_flags(space, params.beta0)
    out = np.full(space.point_count, -np.inf)
    wit = [None] * space.point_count

    def ball_values(c):
        radii = idx.radii[c]
        vals = np.full(len(radii), -np.inf)
        for k, r in enumerate(radii):
            if not flags[c][k]:
                continue
            m = idx.prefix(c, r)
            denom = idx.cmass[c][m - 1] if m else 0.0
            if denom > 0:
                vals[k] = cint[c][m - 1] / denom
        return radii, np.array([]), vals

    _center_scan(space, ball_values, out, wit)
    assert all(w is not None for w in wit), "whole-space ball must be doubling"
    return MaximalResult(values=np.maximum(out, 0.0), witnesses=wit, tag="N")


# -- sharp maximal ------------------------------------------------------------

@dataclass
class _DoublingBallTable:
    """Geometry-only table of doubling candidate balls and per-point pairs."""
    balls: List[Tuple[int, float, int]]       # (center, radius, prefix)
    masks: List[int]                          # member bitmask per ball
    mus: np.ndarray
    point_balls: List[np.ndarray]             # ball ids containing each point
    pair_samples: dict = field(default_factory=dict)


def _doubling_table(space: DiscreteSpace, beta0: float) -> _DoublingBallTable:
    key = ("doubling_table", beta0)
    tab = space._caches.get(key)
    if tab is not None:
        return tab
    idx = space.index()
    flags = doubling_flags(space, beta0)
    balls, masks, mus = [], [], []
    per_point: List[list] = [[] for _ in range(space.point_count)]
    for c in range(space.point_count):
        radii = idx.radii[c]
        for k, r in enumerate(radii):
            if not flags[c][k]:
                continue
            m = idx.prefix(c, r)
            mu = idx.cmass[c][m - 1] if m else 0.0
            if mu <= 0:
                continue
            bid = len(balls)
            members = idx.order[c][:m]
            mask = 0
            for p in members:
                mask |= 1 << int(p)
                per_point[int(p)].append(bid)
            balls.append((c, float(r), m))
            masks.append(mask)
            mus.append(mu)
    tab = _DoublingBallTable(balls=balls, masks=masks, mus=np.array(mus),
                             point_balls=[np.array(v, dtype=int) for v in per_point])
    space._caches[key] = tab
    return tab


def _point_pairs(tab: _DoublingBallTable, x: int, pair_cap: int, seed: int):
    """Admissible (Q, R) id pairs at x: Q subset R, both doubling, x in Q.

    Exact when the raw pair count fits under pair_cap, else a seeded sample.
    Depends only on geometry, never on the function being measured.
    """
    key = (x, pair_cap, seed)
    cached = tab.pair_samples.get(key)
    if cached is not None:
        return cached
    ids = tab.point_balls[x]
    t = len(ids)
    pairs = []
    sampled = False
    if t * t <= pair_cap:
        for i in ids:
            mi = tab.masks[i]
            for j in ids:
                if i != j and (mi & tab.masks[j]) == mi:
                    pairs.append((i, j))
    else:
        sampled = True
        rng = np.random.default_rng([seed, x])
        left = rng.integers(0, t, size=pair_cap)
        right = rng.integers(0, t, size=pair_cap)
        for a, b in zip(left, right):
            i, j = int(ids[a]), int(ids[b])
            if i != j and (tab.masks[i] & tab.masks[j]) == tab.masks[i]:
                pairs.append((i, j))
    tab.pair_samples[key] = (pairs, sampled)
    return pairs, sampled


def ball_oscillations(space: DiscreteSpace, lam: DominatingFunction, f,
                      params: DoublingParams):
    """Per candidate ball B: (1/mu(6B)) int_B |f - m_{B~} f| dmu.

    Yields (center, radius, prefix, value); the backbone of both the sharp
    maximal operator and the RBMO oscillation supremum.
    """
    f = as_function(space, f)
    idx = space.index()
    n = space.point_count
    csig = _integral_cumsums(space, f)
    for c in range(n):
        radii = idx.radii[c]
        fo = f[idx.order[c]]
        mo = idx.mass_sorted[c]
        for r in radii:
            m = idx.prefix(c, r)
            mu6 = idx.mu(c, 6 * r)
            if mu6 <= 0 or m == 0:
                continue
            # B-tilde: smallest (6, beta0)-doubling dilate
            rt = r
            while True:
                mt = idx.prefix(c, rt)
                mu_t = idx.cmass[c][mt - 1] if mt else 0.0
                mu_t6 = idx.mu(c, 6 * rt)
                if mu_t == 0 or mu_t6 <= params.beta0 * mu_t * (1 + 1e-12):
                    break
                if mt >= n:
                    break
                rt *= 6.0
            mt = idx.prefix(c, rt)
            mean_t = (csig[c][mt - 1] / idx.cmass[c][mt - 1]
                      if mt and idx.cmass[c][mt - 1] > 0 else 0.0)
            integral = float(np.abs(fo[:m] - mean_t) @ mo[:m])
            yield c, float(r), m, integral / mu6


def sharp_maximal(space: DiscreteSpace, lam: DominatingFunction, f,
                  params: DoublingParams, pair_cap: int = 100_000,
                  seed: int = 0) -> MaximalResult:
    """M# f: oscillation term plus the doubling-pair mean-difference term."""
    f = as_function(space, f)
    idx = space.index()
    out = np.full(space.point_count, -np.inf)
    wit = [None] * space.point_count

    # term 1: exact over all candidate balls
    per_center = {}
    for c, r, m, v in ball_oscillations(space, lam, f, params):
        per_center.setdefault(c, []).append((r, m, v))

    def ball_values(c):
        entries = per_center.get(c, [])
        radii = np.array([e[0] for e in entries])
        vals = np.array([e[2] for e in entries])
        return radii, None, vals

    _center_scan(space, ball_values, out, wit)

    # term 2: doubling pairs
    tab = _doubling_table(space, params.beta0)
    csig = _integral_cumsums(space, f)
    means = np.empty(len(tab.balls))
    for bid, (c, r, m) in enumerate(tab.balls):
        means[bid] = csig[c][m - 1] / tab.mus[bid]
    kcalc = KCalculator(space, lam)
    kcache = {}
    any_sampled = False
    term2 = np.zeros(space.point_count)
    for x in range(space.point_count):
        pairs, sampled = _point_pairs(tab, x, pair_cap, seed)
        any_sampled = any_sampled or sampled
        best = 0.0
        for i, j in pairs:
            ci, ri, _ = tab.balls[i]
            cj, rj, _ = tab.balls[j]
            kk = kcache.get((i, j))
            if kk is None:
                # annulus bounds use the nominal radii even when containment
                # is a member-set fact (quasi-metric corner case)
                kk = kcalc.k(ci, ri, rj)
                kcache[(i, j)] = kk
            v = abs(means[i] - means[j]) / kk
            if v > best:
                best = v
        term2[x] = best
    values = np.maximum(out, 0.0) + term2
    return MaximalResult(values=values, witnesses=wit, tag="M#",
                         sampled=any_sampled)


@dataclass
class GoodLambdaParams:
    epsilon: float
    delta: float
    nu: float
    lambda_grid: np.ndarray

    def __post_init__(self):
        if self.epsilon <= 0 or self.delta <= 0 or not (0 < self.nu < 1):
            raise SpaceError("invalid good-lambda parameters")
        self.lambda_grid = np.asarray(self.lambda_grid, dtype=float)
        if np.any(self.lambda_grid <= 0):
            raise SpaceError("lambda grid must be positive")


def good_lambda_check(space: DiscreteSpace, lam: DominatingFunction, f,
                      gparams: GoodLambdaParams, params: DoublingParams,
                      pair_cap: int = 100_000, seed: int = 0) -> dict:
    """Both sides of the good-lambda inequality per level, with best nu."""
    f = as_function(space, f)
    if abs(float(f @ space.masses)) > 1e-9 * float(np.abs(f) @ space.masses + 1e-300):
        raise SpaceError("good-lambda check requires a mean-zero function")
    nf = maximal_doubling(space, f, params).values
    sf = sharp_maximal(space, lam, f, params, pair_cap=pair_cap, seed=seed).values
    rows = []
    worst = 0.0
    for lv in gparams.lambda_grid:
        left_set = (nf > (1 + gparams.epsilon) * lv) & (sf <= gparams.delta * lv)
        right_set = nf > lv
        left = float(space.masses[left_set].sum())
        right = float(space.masses[right_set].sum())
        best_nu = left / right if right > 0 else (0.0 if left == 0 else math.inf)
        rows.append({"lambda": float(lv), "left": left, "right": right,
                     "best_nu": best_nu})
        if right > 0:
            worst = max(worst, best_nu)
    return {"rows": rows, "worst_ratio": worst,
            "holds_at_nu": worst <= gparams.nu}
