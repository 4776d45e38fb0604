"""Calderon-Zygmund decomposition at height lambda on a finite space.

f splits into a bounded good part g and mean-zero localized bad blocks
b_i = f * omega_i - phi_i, where the Q_i come from a stopping-time scan over
the candidate radius grid, the overlap weights omega_i ride on the 6Q_i, the
doubling hulls R_i are 108^k-dilates, and the corrections phi_i are
constant-sign indicator multiples solving the block mean equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .balls import Ball, KCalculator, default_beta0, is_doubling
from .covering import finite_overlap_cover
from .space import DiscreteSpace, DominatingFunction, SpaceError, as_function

HULL_ALPHA = 3 * 6 ** 2   # dilation step for the doubling hulls R_i


def hull_beta(lam: DominatingFunction) -> float:
    return lam.c_lambda ** (math.log2(HULL_ALPHA) + 1)


class ProvisoError(ValueError):
    """Level lambda too small for the finite-mass proviso."""


class ConstructionError(RuntimeError):
    """Decomposition step failed; carries a witness."""


@dataclass
class CZDecomposition:
    lambda_level: float
    p: float
    balls: List[Ball]              # Q_i, pairwise disjoint
    hulls: List[Ball]              # R_i, concentric doubling hulls
    omega: np.ndarray              # (n_blocks, N) overlap weights on 6Q_i
    corrections_alpha: np.ndarray  # alpha_i
    corrections_support: List[np.ndarray]  # A_i index arrays
    good: np.ndarray               # g
    blocks: np.ndarray             # (n_blocks, N) bad blocks b_i
    kappa: float
    c1_measured: float
    beta0: float

    @property
    def n_blocks(self) -> int:
        return len(self.balls)

    def phi(self, i: int, n_points: int) -> np.ndarray:
        out = np.zeros(n_points)
        out[self.corrections_support[i]] = self.corrections_alpha[i]
        return out

    def to_dict(self) -> dict:
        return {
            "lambda": self.lambda_level, "p": self.p,
            "balls": [[b.center, b.radius] for b in self.balls],
            "hulls": [[b.center, b.radius] for b in self.hulls],
            "omega": self.omega.tolist(),
            "alpha": self.corrections_alpha.tolist(),
            "supports": [a.tolist() for a in self.corrections_support],
            "good": self.good.tolist(),
            "blocks": self.blocks.tolist(),
            "kappa": self.kappa, "c1": self.c1_measured, "beta0": self.beta0,
        }

    @staticmethod
    def from_dict(d: dict) -> "CZDecomposition":
        return CZDecomposition(
            lambda_level=d["lambda"], p=d["p"],
            balls=[Ball(int(c), float(r)) for c, r in d["balls"]],
            hulls=[Ball(int(c), float(r)) for c, r in d["hulls"]],
            omega=np.asarray(d["omega"], dtype=float),
            corrections_alpha=np.asarray(d["alpha"], dtype=float),
            corrections_support=[np.asarray(a, dtype=int) for a in d["supports"]],
            good=np.asarray(d["good"], dtype=float),
            blocks=np.asarray(d["blocks"], dtype=float),
            kappa=d["kappa"], c1_measured=d["c1"], beta0=d["beta0"],
        )


def _stopping_ball(space: DiscreteSpace, fabs_p: np.ndarray, x: int,
                   lam_p_over_beta0: float) -> Optional[Ball]:
    """Largest grid radius whose threshold condition holds at center x."""
    idx = space.index()
    radii = idx.radii[x]
    cint = np.cumsum(fabs_p[idx.order[x]] * idx.mass_sorted[x])
    best = None
    for r in radii:
        m = idx.prefix(x, r)
        denom = idx.mu(x, 36.0 * r)
        if denom <= 0:
            continue
        if cint[m - 1] / denom > lam_p_over_beta0:
            best = Ball(x, float(r))
    return best


def cz_decompose(space: DiscreteSpace, lam: DominatingFunction, f,
                 lambda_level: float, p: float = 1.0,
                 beta0: Optional[float] = None) -> CZDecomposition:
    """Stopping-time decomposition f = g + sum_i (f omega_i - phi_i)."""
    f = as_function(space, f)
    if lambda_level <= 0 or p < 1:
        raise SpaceError("need lambda > 0 and p >= 1")
    if beta0 is None:
        beta0 = default_beta0(lam)
    fabs_p = np.abs(f) ** p
    norm_pp = float(fabs_p @ space.masses)
    if lambda_level ** p <= beta0 * norm_pp / space.total_mass:
        raise ProvisoError(
            "finite-mass proviso fails: need lambda^p > beta0 ||f||_p^p / ||mu||")
    n = space.point_count
    threshold = lambda_level ** p / beta0

    over = [x for x in range(n)
            if abs(f[x]) > lambda_level and space.masses[x] > 0]
    if not over:
        return CZDecomposition(
            lambda_level=lambda_level, p=p, balls=[], hulls=[],
            omega=np.zeros((0, n)), corrections_alpha=np.zeros(0),
            corrections_support=[], good=f.copy(), blocks=np.zeros((0, n)),
            kappa=0.0, c1_measured=0.0, beta0=beta0)

    candidates = []
    for x in over:
        q = _stopping_ball(space, fabs_p, x, threshold)
        if q is None:
            raise ConstructionError(
                "no stopping ball at point %d (|f|=%g)" % (x, abs(f[x])))
        candidates.append(q)

    cover = finite_overlap_cover(space, candidates)
    balls = [candidates[i] for i in cover.selected]

    # overlap weights on the 6-dilates
    chi = np.zeros((len(balls), n))
    for i, q in enumerate(balls):
        chi[i][q.dilate(6.0).members(space)] = 1.0
    counts = chi.sum(axis=0)
    omega = np.where(counts > 0, chi / np.where(counts > 0, counts, 1.0), 0.0)

    # doubling hulls: smallest (108, C_lambda^(log2 108 + 1))-doubling ball
    # among the 108^k dilates, k >= 1
    hb = hull_beta(lam)
    idx = space.index()
    hulls = []
    for q in balls:
        r = q.radius * HULL_ALPHA
        while not (is_doubling(space, Ball(q.center, r), HULL_ALPHA, hb)
                   or idx.prefix(q.center, r) >= n):
            r *= HULL_ALPHA
        hulls.append(Ball(q.center, float(r)))

    # greedy corrections in ascending hull-radius order
    order = sorted(range(len(balls)), key=lambda i: (hulls[i].radius, i))
    hull_members = [set(int(v) for v in h.members(space)) for h in hulls]
    alpha = np.zeros(len(balls))
    supports: List[np.ndarray] = [np.zeros(0, dtype=int)] * len(balls)
    abs_phi_sum = np.zeros(n)
    c1_measured = 0.0
    for k in order:
        members_k = np.array(sorted(hull_members[k]), dtype=int)
        target = float((f * omega[k]) @ space.masses)
        overlap = [j for j in order[:order.index(k)]
                   if hull_members[j] & hull_members[k]]
        if overlap:
            mu_rk = float(space.masses[members_k].sum())
            s_int = float(abs_phi_sum[members_k] @ space.masses[members_k])
            tau = 2.0 * s_int / mu_rk if mu_rk > 0 else 0.0
            keep = abs_phi_sum[members_k] <= tau * (1 + 1e-12)
            a_k = members_k[keep]
            c1_measured = max(c1_measured, tau / (2 * lambda_level))
        else:
            a_k = members_k
        if target == 0.0:
            supports[k] = a_k
            continue
        mu_a = float(space.masses[a_k].sum())
        if mu_a <= 0:
            raise ConstructionError("zero-mass correction support at block %d" % k)
        alpha[k] = target / mu_a
        supports[k] = a_k
        abs_phi_sum[a_k] += abs(alpha[k])

    kappa = float(abs_phi_sum.max() / lambda_level)
    covered = counts > 0
    phi_total = np.zeros(n)
    blocks = np.zeros((len(balls), n))
    for i in range(len(balls)):
        phi_i = np.zeros(n)
        phi_i[supports[i]] = alpha[i]
        phi_total += phi_i
        blocks[i] = f * omega[i] - phi_i
    good = f * (~covered) + phi_total
    return CZDecomposition(
        lambda_level=lambda_level, p=p, balls=balls, hulls=hulls, omega=omega,
        corrections_alpha=alpha, corrections_support=supports, good=good,
        blocks=blocks, kappa=kappa, c1_measured=c1_measured, beta0=beta0)


def verify_cz(space: DiscreteSpace, lam: DominatingFunction, f,
              dec: CZDecomposition, rho: float = 2.0) -> dict:
    """Independent re-check of every decomposition postcondition."""
    f = as_function(space, f)
    idx = space.index()
    n = space.point_count
    rel = lambda a, b: abs(a - b) <= 1e-9 * max(1.0, abs(a), abs(b))
    report = {"checks": {}, "constants": {}, "witnesses": {}}
    ok = report["checks"]
    fabs_p = np.abs(f) ** dec.p
    threshold = dec.lambda_level ** dec.p / dec.beta0

    # disjointness of the Q_i
    seen = set()
    disjoint = True
    for q in dec.balls:
        mem = set(int(v) for v in q.members(space))
        if mem & seen:
            disjoint = False
        seen |= mem
    ok["disjoint"] = disjoint

    # cz1: each selected ball beats the threshold
    cz1 = True
    for i, q in enumerate(dec.balls):
        mem = q.members(space)
        val = float(fabs_p[mem] @ space.masses[mem]) / idx.mu(q.center, 36 * q.radius)
        if not val > threshold:
            cz1 = False
            report["witnesses"]["cz1"] = i
    ok["cz1"] = cz1

    # cz2: every strictly larger grid radius fails the threshold
    cz2 = True
    for i, q in enumerate(dec.balls):
        cint = np.cumsum(fabs_p[idx.order[q.center]] * idx.mass_sorted[q.center])
        for r in idx.radii[q.center]:
            if r <= q.radius * (1 + 1e-12):
                continue
            m = idx.prefix(q.center, r)
            denom = idx.mu(q.center, 36.0 * r)
            if denom > 0 and cint[m - 1] / denom > threshold * (1 + 1e-12):
                cz2 = False
                report["witnesses"]["cz2"] = (i, float(r))
    ok["cz2"] = cz2

    # cz3: |f| <= lambda at positive-mass points off the union of 6Q_i
    covered = np.zeros(n, dtype=bool)
    for q in dec.balls:
        covered[q.dilate(6.0).members(space)] = True
    outside = (~covered) & (space.masses > 0)
    ok["cz3"] = bool(np.all(np.abs(f[outside]) <= dec.lambda_level * (1 + 1e-12)))

    # omega: partition of unity on the union, zero off it
    sums = dec.omega.sum(axis=0)
    ok["omega_partition"] = bool(
        np.all(np.abs(sums[covered] - 1.0) <= 1e-12)
        and np.all(sums[~covered] == 0.0))

    # supports and signs of the corrections
    supp_ok = True
    for i, h in enumerate(dec.hulls):
        hull_mem = set(int(v) for v in h.members(space))
        if not set(int(v) for v in dec.corrections_support[i]) <= hull_mem:
            supp_ok = False
    ok["phi_support"] = supp_ok              # constant sign is structural

    # cz4: correction mean equation per block
    cz4 = True
    for i in range(dec.n_blocks):
        lhs = float(space.masses[dec.corrections_support[i]].sum()
                    * dec.corrections_alpha[i])
        rhs = float((f * dec.omega[i]) @ space.masses)
        if not rel(lhs, rhs):
            cz4 = False
            report["witnesses"]["cz4"] = (i, lhs, rhs)
    ok["cz4"] = cz4

    # cz5 with the recorded kappa
    abs_phi = np.zeros(n)
    for i in range(dec.n_blocks):
        abs_phi[dec.corrections_support[i]] += abs(dec.corrections_alpha[i])
    ok["cz5"] = bool(np.all(abs_phi <= dec.kappa * dec.lambda_level * (1 + 1e-9)))

    # reconstruction and block mean-zero
    recon = dec.good + dec.blocks.sum(axis=0) if dec.n_blocks else dec.good
    ok["reconstruction"] = bool(
        np.all(np.abs(recon - f) <= 1e-9 * np.maximum(1.0, np.abs(f))))
    ok["blocks_mean_zero"] = all(
        rel(float(dec.blocks[i] @ space.masses), 0.0)
        for i in range(dec.n_blocks))

    # fitted constants cz6 / cz6.1 and the hull coefficients
    kcalc = KCalculator(space, lam)
    c6 = 0.0
    k_qr_max = 1.0
    for i in range(dec.n_blocks):
        denom = float(np.abs(f * dec.omega[i]) ** dec.p @ space.masses)
        mu_r = dec.hulls[i].measure(space)
        if denom > 0:
            if dec.p == 1:
                c6 = max(c6, abs(dec.corrections_alpha[i]) * mu_r / denom)
            else:
                pprime = dec.p / (dec.p - 1)
                phi_p = (abs(dec.corrections_alpha[i])
                         * float(space.masses[dec.corrections_support[i]].sum())
                         ** (1 / dec.p))
                c6 = max(c6, phi_p * mu_r ** (1 / pprime)
                         * dec.lambda_level ** (dec.p - 1) / denom)
        k_qr_max = max(k_qr_max, kcalc.k(dec.balls[i].center,
                                         dec.balls[i].radius,
                                         dec.hulls[i].radius))
    report["constants"]["c6_fit"] = c6
    report["constants"]["K_QR_max"] = k_qr_max
    report["constants"]["kappa"] = dec.kappa
    report["passed"] = all(v for v in ok.values())
    return report
