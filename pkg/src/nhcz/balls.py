"""Ball calculus: doubling tests and searches, annulus coefficients.

The coefficient K_{B,Q} = 1 + sum over the annulus r_B <= d(x, x_B) <= r_Q
of mass(x) / lambda(x_B, d(x, x_B)) measures how far apart two nested balls
are; K'_{B,Q} is its dyadic-sum variant over the 6^k dilates of B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .space import (DiscreteSpace, DominatingFunction, SpaceError,
                    MEMBER_RTOL)


class ParameterError(ValueError):
    """Doubling-search hypothesis violated."""


@dataclass(frozen=True)
class Ball:
    center: int
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise SpaceError("ball radius must be positive")

    def dilate(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)

    def members(self, space: DiscreteSpace) -> np.ndarray:
        return space.index().members(self.center, self.radius)

    def measure(self, space: DiscreteSpace) -> float:
        return space.index().mu(self.center, self.radius)


def default_beta0(lam: DominatingFunction) -> float:
    """1 + max{C_lambda^(3 log2 6), 6^(3n)} (strict threshold)."""
    return 1.0 + max(lam.c_lambda ** (3 * math.log2(6)), 6.0 ** (3 * lam.degree))


@dataclass
class DoublingParams:
    alpha: float = 6.0
    beta: float = 0.0
    beta0: float = 0.0

    @staticmethod
    def for_lambda(lam: DominatingFunction, alpha: float = 6.0,
                   beta: Optional[float] = None) -> "DoublingParams":
        b0 = default_beta0(lam)
        return DoublingParams(alpha=alpha, beta=b0 if beta is None else beta,
                              beta0=b0)


@dataclass
class CoefficientReport:
    value: float
    n_bq: int                      # number of dyadic steps (K') or annulus points (K)
    terms: list                    # (point or step, contribution)
    ratio_to_prime: Optional[float] = None


def is_doubling(space: DiscreteSpace, B: Ball, alpha: float, beta: float) -> bool:
    """mu(alpha B) <= beta mu(B); vacuously true for zero-mass balls."""
    idx = space.index()
    mu_b = idx.mu(B.center, B.radius)
    if mu_b == 0:
        return True
    return idx.mu(B.center, alpha * B.radius) <= beta * mu_b * (1 + 1e-12)


def smallest_doubling_up(space: DiscreteSpace, lam: DominatingFunction,
                         B: Ball, alpha: float, beta: float) -> Ball:
    """Smallest (alpha, beta)-doubling dilate alpha^j B, j >= 0.

    With alpha = 6 and beta = beta0 this is the B-tilde construction.
    """
    if beta <= lam.c_lambda ** math.log2(alpha):
        raise ParameterError("need beta > C_lambda^(log2 alpha)")
    idx = space.index()
    n = space.point_count
    ball = B
    while True:
        if is_doubling(space, ball, alpha, beta):
            return ball
        if idx.prefix(ball.center, ball.radius) >= n:
            # saturated ball is always doubling; unreachable unless beta <= 1
            return ball
        ball = ball.dilate(alpha)


def largest_doubling_down(space: DiscreteSpace, lam: DominatingFunction,
                          B: Ball, alpha: float, beta: float) -> Optional[Ball]:
    """Largest (alpha, beta)-doubling ball alpha^(-j) B with radius >= eps_min."""
    if beta <= alpha ** lam.degree:
        raise ParameterError("need beta > alpha^n")
    r = B.radius
    eps = space.eps_min
    while r >= eps * (1 - 1e-12):
        ball = Ball(B.center, r)
        if is_doubling(space, ball, alpha, beta):
            return ball
        r /= alpha
    return None


class KCalculator:
    """Annulus-coefficient queries K(center, r_inner, r_outer) in O(log N).

    Precomputes, per center, cumulative sums of mass(x)/lambda(center, d(x))
    over the distance-sorted point order.
    """

    def __init__(self, space: DiscreteSpace, lam: DominatingFunction):
        self.space = space
        self.lam = lam
        self.idx = space.index()
        self._cumw = {}

    def _center_table(self, c: int):
        tab = self._cumw.get(c)
        if tab is None:
            ds = self.idx.ds[c]
            w = np.zeros_like(ds)
            pos = ds > 0
            if np.any(pos):
                w[pos] = self.idx.mass_sorted[c][pos] / self.lam.values(c, ds[pos])
            tab = np.cumsum(w)
            self._cumw[c] = tab
        return tab

    def k(self, center: int, r_inner: float, r_outer: float) -> float:
        if r_outer < r_inner:
            return 1.0
        ds = self.idx.ds[center]
        cum = self._center_table(center)
        lo = int(np.searchsorted(ds, r_inner * (1 - MEMBER_RTOL), side="left"))
        hi = int(np.searchsorted(ds, r_outer * (1 + MEMBER_RTOL), side="right"))
        if hi <= lo:
            return 1.0
        base = cum[lo - 1] if lo > 0 else 0.0
        return float(1.0 + cum[hi - 1] - base)


def _check_containment(space: DiscreteSpace, B: Ball, Q: Ball):
    mb = set(int(i) for i in B.members(space))
    mq = set(int(i) for i in Q.members(space))
    if not mb <= mq:
        raise SpaceError("K coefficient requires B contained in Q")


def coefficient_K(space: DiscreteSpace, lam: DominatingFunction,
                  B: Ball, Q: Ball) -> CoefficientReport:
    """K_{B,Q} with the annulus measured from the center of B."""
    _check_containment(space, B, Q)
    terms = []
    value = 1.0
    for y in range(space.point_count):
        d = space.dist[B.center, y]
        if (d >= B.radius * (1 - MEMBER_RTOL)
                and d <= Q.radius * (1 + MEMBER_RTOL)
                and space.masses[y] > 0):
            contrib = space.masses[y] / lam.value(B.center, d)
            value += contrib
            terms.append((y, contrib))
    return CoefficientReport(value=value, n_bq=len(terms), terms=terms)


def coefficient_Kprime(space: DiscreteSpace, lam: DominatingFunction,
                       B: Ball, Q: Ball) -> CoefficientReport:
    """K'_{B,Q} = 1 + sum_{k=1..N} mu(6^k B) / lambda(x_B, 6^k r_B)."""
    _check_containment(space, B, Q)
    n_bq = 0
    r = B.radius
    while r < Q.radius * (1 - MEMBER_RTOL):
        r *= 6.0
        n_bq += 1
    idx = space.index()
    value = 1.0
    terms = []
    for k in range(1, n_bq + 1):
        rk = B.radius * 6.0 ** k
        contrib = idx.mu(B.center, rk) / lam.value(B.center, rk)
        value += contrib
        terms.append((k, contrib))
    report = CoefficientReport(value=value, n_bq=n_bq, terms=terms)
    if lam.is_homogeneous:
        k_plain = coefficient_K(space, lam, B, Q).value
        report.ratio_to_prime = k_plain / value
    return report
