"""Singular integral kernels, truncated operators, and empirical checks.

Kernels are stored as full off-diagonal matrices (complex allowed; the
Bergman-type kernel is complex and is applied componentwise, with every
inequality taken on the modulus).  The truncated operator at level eps sums
K(x, y) f(y) mass(y) over d(x, y) >= eps, so it is piecewise constant in
eps between consecutive distances and the maximal truncation is an exact
finite maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .maximal import maximal_noncentered, maximal_p
from .space import (DiscreteSpace, DominatingFunction, SpaceError,
                    MEMBER_RTOL, as_function, validate_upper_doubling)


@dataclass
class Kernel:
    matrix: np.ndarray              # (N, N); diagonal is never read
    holder_delta: float = 1.0       # claimed Hoelder exponent
    size_constant: Optional[float] = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix)
        n = self.matrix.shape[0]
        if self.matrix.shape != (n, n):
            raise SpaceError("kernel matrix must be square")
        off = ~np.eye(n, dtype=bool)
        if not np.all(np.isfinite(self.matrix[off].real)):
            raise SpaceError("kernel must be finite off the diagonal")
        if not 0 < self.holder_delta <= 1:
            raise SpaceError("Hoelder exponent must lie in (0, 1]")


def apply_truncated(space: DiscreteSpace, kernel: Kernel, f,
                    epsilon: float) -> np.ndarray:
    """T_eps f(x) = sum over d(x, y) >= eps of K(x, y) f(y) mass(y)."""
    if epsilon <= 0:
        raise SpaceError("truncation level must be positive")
    f = as_function(space, f)
    weights = f * space.masses
    keep = space.dist >= epsilon * (1 - MEMBER_RTOL)
    mat = np.where(keep, kernel.matrix, 0)
    return mat @ weights


def maximal_truncated(space: DiscreteSpace, kernel: Kernel, f) -> np.ndarray:
    """T_* f(x) = sup over eps > 0 of |T_eps f(x)| (exact finite maximum)."""
    f = as_function(space, f)
    weights = f * space.masses
    n = space.point_count
    idx = space.index()
    out = np.zeros(n)
    for x in range(n):
        order = idx.order[x]
        ds = idx.ds[x]
        contrib = (kernel.matrix[x][order] * weights[order])
        # valid truncation sums start at the first occurrence of each
        # distinct positive distance
        first = np.concatenate(([True], ds[1:] > ds[:-1])) & (ds > 0)
        if not np.any(first):
            continue
        tail = np.cumsum(contrib[::-1])[::-1]
        out[x] = float(np.abs(tail[first]).max())
    return out


def commutator_apply(space: DiscreteSpace, kernel: Kernel, b, f,
                     epsilon: float) -> np.ndarray:
    """[b, T_eps] f = b * T_eps f - T_eps(b f)."""
    b = as_function(space, b)
    f = as_function(space, f)
    return b * apply_truncated(space, kernel, f, epsilon) \
        - apply_truncated(space, kernel, b * f, epsilon)


# -- kernel validators --------------------------------------------------------

def validate_kernel_size(space: DiscreteSpace, kernel: Kernel,
                         lam: DominatingFunction) -> Tuple[float, Optional[tuple]]:
    """Smallest C with |K(x,y)| <= C min{1/lambda(x,d), 1/lambda(y,d)}."""
    n = space.point_count
    c_fit, worst = 0.0, None
    for x in range(n):
        for y in range(n):
            d = space.dist[x, y]
            if y == x or d == 0:
                continue
            bound = max(lam.value(x, d), lam.value(y, d))
            val = abs(kernel.matrix[x, y]) * bound
            if val > c_fit:
                c_fit, worst = float(val), (x, y)
    return c_fit, worst


def validate_kernel_holder(space: DiscreteSpace, kernel: Kernel,
                           lam: DominatingFunction, shrink: float = 0.5,
                           delta: Optional[float] = None,
                           ceiling: Optional[float] = None) -> dict:
    """Fit the regularity constant over admissible triples (x, x', y).

    Admissibility: d(x, x') <= shrink * d(x, y).  Returns the smallest C for
    the requested exponent, the worst triple, and (when a ceiling is given)
    the largest exponent on a grid keeping C below the ceiling.
    """
    if not 0 < shrink <= 1:
        raise SpaceError("shrink must lie in (0, 1]")
    if delta is None:
        delta = kernel.holder_delta
    n = space.point_count
    d = space.dist
    km = kernel.matrix

    def fit(expo):
        c_fit, worst = 0.0, None
        for x in range(n):
            for xp in range(n):
                dxx = d[x, xp]
                if xp == x or dxx == 0:
                    continue
                ok = (d[x] >= dxx / shrink) & (np.arange(n) != x) \
                    & (np.arange(n) != xp) & (d[x] > 0)
                ys = np.where(ok)[0]
                if ys.size == 0:
                    continue
                dxy = d[x, ys]
                lamv = lam.values(x, dxy)
                num = np.abs(km[x, ys] - km[xp, ys]) \
                    + np.abs(km[ys, x] - km[ys, xp])
                denom = dxx ** expo / (dxy ** expo * lamv)
                vals = num / denom
                k = int(np.argmax(vals))
                if vals[k] > c_fit:
                    c_fit, worst = float(vals[k]), (x, xp, int(ys[k]))
        return c_fit, worst

    c_fit, worst = fit(delta)
    report = {"c_fit": c_fit, "delta": delta, "worst_triple": worst,
              "empty": worst is None}
    if ceiling is not None and worst is not None:
        delta_fit = 0.0
        for e in np.linspace(0.05, 1.0, 20):
            c_e, w = fit(float(e))
            if w is not None and c_e <= ceiling:
                delta_fit = float(e)
        report["delta_fit"] = delta_fit
    return report


# -- Bergman-type scenario ----------------------------------------------------

@dataclass
class BergmanConfig:
    dim: int                       # complex dimension n
    m: float                       # kernel exponent
    points: np.ndarray             # (N, dim) complex, 0 < |x| <= 1
    boundary_samples: int = 0      # defaults to 256 * dim
    seed: int = 0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        norms = np.linalg.norm(self.points, axis=1)
        if np.any(norms <= 0) or np.any(norms > 1 + 1e-12):
            raise SpaceError("points must satisfy 0 < |x| <= 1")
        if self.m <= 0:
            raise SpaceError("exponent m must be positive")
        if self.boundary_samples <= 0:
            self.boundary_samples = 256 * self.dim


def bergman_quasi_distance(points: np.ndarray) -> np.ndarray:
    """d(x, y) = ||x| - |y|| + |1 - (x-bar . y) / (|x| |y|)|."""
    norms = np.linalg.norm(points, axis=1)
    inner = np.conj(points) @ points.T
    ang = np.abs(1 - inner / np.outer(norms, norms))
    d = np.abs(norms[:, None] - norms[None, :]) + ang
    np.fill_diagonal(d, 0.0)
    return (d + d.T) / 2


def _boundary_distance(points: np.ndarray, n_samples: int, seed: int) -> np.ndarray:
    """delta(x): quasi-distance to a seeded sample of the unit sphere."""
    dim = points.shape[1]
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(n_samples, dim)) + 1j * rng.normal(size=(n_samples, dim))
    z /= np.linalg.norm(z, axis=1)[:, None]
    norms = np.linalg.norm(points, axis=1)
    inner = np.conj(points) @ z.T
    d = np.abs(norms[:, None] - 1.0) + np.abs(1 - inner / norms[:, None])
    return d.min(axis=1)


def bergman_kernel(config: BergmanConfig):
    """Build (space, lambda, kernel) for the Bergman-type worked example.

    Masses are uniform, rescaled by the largest factor keeping the measure
    dominated by lambda(x, r) = max{delta(x), r}^m on the candidate grid.
    """
    pts = config.points
    n = pts.shape[0]
    dist = bergman_quasi_distance(pts)
    # empirical quasi-triangle constant (looped to keep memory linear in N^2)
    a = 1.0
    for y in range(n):
        rhs = dist[:, y][:, None] + dist[y, :][None, :]
        mask = rhs > 0
        if np.any(mask):
            a = max(a, float((dist[mask] / rhs[mask]).max()))
    space = DiscreteSpace.from_matrix(dist, np.ones(n), quasi_constant=a * (1 + 1e-9))
    floors = _boundary_distance(pts, config.boundary_samples, config.seed)
    lam = DominatingFunction.floored_power(c=1.0, degree=config.m, floors=floors)
    # rescale uniform masses so the upper-doubling domination holds exactly
    idx = space.index()
    worst = 0.0
    for c in range(n):
        radii = idx.radii[c]
        mus = np.array([idx.mu(c, r) for r in radii])
        lv = lam.values(c, radii)
        worst = max(worst, float((mus / lv).max()))
    if not np.isfinite(worst) or worst <= 0:
        raise SpaceError("mass rescaling impossible for this sample")
    # joint rescale (mu -> mu/n, lambda -> lambda * worst/n): domination holds
    # with equality at the worst ball and the total mass is 1 at every sample
    # size, keeping empirical constants comparable across sizes
    lam = DominatingFunction.floored_power(c=worst / n, degree=config.m,
                                           floors=floors)
    space = DiscreteSpace.from_matrix(dist, np.full(n, 1.0 / n),
                                      quasi_constant=a * (1 + 1e-9))
    report = validate_upper_doubling(space, lam)
    assert report.passed, "rescaled Bergman sample must be upper doubling"
    inner = np.conj(pts) @ pts.T
    matrix = (1 - inner) ** (-config.m)
    np.fill_diagonal(matrix, 0.0)
    kernel = Kernel(matrix=matrix, holder_delta=1.0)
    return space, lam, kernel


# -- empirical operator checks -------------------------------------------------

def weak11_check(space: DiscreteSpace, kernel: Kernel, f,
                 lambda_grid) -> dict:
    """lambda * mu{|T f| > lambda} / ||f||_1 per level; max is the constant."""
    f = as_function(space, f)
    l1 = float(np.abs(f) @ space.masses)
    if l1 == 0:
        return {"vacuous": True, "rows": [], "constant": 0.0}
    tf = np.abs(apply_truncated(space, kernel, f, space.eps_min))
    rows, worst = [], 0.0
    for lv in np.asarray(lambda_grid, dtype=float):
        mu_level = float(space.masses[tf > lv].sum())
        ratio = lv * mu_level / l1
        rows.append({"lambda": float(lv), "mu": mu_level, "ratio": ratio})
        worst = max(worst, ratio)
    return {"vacuous": False, "rows": rows, "constant": worst}


def cotlar_check(space: DiscreteSpace, lam: DominatingFunction, kernel: Kernel,
                 f, eta: float) -> dict:
    """Empirical constant in T_* f <= C (M_{eta,6}(T f) + M_(5) f)."""
    if not 0 < eta < 1:
        raise SpaceError("eta must lie in (0, 1)")
    f = as_function(space, f)
    tstar = maximal_truncated(space, kernel, f)
    tf = apply_truncated(space, kernel, f, space.eps_min)
    rhs = maximal_p(space, np.abs(tf), p=eta, rho=6.0).values \
        + maximal_noncentered(space, f, rho=5.0).values
    ok = rhs > 0
    if not np.any(ok):
        return {"vacuous": True, "constant": 0.0}
    ratios = tstar[ok] / rhs[ok]
    return {"vacuous": False, "constant": float(ratios.max()),
            "worst_point": int(np.where(ok)[0][np.argmax(ratios)])}
