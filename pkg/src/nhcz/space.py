"""Discrete model of a non-homogeneous metric measure space.

A space is a finite point set with a (quasi-)distance matrix and a
nonnegative mass per point; the measure is finite and atomic.  The
dominating function lambda(x, r) encodes the upper-doubling structure:
it is increasing in r, doubles with constant C_lambda, and bounds the
measure of every ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

# Relative slack for closed-ball membership so that dilated radii computed
# in floating point still capture points at the exact boundary distance.
MEMBER_RTOL = 1e-12

# Largest dilation factor used anywhere in the pipeline (3 * 6**2, needed
# by the doubling hulls of the CZ decomposition).  The epsilon radius of
# the candidate grid is chosen so that a singleton ball stays a singleton
# under every dilation up to this factor.
DILATION_MAX = 3 * 6 ** 2


class SpaceError(ValueError):
    """Invalid space data or violated operation precondition."""


@dataclass
class DiscreteSpace:
    dist: np.ndarray          # (N, N) symmetric, zero diagonal
    masses: np.ndarray        # (N,) nonnegative, positive total
    quasi_constant: float = 1.0
    points: Optional[np.ndarray] = None   # coordinates when built from them
    _caches: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.dist = np.asarray(self.dist, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        n = self.dist.shape[0]
        if self.dist.shape != (n, n):
            raise SpaceError("distance matrix must be square")
        if self.masses.shape != (n,):
            raise SpaceError("masses must align with the point count")
        if np.any(self.masses < 0) or not np.all(np.isfinite(self.masses)):
            raise SpaceError("masses must be finite and nonnegative")
        if self.masses.sum() <= 0:
            raise SpaceError("total mass must be positive")
        if self.quasi_constant < 1.0:
            raise SpaceError("quasi constant must be >= 1")
        if np.any(self.dist < 0) or not np.all(np.isfinite(self.dist)):
            raise SpaceError("distances must be finite and nonnegative")
        if np.any(np.abs(np.diagonal(self.dist)) > 0):
            raise SpaceError("distance diagonal must be zero")
        if not np.allclose(self.dist, self.dist.T, rtol=0, atol=0):
            raise SpaceError("distance matrix must be symmetric")
        self._check_quasi_triangle()

    # -- construction -----------------------------------------------------

    @staticmethod
    def from_coords(points, masses, quasi_constant: float = 1.0) -> "DiscreteSpace":
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff ** 2).sum(axis=2))
        np.fill_diagonal(dist, 0.0)
        dist = np.minimum(dist, dist.T)
        return DiscreteSpace(dist=dist, masses=np.asarray(masses, dtype=float),
                             quasi_constant=quasi_constant, points=pts)

    @staticmethod
    def from_matrix(dist, masses, quasi_constant: float = 1.0) -> "DiscreteSpace":
        return DiscreteSpace(dist=np.asarray(dist, dtype=float),
                             masses=np.asarray(masses, dtype=float),
                             quasi_constant=quasi_constant)

    def _check_quasi_triangle(self, sample_threshold: int = 64, samples: int = 20000):
        n = self.point_count
        a = self.quasi_constant * (1 + 1e-9)
        if n <= sample_threshold:
            d = self.dist
            lhs = d[:, None, :]                       # d(x, z) over (x, y, z)
            rhs = d[:, :, None] + d[None, :, :]       # d(x, y) + d(y, z)
            if np.any(lhs > a * rhs + 1e-15):
                raise SpaceError("quasi triangle inequality fails for A=%g"
                                 % self.quasi_constant)
        else:
            rng = np.random.default_rng(0xD157)
            idx = rng.integers(0, n, size=(samples, 3))
            x, y, z = idx[:, 0], idx[:, 1], idx[:, 2]
            lhs = self.dist[x, z]
            rhs = self.dist[x, y] + self.dist[y, z]
            if np.any(lhs > a * rhs + 1e-15):
                raise SpaceError("quasi triangle inequality fails on sample")

    # -- basic queries -----------------------------------------------------

    @property
    def point_count(self) -> int:
        return self.dist.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def min_positive_distance(self) -> float:
        key = "d_min_pos"
        if key not in self._caches:
            pos = self.dist[self.dist > 0]
            self._caches[key] = float(pos.min()) if pos.size else 0.0
        return self._caches[key]

    @property
    def eps_min(self) -> float:
        """Radius below every positive distance; singleton-safe under dilation."""
        d = self.min_positive_distance
        return d / (2 * DILATION_MAX) if d > 0 else 1.0

    def index(self) -> "SpaceIndex":
        if "index" not in self._caches:
            self._caches["index"] = SpaceIndex(self)
        return self._caches["index"]


class SpaceIndex:
    """Per-center sorted-distance tables for fast ball queries.

    For every center c the points are sorted by distance; closed balls are
    prefixes of that order, so measures and integrals over balls reduce to
    cumulative sums.
    """

    def __init__(self, space: DiscreteSpace):
        self.space = space
        n = space.point_count
        self.order = np.argsort(space.dist, axis=1, kind="stable")
        self.ds = np.take_along_axis(space.dist, self.order, axis=1)
        mass_sorted = space.masses[self.order]
        self.cmass = np.cumsum(mass_sorted, axis=1)
        self.mass_sorted = mass_sorted
        # candidate radii per center: eps_min then each distinct positive distance
        self.radii = []
        eps = space.eps_min
        for c in range(n):
            pos = np.unique(self.ds[c][self.ds[c] > 0])
            if pos.size:
                self.radii.append(np.concatenate(([eps], pos)))
            else:
                self.radii.append(np.array([eps]))

    def prefix(self, center: int, radius: float) -> int:
        """Number of points within the closed ball B(center, radius)."""
        if radius < 0:
            return 0
        r = radius * (1 + MEMBER_RTOL)
        return int(np.searchsorted(self.ds[center], r, side="right"))

    def mu(self, center: int, radius: float) -> float:
        m = self.prefix(center, radius)
        return float(self.cmass[center][m - 1]) if m else 0.0

    def members(self, center: int, radius: float) -> np.ndarray:
        m = self.prefix(center, radius)
        return self.order[center][:m]


# -- operations ------------------------------------------------------------

def ball_members(space: DiscreteSpace, center: int, radius: float) -> frozenset:
    """Closed ball {y : d(center, y) <= radius}; always contains the center."""
    if not 0 <= center < space.point_count:
        raise SpaceError("center index out of range")
    if radius < 0:
        raise SpaceError("radius must be nonnegative")
    return frozenset(int(i) for i in space.index().members(center, radius))


def measure(space: DiscreteSpace, members) -> float:
    idx = np.fromiter((int(i) for i in members), dtype=int,
                      count=len(members) if hasattr(members, "__len__") else -1)
    if idx.size == 0:
        return 0.0
    if idx.min() < 0 or idx.max() >= space.point_count:
        raise SpaceError("member index out of range")
    return float(space.masses[idx].sum())


def candidate_radii(space: DiscreteSpace, center: int) -> np.ndarray:
    """Ascending radii realizing every distinct closed ball at this center."""
    if not 0 <= center < space.point_count:
        raise SpaceError("center index out of range")
    return space.index().radii[center].copy()


def as_function(space: DiscreteSpace, values) -> np.ndarray:
    f = np.asarray(values, dtype=float)
    if f.shape != (space.point_count,):
        raise SpaceError("function length must equal the point count")
    if not np.all(np.isfinite(f)):
        raise SpaceError("function values must be finite")
    return f


# -- dominating functions ---------------------------------------------------

@dataclass
class DominatingFunction:
    """lambda(x, r): increasing and doubling in r, dominating mu(B(x, r))."""

    kind: str                      # "power" | "floored" | "custom"
    c: float = 1.0
    degree: float = 1.0            # doubling order n
    floors: Optional[np.ndarray] = None
    func: Optional[Callable[[int, np.ndarray], np.ndarray]] = None
    c_lambda: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("power", "floored", "custom"):
            raise SpaceError("unknown dominating function kind %r" % self.kind)
        if self.kind != "custom" and (self.c <= 0 or self.degree <= 0):
            raise SpaceError("scale and degree must be positive")
        if self.kind == "floored":
            self.floors = np.asarray(self.floors, dtype=float)
            if np.any(self.floors < 0):
                raise SpaceError("floors must be nonnegative")
        if self.c_lambda is None:
            self.c_lambda = 2.0 ** self.degree
        if self.c_lambda <= 1.0:
            raise SpaceError("C_lambda must exceed 1")

    @staticmethod
    def power_law(c: float, degree: float) -> "DominatingFunction":
        return DominatingFunction(kind="power", c=c, degree=degree)

    @staticmethod
    def floored_power(c: float, degree: float, floors) -> "DominatingFunction":
        return DominatingFunction(kind="floored", c=c, degree=degree, floors=floors)

    @staticmethod
    def custom(func, c_lambda: float, degree: float) -> "DominatingFunction":
        return DominatingFunction(kind="custom", func=func, degree=degree,
                                  c_lambda=c_lambda)

    @property
    def is_homogeneous(self) -> bool:
        """True when lambda(x, a r) = a^degree * lambda(x, r)."""
        return self.kind == "power"

    def values(self, x: int, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == "power":
            return self.c * r ** self.degree
        if self.kind == "floored":
            return self.c * np.maximum(self.floors[x], r) ** self.degree
        return np.asarray(self.func(x, r), dtype=float)

    def value(self, x: int, r: float) -> float:
        return float(self.values(x, np.array([r]))[0])


def fit_floored_power(space: DiscreteSpace, degree: float = 1.0,
                      floors=None) -> DominatingFunction:
    """Floored power law with the smallest scale passing upper doubling.

    Floors default to half the distance to the nearest distinct point
    (eps_min where no such point exists).
    """
    idx = space.index()
    n = space.point_count
    if floors is None:
        floors = np.empty(n)
        for c in range(n):
            pos = idx.ds[c][idx.ds[c] > 0]
            floors[c] = pos.min() / 2 if pos.size else space.eps_min
    floors = np.asarray(floors, dtype=float)
    worst = 0.0
    for c in range(n):
        radii = idx.radii[c]
        mus = np.array([idx.mu(c, r) for r in radii])
        lam0 = np.maximum(floors[c], radii) ** degree
        worst = max(worst, float((mus / lam0).max()))
    return DominatingFunction.floored_power(c=worst, degree=degree, floors=floors)


# -- validators --------------------------------------------------------------

@dataclass
class ValidationReport:
    passed: bool
    properties: dict            # name -> (ok, witness or constant)
    worst_ratio: float          # max mu(B(x, r)) / lambda(x, r) on the grid
    worst_witness: tuple        # (center, radius, mu, lambda)


def validate_upper_doubling(space: DiscreteSpace,
                            lam: DominatingFunction) -> ValidationReport:
    """Check positivity, monotonicity, doubling and domination on the grid."""
    idx = space.index()
    props = {}
    worst_ratio, worst_witness = 0.0, (0, 0.0, 0.0, 0.0)
    mono_ok = pos_ok = doub_ok = dom_ok = True
    mono_wit = pos_wit = doub_wit = dom_wit = None
    for c in range(space.point_count):
        radii = idx.radii[c]
        lv = lam.values(c, radii)
        if np.any(lv <= 0):
            pos_ok, pos_wit = False, (c, float(radii[np.argmin(lv)]))
        if np.any(np.diff(lv) < -1e-15 * np.abs(lv[:-1])):
            k = int(np.where(np.diff(lv) < 0)[0][0])
            mono_ok, mono_wit = False, (c, float(radii[k]))
        lv2 = lam.values(c, 2 * radii)
        bad = lv2 > lam.c_lambda * lv * (1 + 1e-12)
        if np.any(bad):
            k = int(np.where(bad)[0][0])
            doub_ok, doub_wit = False, (c, float(radii[k]))
        mus = np.array([idx.mu(c, r) for r in radii])
        ratios = np.where(lv > 0, mus / np.where(lv > 0, lv, 1.0), np.inf)
        k = int(np.argmax(ratios))
        if ratios[k] > worst_ratio:
            worst_ratio = float(ratios[k])
            worst_witness = (c, float(radii[k]), float(mus[k]), float(lv[k]))
        if np.any(mus > lv * (1 + 1e-12)):
            k = int(np.where(mus > lv * (1 + 1e-12))[0][0])
            dom_ok = False
            dom_wit = (c, float(radii[k]), float(mus[k]), float(lv[k]))
    props["positivity"] = (pos_ok, pos_wit)
    props["monotone_in_r"] = (mono_ok, mono_wit)
    props["doubling_in_r"] = (doub_ok, doub_wit)
    props["domination"] = (dom_ok, dom_wit)
    # property (v): comparability lambda(x, r) ~ lambda(y, r) for d(x, y) <= r
    comp = 1.0
    for c in range(space.point_count):
        for y in range(space.point_count):
            d = space.dist[c, y]
            if y == c or d == 0:
                continue
            lx = lam.value(c, d)
            ly = lam.value(y, d)
            if lx > 0 and ly > 0:
                comp = max(comp, lx / ly, ly / lx)
    props["comparability_constant"] = (True, comp)
    passed = pos_ok and mono_ok and doub_ok and dom_ok
    return ValidationReport(passed=passed, properties=props,
                            worst_ratio=worst_ratio, worst_witness=worst_witness)


def validate_geometric_doubling(space: DiscreteSpace,
                                max_radii_per_center: Optional[int] = None):
    """Greedy half-radius cover count over the whole grid.

    Returns (N_est, n_est) where n_est = log2(N_est).
    """
    idx = space.index()
    n_est_max = 1
    for c in range(space.point_count):
        radii = idx.radii[c]
        if max_radii_per_center is not None and radii.size > max_radii_per_center:
            sel = np.linspace(0, radii.size - 1, max_radii_per_center).astype(int)
            radii = radii[np.unique(sel)]
        for r in radii:
            members = idx.members(c, r)
            if members.size <= 1:
                continue
            uncovered = set(int(i) for i in members)
            count = 0
            while uncovered:
                best, best_cov = None, -1
                for p in members:
                    cov = sum(1 for q in uncovered
                              if space.dist[p, q] <= (r / 2) * (1 + MEMBER_RTOL))
                    if cov > best_cov:
                        best, best_cov = int(p), cov
                uncovered -= {q for q in uncovered
                              if space.dist[best, q] <= (r / 2) * (1 + MEMBER_RTOL)}
                count += 1
            n_est_max = max(n_est_max, count)
    return n_est_max, math.log2(n_est_max)
