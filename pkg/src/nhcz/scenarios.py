"""Reproducible instance families for the verification harness.

Every scenario regenerates bit-identically from (kind, size, seed) and ships
with a dominating function passing validate_upper_doubling. cluster-spike is
the deliberately non-doubling family: mass piles up at an accumulation point,
so the ball-doubling property mu(2B) <= C mu(B) fails on a recorded witness
while the upper-doubling domination still holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .space import (DiscreteSpace, DominatingFunction, SpaceError,
                    fit_floored_power, validate_upper_doubling)

KINDS = ("line3-canonical", "grid", "cluster-spike", "power-floor-line",
         "bergman-sample")


@dataclass
class Scenario:
    kind: str
    size: int
    seed: int
    space: DiscreteSpace
    lam: DominatingFunction
    extras: dict = field(default_factory=dict)   # kernel, witnesses, params

    @property
    def scenario_id(self) -> str:
        return "%s-n%d-s%d" % (self.kind, self.size, self.seed)


def _fit_power(space: DiscreteSpace, degree: float) -> DominatingFunction:
    """Homogeneous power law with the smallest scale dominating the measure."""
    idx = space.index()
    worst = 0.0
    for c in range(space.point_count):
        radii = idx.radii[c]
        mus = np.array([idx.mu(c, r) for r in radii])
        worst = max(worst, float((mus / radii ** degree).max()))
    return DominatingFunction.power_law(c=worst, degree=degree)


def _line3() -> Scenario:
    space = DiscreteSpace.from_coords([0.0, 1.0, 3.0], np.ones(3))
    lam = DominatingFunction.floored_power(c=4.0, degree=1.0,
                                           floors=np.full(3, 0.25))
    lam.c_lambda = 2.0
    return Scenario(kind="line3-canonical", size=3, seed=0,
                    space=space, lam=lam)


def _grid(size: int, seed: int) -> Scenario:
    rng = np.random.default_rng([seed, size, 1])
    side = int(math.ceil(math.sqrt(size)))
    xs, ys = np.meshgrid(np.arange(side, dtype=float),
                         np.arange(side, dtype=float))
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1)[:size]
    pts = pts + rng.uniform(-0.2, 0.2, size=pts.shape)
    masses = rng.uniform(0.5, 1.5, size=size)
    space = DiscreteSpace.from_coords(pts, masses)
    lam = fit_floored_power(space, degree=2.0)
    return Scenario(kind="grid", size=size, seed=seed, space=space, lam=lam)


def _cluster_spike(size: int, seed: int) -> Scenario:
    """Geometric accumulation toward 0 with a heavy atom at the apex."""
    rng = np.random.default_rng([seed, size, 2])
    n_tail = max(size // 4, 2)
    tail = 4.0 ** (-np.arange(1, n_tail + 1, dtype=float))
    bulk = np.sort(rng.uniform(1.0, 3.0, size=size - n_tail - 1))
    pts = np.concatenate([[0.0], tail, bulk])
    masses = np.concatenate([[float(n_tail) * 8.0],
                             2.0 ** (-np.arange(1, n_tail + 1, dtype=float)),
                             rng.uniform(0.5, 1.5, size=size - n_tail - 1)])
    space = DiscreteSpace.from_coords(pts, masses)
    lam = fit_floored_power(space, degree=1.0)
    witness = non_doubling_witness(space)
    return Scenario(kind="cluster-spike", size=size, seed=seed, space=space,
                    lam=lam, extras={"non_doubling_witness": witness})


def _power_floor_line(size: int, seed: int) -> Scenario:
    rng = np.random.default_rng([seed, size, 3])
    pts = np.arange(size, dtype=float) + rng.uniform(-0.3, 0.3, size=size)
    masses = rng.uniform(0.5, 1.5, size=size)
    space = DiscreteSpace.from_coords(pts, masses)
    lam = _fit_power(space, degree=1.0)
    return Scenario(kind="power-floor-line", size=size, seed=seed,
                    space=space, lam=lam)


def _bergman(size: int, seed: int) -> Scenario:
    from .czop import BergmanConfig, bergman_kernel
    rng = np.random.default_rng([seed, size, 4])
    r = np.sqrt(rng.uniform(0.01, 1.0, size=size))
    theta = rng.uniform(0.0, 2 * np.pi, size=size)
    pts = r * np.exp(1j * theta)
    config = BergmanConfig(dim=1, m=1.0, points=pts, seed=seed)
    space, lam, kernel = bergman_kernel(config)
    return Scenario(kind="bergman-sample", size=size, seed=seed,
                    space=space, lam=lam, extras={"kernel": kernel})


def non_doubling_witness(space: DiscreteSpace):
    """Ball maximizing mu(2B)/mu(B); None when every ratio is bounded by 2."""
    idx = space.index()
    best = None
    best_ratio = 0.0
    for c in range(space.point_count):
        for r in idx.radii[c]:
            mu = idx.mu(c, r)
            if mu <= 0:
                continue
            ratio = idx.mu(c, 2 * r) / mu
            if ratio > best_ratio:
                best_ratio, best = ratio, (c, float(r), float(ratio))
    return best


def generate(kind: str, size: int, seed: int) -> Scenario:
    if size < 1:
        raise SpaceError("size must be at least 1")
    if kind == "line3-canonical":
        return _line3()
    if kind == "grid":
        return _grid(size, seed)
    if kind == "cluster-spike":
        if size < 8:
            raise SpaceError("cluster-spike needs size >= 8")
        return _cluster_spike(size, seed)
    if kind == "power-floor-line":
        return _power_floor_line(size, seed)
    if kind == "bergman-sample":
        return _bergman(size, seed)
    raise SpaceError("unknown scenario kind %r" % kind)


def sample_function(scn: Scenario, seed: int = 0,
                  mean_zero: bool = False) -> np.ndarray:
    """Seeded rough test function on the scenario's points."""
    rng = np.random.default_rng([seed, scn.size, 5])
    n = scn.space.point_count
    f = rng.normal(size=n)
    spikes = rng.integers(0, n, size=max(1, n // 16))
    f[spikes] += rng.uniform(5.0, 15.0, size=spikes.size)
    if mean_zero:
        w = scn.space.masses
        f = f - float(f @ w) / float(w.sum())
    return f
