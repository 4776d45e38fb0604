"""Covering algorithms on finite spaces.

Two selections from a ball family: the Vitali-type greedy giving disjoint
balls whose 5r-dilates cover the family, and the finite-overlap variant
whose 6r-dilates cover while no selected 6-dilate is nested in another.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .balls import Ball
from .space import DiscreteSpace, SpaceError


@dataclass
class CoverSelection:
    selected: List[int]            # indices into the input family
    dilation: float
    overlap_profile: np.ndarray    # per point: count of selected dilated balls

    def selected_balls(self, family: Sequence[Ball]) -> List[Ball]:
        return [family[i] for i in self.selected]


def _dilation_for(space: DiscreteSpace, metric_dilation: float) -> float:
    a = space.quasi_constant
    if a <= 1.0:
        return metric_dilation
    # containment computation for quasi-metrics: a rejected ball meeting a
    # selected ball of larger radius lies inside the (2A^2 + 3A)-dilate
    return 2 * a * a + 3 * a


def _greedy_disjoint(space: DiscreteSpace, family: Sequence[Ball]) -> List[int]:
    order = sorted(range(len(family)),
                   key=lambda i: (-family[i].radius, i))
    chosen: List[int] = []
    chosen_members: List[frozenset] = []
    for i in order:
        mem = frozenset(int(p) for p in family[i].members(space))
        if all(not (mem & other) for other in chosen_members):
            chosen.append(i)
            chosen_members.append(mem)
    return sorted(chosen)


def _profile(space: DiscreteSpace, family: Sequence[Ball],
             selected: Sequence[int], dilation: float) -> np.ndarray:
    prof = np.zeros(space.point_count, dtype=int)
    for i in selected:
        prof[family[i].dilate(dilation).members(space)] += 1
    return prof


def _covers(space: DiscreteSpace, family: Sequence[Ball],
            selected: Sequence[int], dilation: float) -> bool:
    covered = np.zeros(space.point_count, dtype=bool)
    for i in selected:
        covered[family[i].dilate(dilation).members(space)] = True
    for b in family:
        if not covered[b.members(space)].all():
            return False
    return True


def vitali_cover(space: DiscreteSpace, family: Sequence[Ball]) -> CoverSelection:
    """Greedy radius-descending disjoint selection; 5r-dilates cover."""
    if not family:
        raise SpaceError("empty ball family")
    selected = _greedy_disjoint(space, family)
    dilation = _dilation_for(space, 5.0)
    return CoverSelection(selected=selected, dilation=dilation,
                          overlap_profile=_profile(space, family, selected, dilation))


def finite_overlap_cover(space: DiscreteSpace,
                         family: Sequence[Ball]) -> CoverSelection:
    """Disjoint selection with 6r-dilates covering and nested dilates pruned.

    After the greedy pass, selected balls whose 6-dilate member sets are
    nested are pruned (smaller dilate dropped); dropped balls are re-admitted
    in drop order if the covering property broke.
    """
    if not family:
        raise SpaceError("empty ball family")
    selected = _greedy_disjoint(space, family)
    dilation = _dilation_for(space, 6.0)

    def dmembers(i):
        return frozenset(int(p) for p in family[i].dilate(dilation).members(space))

    dropped: List[int] = []
    changed = True
    while changed:
        changed = False
        mems = {i: dmembers(i) for i in selected}
        for a in list(selected):
            for b in list(selected):
                if a == b or a not in mems or b not in mems:
                    continue
                ma, mb = mems[a], mems[b]
                if ma <= mb or mb <= ma:
                    if len(ma) < len(mb):
                        drop = a
                    elif len(mb) < len(ma):
                        drop = b
                    else:
                        drop = max(a, b)
                    selected.remove(drop)
                    mems.pop(drop)
                    dropped.append(drop)
                    changed = True
    # repair: re-admit dropped balls while coverage is broken
    while dropped and not _covers(space, family, selected, dilation):
        selected.append(dropped.pop(0))
        selected.sort()
    return CoverSelection(selected=selected, dilation=dilation,
                          overlap_profile=_profile(space, family, selected, dilation))
