"""Shifted quadtree dissection, portals and distance-level schedules.

The dissection root is a square of side ``2L`` whose lower-left corner sits
at ``(-a, -b)``, so it always covers ``[0, L]^2``.  Cutting it recursively
reproduces the cyclically shifted grid: a point's cell at side ``s <= L`` is
the cell of ``(x + a) mod L``.  Real Euclidean geometry is kept everywhere,
which wrapping alone would not give.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional

import numpy as np

from .geom_instance import NormalizedInstance

SIDES = ("bottom", "right", "top", "left")


@dataclass(frozen=True)
class Shift:
    a: int
    b: int

    def check(self, L: int) -> None:
        if not (0 <= self.a < L and 0 <= self.b < L):
            raise ValueError(f"shift ({self.a},{self.b}) outside [0,{L})")


@dataclass(eq=False)
class BoxNode:
    level: int
    origin: tuple[int, int]
    side: int
    points: list[int]
    children: list["BoxNode"] = field(default_factory=list)
    index: int = -1

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self) -> Iterator["BoxNode"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=-1)


@dataclass(frozen=True)
class Portal:
    box: BoxNode
    side: str
    offset_index: int
    position: tuple[float, float]


@dataclass(frozen=True)
class LevelSchedule:
    side: float
    m: int
    delta: float
    gamma: tuple[float, ...]
    alpha_in: int
    alpha_out: int

    def thresholds(self, kind: str) -> np.ndarray:
        top = self.alpha_in if kind == "inside" else self.alpha_out
        return np.asarray(self.gamma[: top + 1])


@dataclass(frozen=True)
class GroupingSchedule:
    """Portal groups per distance level; level j uses groups of width 2^(j // beta)."""

    m: int
    beta: int
    levels: int

    def width(self, j: int) -> int:
        return min(1 << (j // self.beta), 4 * self.m)

    def group_count(self, j: int) -> int:
        return -(-4 * self.m // self.width(j))

    @property
    def bands(self) -> list[tuple[range, int, int]]:
        """(level range, group width, group count) for each band."""
        out = []
        f = 0
        while f * self.beta < self.levels:
            lo = f * self.beta
            w = self.width(lo)
            if w >= 4 * self.m:
                out.append((range(lo, self.levels), w, 1))
                break
            out.append((range(lo, min((f + 1) * self.beta, self.levels)), w, self.group_count(lo)))
            f += 1
        return out

    def groups(self, j: int) -> list[range]:
        w, n = self.width(j), 4 * self.m
        return [range(s, min(s + w, n)) for s in range(0, n, w)]

    @property
    def variable_count(self) -> int:
        return sum(self.group_count(j) for j in range(self.levels))


def shift_coordinate(X: int, a: int, L: int) -> int:
    return (X + a) % L


def build_dissection(inst: NormalizedInstance, shift: Shift) -> BoxNode:
    L = inst.L
    shift.check(L)
    pts = inst.grid_points
    root = BoxNode(0, (-shift.a, -shift.b), 2 * L, list(range(inst.n)))
    counter = 0
    stack = [root]
    while stack:
        box = stack.pop()
        box.index = counter
        counter += 1
        if box.side == 1 or len(box.points) <= 1:
            continue
        half = box.side // 2
        ox, oy = box.origin
        quads: list[list[int]] = [[], [], [], []]
        for p in box.points:
            qx = int(pts[p, 0] - ox >= half)
            qy = int(pts[p, 1] - oy >= half)
            quads[qx + 2 * qy].append(p)
        box.children = [
            BoxNode(box.level + 1, (ox + half * (q % 2), oy + half * (q // 2)), half, quads[q])
            for q in range(4)
        ]
        stack.extend(reversed(box.children))
    return root


@lru_cache(maxsize=None)
def portal_offsets(side: float, m: int) -> np.ndarray:
    """Portal positions relative to the box origin, cyclic from bottom-left."""
    step = side / m
    t = np.arange(m) * step
    out = np.concatenate([
        np.stack([t, np.zeros(m)], axis=1),
        np.stack([np.full(m, side), t], axis=1),
        np.stack([side - t, np.full(m, side)], axis=1),
        np.stack([np.zeros(m), side - t], axis=1),
    ])
    out.setflags(write=False)
    return out


def portal_positions(box: BoxNode, m: int) -> np.ndarray:
    return portal_offsets(box.side, m) + np.asarray(box.origin, dtype=float)


def portals_of(box: BoxNode, m: int) -> list[Portal]:
    if m < 1:
        raise ValueError("m must be >= 1")
    pos = portal_positions(box, m)
    return [
        Portal(box, SIDES[d // m], d % m, (float(pos[d, 0]), float(pos[d, 1])))
        for d in range(4 * m)
    ]


def level_schedule(
    l: float,
    m: int,
    delta: float,
    L: float,
    inside_reach: float = 2 * math.sqrt(2),
    outside_reach: float = 2.0,
) -> LevelSchedule:
    """Thresholds 0, l/m, (1+delta) l/m, ... up to the outside cap.

    ``alpha_in`` is the first level reaching ``inside_reach * l`` and
    ``alpha_out`` the first reaching ``outside_reach * L``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    need_in = inside_reach * l
    need_out = outside_reach * L
    gamma = [0.0]
    alpha_in = alpha_out = None
    j = 0
    while alpha_in is None or alpha_out is None:
        if alpha_in is None and gamma[j] >= need_in:
            alpha_in = j
        if alpha_out is None and gamma[j] >= need_out:
            alpha_out = j
        if alpha_in is None or alpha_out is None:
            j += 1
            gamma.append((1 + delta) ** (j - 1) * l / m)
    return LevelSchedule(l, m, delta, tuple(gamma), alpha_in, alpha_out)


def beta_for(delta: float) -> int:
    target = 2.0 / delta
    beta = 1
    while (1 + delta) ** beta < target:
        beta += 1
    return beta


def grouping_schedule(m: int, delta: float, levels: int) -> GroupingSchedule:
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    return GroupingSchedule(m, beta_for(delta), levels)


def dissection_lines(L: int, shift: Shift, min_side: int = 1) -> dict[str, list[int]]:
    """Cut lines of the shifted dissection that fall strictly inside (0, L)."""
    xs: set[int] = set()
    ys: set[int] = set()
    s = L
    while s >= min_side:
        xs.update(x for x in range(-shift.a, L, s) if 0 < x < L)
        ys.update(y for y in range(-shift.b, L, s) if 0 < y < L)
        s //= 2
    return {"x": sorted(xs), "y": sorted(ys)}


def box_count(root: BoxNode) -> int:
    return sum(1 for _ in root.walk())


def find_leaf(root: BoxNode, point: int) -> Optional[BoxNode]:
    for box in root.walk():
        if box.is_leaf and point in box.points:
            return box
    return None
