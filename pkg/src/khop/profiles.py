"""DP state language: inside/outside distance profiles and their compressed form.

Full profiles hold, per hop-level ``i`` and portal ``d``, the (rounded) distance
from the portal to the closest point of hop-level at most ``i``.  The
compressed form keeps, per distance level ``j`` and portal group, the minimum
hop-level reachable within ``gamma_j`` of some portal of the group.  Compressed
values are small ints with ``NONE`` (127) standing for "no such level"; NONE
orders above every hop-level.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Optional

import numpy as np

from .dissection import GroupingSchedule, LevelSchedule, portal_offsets

NONE = 127
# slack when snapping a float distance onto a threshold
TOL = 1e-9


class ProfileContractError(ValueError):
    pass


@dataclass(frozen=True)
class Layout:
    """Flat variable layout of one profile kind over a box's distance levels."""

    gamma: np.ndarray  # thresholds for levels 0..levels-1
    grouping: GroupingSchedule
    offsets: np.ndarray  # portal positions relative to box origin

    @property
    def levels(self) -> int:
        return len(self.gamma)

    @property
    def n_portals(self) -> int:
        return 4 * self.grouping.m

    @cached_property
    def starts(self) -> np.ndarray:
        P = self.n_portals
        return np.concatenate([
            j * P + np.arange(0, P, self.grouping.width(j)) for j in range(self.levels)
        ])

    @property
    def size(self) -> int:
        return len(self.starts)

    @cached_property
    def level_offsets(self) -> np.ndarray:
        counts = [self.grouping.group_count(j) for j in range(self.levels)]
        return np.concatenate([[0], np.cumsum(counts)])

    @cached_property
    def expand(self) -> np.ndarray:
        """(levels, portals) -> flat index of the variable governing that portal."""
        P = self.n_portals
        d = np.arange(P)
        return np.stack([
            self.level_offsets[j] + d // self.grouping.width(j) for j in range(self.levels)
        ])

    @cached_property
    def span(self) -> np.ndarray:
        """(levels, portals): largest distance from a portal to another in its group."""
        P = self.n_portals
        pos = self.offsets
        dd = np.hypot(pos[:, None, 0] - pos[None, :, 0], pos[:, None, 1] - pos[None, :, 1])
        out = np.zeros((self.levels, P))
        for j in range(self.levels):
            w = self.grouping.width(j)
            if w == 1:
                continue
            grp = np.arange(P) // w
            same = grp[:, None] == grp[None, :]
            out[j] = np.where(same, dd, 0.0).max(axis=1)
        return out

    @cached_property
    def reach(self) -> np.ndarray:
        """Certified radius when level j of a portal's group holds a hop-level."""
        return self.gamma[:, None] + self.span

    @cached_property
    def parent_var(self) -> np.ndarray:
        """For each variable at level j>=1, the variables at level j-1 it covers."""
        child, parent = [], []
        for j in range(1, self.levels):
            w_prev, w = self.grouping.width(j - 1), self.grouping.width(j)
            for h in range(self.grouping.group_count(j - 1)):
                child.append(self.level_offsets[j - 1] + h)
                parent.append(self.level_offsets[j] + (h * w_prev) // w)
        return np.asarray(child, dtype=np.int64), np.asarray(parent, dtype=np.int64)


@dataclass(frozen=True)
class BoxSchedule:
    """Level + grouping schedules of one box side, with both profile layouts."""

    levels: LevelSchedule
    beta: int

    @cached_property
    def inside(self) -> Layout:
        n = self.levels.alpha_in + 1
        return Layout(np.asarray(self.levels.gamma[:n]),
                      GroupingSchedule(self.levels.m, self.beta, n),
                      portal_offsets(self.levels.side, self.levels.m))

    @cached_property
    def outside(self) -> Layout:
        n = self.levels.alpha_out + 1
        return Layout(np.asarray(self.levels.gamma[:n]),
                      GroupingSchedule(self.levels.m, self.beta, n),
                      portal_offsets(self.levels.side, self.levels.m))

    def layout(self, kind: str) -> Layout:
        if kind == "inside":
            return self.inside
        if kind == "outside":
            return self.outside
        raise ValueError(f"unknown profile kind {kind!r}")


@dataclass(frozen=True)
class FullProfile:
    """``inside[i, d]`` / ``outside[i, d]``: distance from portal d to level <= i."""

    inside: np.ndarray
    outside: np.ndarray

    @property
    def k(self) -> int:
        return self.inside.shape[0]


@dataclass(frozen=True)
class CompressedProfile:
    ilevel: np.ndarray
    olevel: np.ndarray

    def key(self) -> tuple[bytes, bytes]:
        return self.ilevel.tobytes(), self.olevel.tobytes()

    def __eq__(self, other):
        if not isinstance(other, CompressedProfile):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


@dataclass
class DPEntry:
    profile: CompressedProfile
    cost: float
    backref: Optional[Any] = None

    def __post_init__(self):
        if np.isfinite(self.cost) and self.backref is None:
            raise ProfileContractError("finite-cost entry without a backref")


def round_up_distance(d: float, schedule: LevelSchedule, kind: str = "inside") -> float:
    if d < 0:
        raise ValueError("distance must be non-negative")
    g = schedule.thresholds(kind)
    j = int(np.searchsorted(g, d - TOL, side="left"))
    return float(g[j]) if j < len(g) else float("inf")


def ladder_index(dist: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Index of the smallest threshold >= dist; len(gamma) when it overflows."""
    return np.searchsorted(gamma, np.asarray(dist) - TOL, side="left")


def compress_indices(r: np.ndarray, layout: Layout) -> np.ndarray:
    """Compress ladder indices ``r[..., i, d]`` (hop-level x portal) into flat keys."""
    r = np.minimum.accumulate(r, axis=-2)
    k = r.shape[-2]
    js = np.arange(layout.levels)
    hl = (r[..., :, None, :] > js[:, None]).sum(axis=-3)
    lead = hl.shape[:-2]
    flat = hl.reshape(-1, hl.shape[-2] * hl.shape[-1])
    key = np.minimum.reduceat(flat, layout.starts, axis=1)
    key[key >= k] = NONE
    return key.astype(np.int8).reshape(*lead, layout.size)


def compress_distances(dist: np.ndarray, layout: Layout) -> np.ndarray:
    return compress_indices(ladder_index(dist, layout.gamma), layout)


def decode(key: np.ndarray, layout: Layout, k: int, sound: bool = False) -> np.ndarray:
    """Per-portal distances implied by compressed key(s) ``key[..., var]``.

    With ``sound`` the group spread is added, so each value is a certified
    upper bound on the distance from that portal to a point of the level.
    """
    C = key[..., layout.expand]
    radius = layout.reach if sound else np.broadcast_to(layout.gamma[:, None], C.shape[-2:])
    lv = np.arange(k)[:, None, None]
    return np.where(C[..., None, :, :] <= lv, radius, np.inf).min(axis=-2)


def is_monotone(key: np.ndarray, layout: Layout) -> bool:
    child, parent = layout.parent_var
    return bool(np.all(key[..., parent] <= key[..., child]))


def monotone_keys(layout: Layout, k: int) -> np.ndarray:
    """Every lineage-monotone key of a layout (values 0..k-1 or NONE)."""
    values = list(range(k)) + [NONE]
    child, parent = layout.parent_var
    kids: dict[int, list[int]] = {}
    for c, p in zip(child.tolist(), parent.tolist()):
        kids.setdefault(p, []).append(c)
    out: list[list[int]] = []
    cur = [0] * layout.size

    def rec(v: int) -> None:
        if v == layout.size:
            out.append(cur.copy())
            return
        bound = min((cur[c] for c in kids.get(v, ())), default=NONE)
        for val in values:
            if val > bound:
                break
            cur[v] = val
            rec(v + 1)

    rec(0)
    return np.asarray(out, dtype=np.int8).reshape(-1, layout.size)


def compress(full: FullProfile, schedule: BoxSchedule) -> CompressedProfile:
    return CompressedProfile(
        compress_distances(full.inside, schedule.inside),
        compress_distances(full.outside, schedule.outside),
    )


def decompress(comp: CompressedProfile, schedule: BoxSchedule, k: int) -> FullProfile:
    for key, layout, name in ((comp.ilevel, schedule.inside, "ilevel"),
                              (comp.olevel, schedule.outside, "olevel")):
        if key.shape != (layout.size,):
            raise ProfileContractError(f"{name} has {key.shape[0]} variables, layout has {layout.size}")
        if not is_monotone(key, layout):
            raise ProfileContractError(f"{name} is not monotone along group lineage")
    return FullProfile(decode(comp.ilevel, schedule.inside, k),
                       decode(comp.olevel, schedule.outside, k))


def key_leq(a: np.ndarray, b: np.ndarray) -> bool:
    return bool(np.all(a <= b))


def dominates(e1: DPEntry, e2: DPEntry) -> bool:
    """e1 is no costlier, promises at least as much inside, assumes no more outside."""
    p1, p2 = e1.profile, e2.profile
    if p1.ilevel.shape != p2.ilevel.shape or p1.olevel.shape != p2.olevel.shape:
        raise ProfileContractError("entries of different profile shapes")
    return (e1.cost <= e2.cost
            and key_leq(p1.ilevel, p2.ilevel)
            and key_leq(p2.olevel, p1.olevel))


def profile_variable_count(m: int, k: int, beta: int, levels: int) -> tuple[int, int]:
    """(compressed, uncompressed) variable counts for one profile kind."""
    g = GroupingSchedule(m, beta, levels)
    return g.variable_count, 4 * m * k
