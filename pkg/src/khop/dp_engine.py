"""Approximation scheme: DP over a randomly shifted quadtree with compressed profiles.

Every box table maps (outside key, inside key) to the cheapest way of
connecting the box's points.  The outside key is what the box may assume
about points beyond its walls; the inside key is what it promises to the rest
of the tree.  Tables are computed top-down with memoization: a child's
outside key is derived (tightly) from its siblings' inside keys and the
parent's outside key, so only reachable states are ever materialized.  The
``full_enum`` mode instead builds every box table extensionally over all
monotone outside keys; it exists as an oracle for micro instances.

All distances are certified upper bounds, so the DP cost of a level
assignment always covers the cost of the tree extracted from it.
"""

from __future__ import annotations

import itertools
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import profiles as pf
from .dissection import (BoxNode, Shift, beta_for, build_dissection, level_schedule,
                         portal_positions)
from .geom_instance import NormalizedInstance
from .profiles import NONE, BoxSchedule
from .reference_solvers import HopTree, InfeasibleLevels, extract_by_levels

Key = bytes


class ResourceLimitError(RuntimeError):
    pass


class DPContractError(ValueError):
    pass


def default_delta(eps: float) -> float:
    if eps >= 1:
        return 1.0
    return min(1.0, eps / (2 * math.log2(1 / eps)))


def default_m(L: int, eps: float) -> int:
    return max(1, math.ceil(math.log2(L) / eps)) if L > 1 else 1


@dataclass(frozen=True)
class PtasConfig:
    eps: float = 0.5
    delta: Optional[float] = None
    m: Optional[int] = None
    shifts: int = 1
    seed: int = 0
    full_enum: bool = False
    prune: bool = True
    entry_cap: int = 500_000
    inside_reach: float = 2 * math.sqrt(2)
    # relative to the side of the dissection root (2L)
    outside_reach: float = 2.0

    def __post_init__(self):
        if not 0 < self.eps <= 1:
            raise ValueError("eps must lie in (0, 1]")
        if self.delta is not None and not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.m is not None and self.m < 1:
            raise ValueError("m must be >= 1")
        if self.shifts < 1:
            raise ValueError("shifts must be >= 1")

    def resolve(self, L: int) -> tuple[float, int]:
        delta = self.delta if self.delta is not None else default_delta(self.eps)
        m = self.m if self.m is not None else default_m(L, self.eps)
        return delta, m


@dataclass
class ShiftRecord:
    a: int
    b: int
    dp_cost: float
    extracted_cost: float
    levels: tuple[int, ...]
    counters: dict


@dataclass
class PtasResult:
    dp_cost: float
    extracted_tree: Optional[HopTree]
    extracted_cost: float
    shifts: list[ShiftRecord] = field(default_factory=list)
    best_shift: int = 0

    @property
    def counters(self) -> dict:
        return self.shifts[self.best_shift].counters if self.shifts else {}


@dataclass
class _Box:
    node: BoxNode
    sched: BoxSchedule
    portals: np.ndarray
    children: list["_Box"]


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])


def _spread(values: np.ndarray, D: np.ndarray) -> np.ndarray:
    """values (k, P_src) over source portals, D (P_tgt, P_src) -> (k, P_tgt)."""
    return (values[:, None, :] + D[None]).min(axis=2)


class ShiftDP:
    """DP tables for one shifted dissection of one instance."""

    def __init__(self, inst: NormalizedInstance, shift: Shift, cfg: PtasConfig):
        self.inst = inst
        self.shift = shift
        self.cfg = cfg
        self.delta, self.m = cfg.resolve(inst.L)
        self.beta = beta_for(self.delta)
        self.k = max(1, min(inst.k, inst.n - 1))
        self.root_side = 2 * inst.L
        self.pts = inst.grid_points.astype(float)
        self._sched: dict[int, BoxSchedule] = {}
        self.tree = build_dissection(inst, shift)
        self.root = self._wrap(self.tree)
        self.boxes = {b.node.index: b for b in self._walk(self.root)}
        self.memo: dict[tuple[int, Key], dict[Key, tuple[float, tuple]]] = {}
        self.entries_per_box: dict[int, int] = defaultdict(int)
        self._real: dict[int, list[Key]] = {}
        self._parent_key: dict[tuple, Key] = {}
        self._sv_in: dict[tuple[int, Key], np.ndarray] = {}
        self._sv_out: dict[tuple[int, Key], np.ndarray] = {}
        self._contrib: dict[tuple[int, Key, int], np.ndarray] = {}
        self._dist: dict[tuple[int, int], np.ndarray] = {}

    # -- structure -----------------------------------------------------------

    def schedule(self, side: int) -> BoxSchedule:
        s = self._sched.get(side)
        if s is None:
            lv = level_schedule(side, self.m, self.delta, self.root_side,
                                self.cfg.inside_reach, self.cfg.outside_reach)
            s = self._sched[side] = BoxSchedule(lv, self.beta)
        return s

    def _wrap(self, node: BoxNode) -> _Box:
        return _Box(node, self.schedule(node.side), portal_positions(node, self.m),
                    [self._wrap(c) for c in node.children])

    def _walk(self, box: _Box):
        yield box
        for c in box.children:
            yield from self._walk(c)

    def dist(self, a: _Box, b: _Box) -> np.ndarray:
        key = (a.node.index, b.node.index)
        D = self._dist.get(key)
        if D is None:
            D = self._dist[key] = _pairwise(a.portals, b.portals)
        return D

    def none_key(self, box: _Box, kind: str) -> Key:
        return np.full(box.sched.layout(kind).size, NONE, dtype=np.int8).tobytes()

    def is_root_leaf(self, box: _Box) -> bool:
        return self.inst.root_index in box.node.points

    # -- decoding with caches -------------------------------------------------

    def sv_inside(self, box: _Box, key: Key) -> np.ndarray:
        ck = (box.node.index, key)
        v = self._sv_in.get(ck)
        if v is None:
            v = self._sv_in[ck] = pf.decode(np.frombuffer(key, dtype=np.int8),
                                            box.sched.inside, self.k, sound=True)
        return v

    def sv_outside(self, box: _Box, key: Key) -> np.ndarray:
        ck = (box.node.index, key)
        v = self._sv_out.get(ck)
        if v is None:
            v = self._sv_out[ck] = pf.decode(np.frombuffer(key, dtype=np.int8),
                                             box.sched.outside, self.k, sound=True)
        return v

    def contribution(self, src: _Box, key: Key, tgt: _Box) -> np.ndarray:
        """Certified distances from tgt's portals to src's promised points."""
        ck = (src.node.index, key, tgt.node.index)
        v = self._contrib.get(ck)
        if v is None:
            v = self._contrib[ck] = _spread(self.sv_inside(src, key), self.dist(tgt, src))
        return v

    # -- base cases ------------------------------------------------------------

    def leaf_inside(self, box: _Box, location: np.ndarray, level: int) -> Key:
        """Inside key of a leaf whose shallowest point sits at `location` with `level`."""
        d = np.hypot(*(box.portals - location).T)
        dist = np.full((self.k, len(d)), np.inf)
        dist[level:] = d
        return pf.compress_distances(dist, box.sched.inside).tobytes()

    def base_root(self, box: _Box) -> dict[Key, tuple[float, tuple]]:
        if not self.is_root_leaf(box) or not box.node.is_leaf:
            raise DPContractError(f"box {box.node.index} is not the root's leaf")
        r = self.pts[self.inst.root_index]
        if any((self.pts[p] != r).any() for p in box.node.points):
            raise DPContractError("root leaf holds points away from the root")
        return {self.leaf_inside(box, r, 0): (0.0, ("root",))}

    def base_point(self, box: _Box, outside: np.ndarray) -> dict[Key, tuple[float, tuple]]:
        """Entries of a rootless leaf given the decoded outside profile (k, 4m)."""
        pts = box.node.points
        if self.is_root_leaf(box):
            raise DPContractError("base_point called on the root's leaf")
        u = self.pts[pts[0]]
        if any((self.pts[p] != u).any() for p in pts):
            raise DPContractError(f"leaf {box.node.index} holds several locations")
        reach = np.hypot(*(box.portals - u).T)
        out: dict[Key, tuple[float, tuple]] = {}
        for h in range(1, self.k + 1):
            c = float((outside[h - 1] + reach).min())
            if not np.isfinite(c):
                continue
            if h == self.k:
                c *= len(pts)
            ikey = self.leaf_inside(box, u, h) if h < self.k else self.none_key(box, "inside")
            prev = out.get(ikey)
            if prev is None or c < prev[0]:
                out[ikey] = (c, ("point", h))
        return out

    # -- realizable inside keys -----------------------------------------------

    def nonempty(self, box: _Box) -> list[int]:
        return [i for i, c in enumerate(box.children) if c.node.points]

    def realizable(self, box: _Box) -> list[Key]:
        """Inside keys of every level choice, ignoring what outside offers."""
        idx = box.node.index
        got = self._real.get(idx)
        if got is not None:
            return got
        if box.node.is_leaf:
            if self.is_root_leaf(box):
                keys = [self.leaf_inside(box, self.pts[self.inst.root_index], 0)]
            else:
                u = self.pts[box.node.points[0]]
                keys = [self.leaf_inside(box, u, h) for h in range(1, self.k)]
                keys.append(self.none_key(box, "inside"))
        else:
            cs = self.nonempty(box)
            seen = {}
            for combo in itertools.product(*(self.realizable(box.children[c]) for c in cs)):
                seen.setdefault(self.parent_inside(box, cs, combo), None)
            keys = list(seen)
        self._real[idx] = keys
        return keys

    def parent_inside(self, box: _Box, cs: Sequence[int], combo: Sequence[Key]) -> Key:
        ck = (box.node.index, tuple(combo))
        key = self._parent_key.get(ck)
        if key is None:
            vals = None
            for c, ikey in zip(cs, combo):
                v = self.contribution(box.children[c], ikey, box)
                vals = v if vals is None else np.minimum(vals, v)
            key = self._parent_key[ck] = pf.compress_distances(vals, box.sched.inside).tobytes()
        return key

    def child_outside(self, box: _Box, c: int, parent_part: np.ndarray,
                      siblings: Sequence[tuple[int, Key]]) -> Key:
        child = box.children[c]
        vals = parent_part
        for s, ikey in siblings:
            vals = np.minimum(vals, self.contribution(box.children[s], ikey, child))
        return pf.compress_distances(vals, child.sched.outside).tobytes()

    # -- tables -----------------------------------------------------------------

    def table(self, box: _Box, okey: Key) -> dict[Key, tuple[float, tuple]]:
        mk = (box.node.index, okey)
        got = self.memo.get(mk)
        if got is not None:
            return got
        if box.node.is_leaf:
            if self.is_root_leaf(box):
                entries = self.base_root(box)
            else:
                entries = self.base_point(box, self.sv_outside(box, okey))
        else:
            entries = self.merge(box, okey)
        if self.cfg.prune:
            entries = prune(entries)
        self.memo[mk] = entries
        self.entries_per_box[box.node.index] += len(entries)
        if self.entries_per_box[box.node.index] > self.cfg.entry_cap:
            raise ResourceLimitError(
                f"box {box.node.index} (level {box.node.level}, side {box.node.side}) "
                f"exceeded {self.cfg.entry_cap} entries")
        return entries

    def merge(self, box: _Box, okey: Key) -> dict[Key, tuple[float, tuple]]:
        cs = self.nonempty(box)
        sv_parent = self.sv_outside(box, okey)
        from_parent = {c: _spread(sv_parent, self.dist(box.children[c], box)) for c in cs}
        options = [self.realizable(box.children[c]) for c in cs]
        ok_cache: dict[tuple, Key] = {}
        out: dict[Key, tuple[float, tuple]] = {}
        for combo in itertools.product(*options):
            total = 0.0
            refs = []
            for pos, c in enumerate(cs):
                sib_id = combo[:pos] + (None,) + combo[pos + 1:]
                ck = (c, sib_id)
                ckey = ok_cache.get(ck)
                if ckey is None:
                    sibs = [(s, combo[q]) for q, s in enumerate(cs) if q != pos]
                    ckey = ok_cache[ck] = self.child_outside(box, c, from_parent[c], sibs)
                hit = self.table(box.children[c], ckey).get(combo[pos])
                if hit is None:
                    break
                total += hit[0]
                refs.append((c, ckey, combo[pos]))
            else:
                ikey = self.parent_inside(box, cs, combo)
                prev = out.get(ikey)
                if prev is None or total < prev[0]:
                    out[ikey] = (total, tuple(refs))
        return out

    # -- answers ------------------------------------------------------------------

    def solve(self) -> tuple[float, Optional[list[int]]]:
        if self.inst.n == 1:
            return 0.0, [0]
        top = self.table(self.root, self.none_key(self.root, "outside"))
        if not top:
            return math.inf, None
        ikey, (cost, _) = min(top.items(), key=lambda kv: kv[1][0])
        levels = [-1] * self.inst.n
        self._backtrack(self.root, self.none_key(self.root, "outside"), ikey, levels)
        return cost, levels

    def _backtrack(self, box: _Box, okey: Key, ikey: Key, levels: list[int]) -> None:
        cost, ref = self.memo[(box.node.index, okey)][ikey]
        if ref[0] == "root":
            for p in box.node.points:
                levels[p] = 0 if p == self.inst.root_index else 1
        elif ref[0] == "point":
            h = ref[1]
            pts = box.node.points
            levels[pts[0]] = h
            for p in pts[1:]:
                levels[p] = h + 1 if h < self.k else h
        else:
            for c, ckey, cikey in ref:
                self._backtrack(box.children[c], ckey, cikey, levels)

    def counters(self) -> dict:
        per_level: dict[int, dict] = {}
        for idx, box in sorted(self.boxes.items()):
            lvl = box.node.level
            rec = per_level.setdefault(lvl, {
                "box_level": lvl,
                "side": box.node.side,
                "boxes": 0,
                "reachable_entries": 0,
                "max_box_entries": 0,
                "inside_compressed_vars": box.sched.inside.size,
                "outside_compressed_vars": box.sched.outside.size,
                "inside_levels": box.sched.inside.levels,
                "outside_levels": box.sched.outside.levels,
                "uncompressed_vars": 4 * self.m * self.k,
            })
            rec["boxes"] += 1
            got = self.entries_per_box.get(idx, 0)
            rec["reachable_entries"] += got
            rec["max_box_entries"] = max(rec["max_box_entries"], got)
        return {
            "m": self.m,
            "delta": self.delta,
            "beta": self.beta,
            "k": self.k,
            "total_entries": int(sum(self.entries_per_box.values())),
            "max_entries_per_box": int(max(self.entries_per_box.values(), default=0)),
            "tables": len(self.memo),
            "per_level": [per_level[l] for l in sorted(per_level)],
        }


def prune(entries: dict[Key, tuple[float, tuple]]) -> dict[Key, tuple[float, tuple]]:
    """Drop entries whose inside promise is no stronger and cost no lower than another's."""
    if len(entries) <= 1:
        return entries
    keys = list(entries)
    mat = np.stack([np.frombuffer(k, dtype=np.int8) for k in keys]).astype(np.int16)
    costs = np.array([entries[k][0] for k in keys])
    order = np.lexsort((mat.sum(axis=1), costs))
    kept: list[int] = []
    for i in order:
        if kept and np.any(np.all(mat[kept] <= mat[i], axis=1)):
            continue
        kept.append(int(i))
    kept.sort()
    return {keys[i]: entries[keys[i]] for i in kept}


def closure_depths(levels: Sequence[int], inst: NormalizedInstance) -> list[int]:
    """Depths of the tree linking each point to its nearest point of lower level.

    The DP certifies, for every point of level h, some point of level <= h-1
    within the paid distance; this tree realizes those links, and its depths
    form an exact level assignment that is never more expensive.
    """
    lv = np.asarray(levels)
    if lv[inst.root_index] != 0 or (lv[np.arange(inst.n) != inst.root_index] < 1).any():
        raise InfeasibleLevels(f"bad level vector {list(levels)}")
    D = inst.distance_matrix()
    order = np.argsort(lv, kind="stable")
    depth = [0] * inst.n
    for v in order:
        if v == inst.root_index:
            continue
        cand = np.where(lv < lv[v], D[v], np.inf)
        p = int(cand.argmin())
        depth[v] = depth[p] + 1
    return depth


def extract_tree(levels: Sequence[int], inst: NormalizedInstance) -> HopTree:
    lv = list(levels)
    if max(lv) > inst.k:
        raise InfeasibleLevels("level above the hop bound")
    return extract_by_levels(lv, inst)


def solve_shift(inst: NormalizedInstance, shift: Shift, cfg: PtasConfig,
                ) -> tuple[float, Optional[list[int]], dict]:
    """DP cost and a feasible exact level assignment for one shift."""
    if cfg.full_enum:
        from .full_enum import FullEnumDP
        dp = FullEnumDP(inst, shift, cfg)
    else:
        dp = ShiftDP(inst, shift, cfg)
    cost, levels = dp.solve()
    if levels is not None:
        levels = closure_depths(levels, inst)
    return cost, levels, dp.counters()


def draw_shifts(L: int, t: int, seed: int) -> list[Shift]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(t):
        a, b = rng.integers(0, L, size=2)
        out.append(Shift(int(a), int(b)))
    return out


def _run_shift(args) -> ShiftRecord:
    inst, shift, cfg = args
    cost, levels, counters = solve_shift(inst, shift, cfg)
    if levels is None:
        return ShiftRecord(shift.a, shift.b, cost, math.inf, (), counters)
    tree = extract_tree(levels, inst)
    return ShiftRecord(shift.a, shift.b, cost, tree.cost, tuple(levels), counters)


def worker_count() -> int:
    raw = os.environ.get("KHOP_THREADS")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"KHOP_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"KHOP_THREADS must be a positive integer, got {raw!r}")
    return n


def solve(inst: NormalizedInstance, cfg: PtasConfig) -> PtasResult:
    shifts = draw_shifts(inst.L, cfg.shifts, cfg.seed)
    jobs = [(inst, s, cfg) for s in shifts]
    workers = min(worker_count(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(_run_shift, jobs))
    else:
        records = [_run_shift(j) for j in jobs]
    best = min(range(len(records)), key=lambda i: (records[i].dp_cost, i))
    rec = records[best]
    tree = extract_tree(rec.levels, inst) if rec.levels else None
    return PtasResult(rec.dp_cost, tree, rec.extracted_cost, records, best)
