"""Extensional DP: every box table over every monotone outside key.

Only usable at micro scale (m = 1, a handful of points).  Child outside keys
are not taken tight: a child may adopt any key that demands no more than what
its siblings and parent certify, and the cheapest such choice is kept.  No
dominance pruning is applied.  Agreement with :class:`ShiftDP` is the check
that tight keys and pruning lose nothing.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import profiles as pf
from .dp_engine import Key, ResourceLimitError, ShiftDP, _Box
from .profiles import NONE


class FullEnumDP(ShiftDP):

    def __init__(self, inst, shift, cfg):
        super().__init__(inst, shift, cfg)
        self._universe: dict[int, tuple[np.ndarray, dict[Key, int]]] = {}
        # box index -> inside key -> (best cost over weaker-or-equal keys, chosen row)
        self._closure: dict[int, dict[Key, tuple[np.ndarray, np.ndarray]]] = {}

    def universe(self, box: _Box) -> tuple[np.ndarray, dict[Key, int]]:
        got = self._universe.get(box.node.index)
        if got is None:
            if box is self.root:
                keys = np.full((1, box.sched.outside.size), NONE, dtype=np.int8)
            else:
                keys = pf.monotone_keys(box.sched.outside, self.k)
            index = {row.tobytes(): i for i, row in enumerate(keys)}
            got = self._universe[box.node.index] = (keys, index)
        return got

    def table(self, box: _Box, okey: Key):
        return self.memo[(box.node.index, okey)]

    def solve(self):
        if self.inst.n > 1:
            self._build(self.root)
        return super().solve()

    def _build(self, box: _Box) -> None:
        for c in box.children:
            if c.node.points:
                self._build(c)
        keys, _ = self.universe(box)
        if box.node.is_leaf:
            if self.is_root_leaf(box):
                base = self.base_root(box)
                tables = [dict(base) for _ in range(len(keys))]
            else:
                sv = pf.decode(keys, box.sched.outside, self.k, sound=True)
                tables = [self.base_point(box, sv[u]) for u in range(len(keys))]
        else:
            tables = self._merge_all(box, keys)
        idx = box.node.index
        for row, tab in zip(keys, tables):
            self.memo[(idx, row.tobytes())] = tab
        self.entries_per_box[idx] = sum(len(t) for t in tables)
        if self.entries_per_box[idx] > self.cfg.entry_cap:
            raise ResourceLimitError(f"box {idx} exceeded {self.cfg.entry_cap} entries")
        self._close(box, keys, tables)

    def _close(self, box: _Box, keys: np.ndarray, tables) -> None:
        """Best cost per inside key over all outside keys weaker than or equal to each key."""
        weaker = np.all(keys[None, :, :] >= keys[:, None, :], axis=2)
        out = {}
        for ikey in sorted({ik for t in tables for ik in t}):
            cost = np.array([t[ikey][0] if ikey in t else np.inf for t in tables])
            cand = np.where(weaker, cost[None, :], np.inf)
            arg = cand.argmin(axis=1)
            out[ikey] = (cand[np.arange(len(keys)), arg], arg)
        self._closure[box.node.index] = out

    def _merge_all(self, box: _Box, keys: np.ndarray):
        cs = self.nonempty(box)
        sv_parent = pf.decode(keys, box.sched.outside, self.k, sound=True)
        from_parent = {}
        for c in cs:
            D = self.dist(box.children[c], box)
            from_parent[c] = (sv_parent[:, :, None, :] + D[None, None]).min(axis=3)
        tables: list[dict] = [{} for _ in range(len(keys))]
        options = [self.realizable(box.children[c]) for c in cs]
        for combo in itertools.product(*options):
            total = np.zeros(len(keys))
            chosen = []
            for pos, c in enumerate(cs):
                child = box.children[c]
                J = from_parent[c]
                for q, s in enumerate(cs):
                    if q != pos:
                        J = np.minimum(J, self.contribution(box.children[s], combo[q], child))
                tight = pf.compress_distances(J, child.sched.outside)
                ckeys, cindex = self.universe(child)
                rows = np.array([cindex[t.tobytes()] for t in tight])
                closure = self._closure[child.node.index].get(combo[pos])
                if closure is None:
                    total[:] = np.inf
                    break
                best, arg = closure
                total += best[rows]
                chosen.append((c, arg[rows], combo[pos]))
            ikey = self.parent_inside(box, cs, combo)
            for u in np.flatnonzero(np.isfinite(total)):
                prev = tables[u].get(ikey)
                if prev is None or total[u] < prev[0]:
                    refs = tuple((c, self.universe(box.children[c])[0][arg[u]].tobytes(), ik)
                                 for c, arg, ik in chosen)
                    tables[u][ikey] = (float(total[u]), refs)
        return tables
