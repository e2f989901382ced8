"""Exact oracles, MST, a local-search baseline and tree validation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geom_instance import NormalizedInstance

TREE_MAGIC = "ktree 1"
CHUNK = 1 << 16


class InstanceTooLarge(ValueError):
    pass


class InfeasibleLevels(ValueError):
    pass


@dataclass(frozen=True)
class HopTree:
    parent: tuple[int, ...]  # -1 marks the root
    cost: float
    depth: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.parent)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(p, v) for v, p in enumerate(self.parent) if p >= 0]


@dataclass(frozen=True)
class Violation:
    kind: str
    point: int = -1
    depth: int = -1

    def __str__(self):
        if self.kind == "DepthExceeded":
            return f"DepthExceeded(point={self.point}, depth={self.depth})"
        if self.point >= 0:
            return f"{self.kind}(point={self.point})"
        return self.kind


def tree_from_parents(parent: Sequence[int], inst: NormalizedInstance) -> HopTree:
    """Build a HopTree, computing cost and depths; assumes a valid parent map."""
    parent = tuple(int(p) for p in parent)
    pts = inst.grid_points.astype(float)
    cost = 0.0
    for v, p in enumerate(parent):
        if p >= 0:
            cost += float(np.hypot(*(pts[v] - pts[p])))
    depth = [-1] * len(parent)
    for v in range(len(parent)):
        path = []
        u = v
        while u >= 0 and depth[u] < 0 and len(path) <= len(parent):
            path.append(u)
            u = parent[u]
        base = depth[u] if u >= 0 else -1
        for w in reversed(path):
            base += 1
            depth[w] = base
    return HopTree(parent, cost, tuple(depth))


def validate_tree(tree: HopTree, inst: NormalizedInstance) -> list[Violation]:
    n = inst.n
    if tree.n != n:
        return [Violation("WrongSize")]
    out: list[Violation] = []
    root = inst.root_index
    if tree.parent[root] != -1:
        out.append(Violation("RootHasParent", root))
    for v, p in enumerate(tree.parent):
        if v != root and not 0 <= p < n:
            out.append(Violation("BadParent", v))
    if out:
        return out
    depth = [-1] * n
    depth[root] = 0
    for v in range(n):
        path, u = [], v
        while depth[u] < 0:
            if u in path:
                return [Violation("NotATree", u)]
            path.append(u)
            u = tree.parent[u]
        d = depth[u]
        for w in reversed(path):
            d += 1
            depth[w] = d
    for v in range(n):
        if depth[v] > inst.k:
            out.append(Violation("DepthExceeded", v, depth[v]))
    return out


def star_tree(inst: NormalizedInstance) -> HopTree:
    return tree_from_parents([-1 if v == inst.root_index else inst.root_index
                              for v in range(inst.n)], inst)


def _level_costs(levels: np.ndarray, D: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cost of each level-assignment row (inf if infeasible) and argmin parents."""
    want = levels[:, :, None] - 1 == levels[:, None, :]
    cand = np.where(want, D[None], np.inf)
    parent = cand.argmin(axis=2)
    best = np.take_along_axis(cand, parent[:, :, None], axis=2)[:, :, 0]
    best[:, 0] = 0.0
    return best.sum(axis=1), parent


def exact_by_levels(inst: NormalizedInstance, cap: int = 10) -> tuple[float, HopTree]:
    """Exact optimum by enumerating hop-levels of every non-root point."""
    n = inst.n
    if n > cap:
        raise InstanceTooLarge(f"exact_by_levels handles n <= {cap}, got {n}")
    if n == 1:
        return 0.0, tree_from_parents([-1], inst)
    D = inst.distance_matrix()
    kmax = min(inst.k, n - 1)
    best_cost, best_row = np.inf, None
    it = itertools.product(range(1, kmax + 1), repeat=n - 1)
    while True:
        block = list(itertools.islice(it, CHUNK))
        if not block:
            break
        lv = np.zeros((len(block), n), dtype=np.int64)
        lv[:, 1:] = block
        costs, _ = _level_costs(lv, D)
        i = int(costs.argmin())
        if costs[i] < best_cost:
            best_cost, best_row = float(costs[i]), lv[i]
    tree = extract_by_levels(best_row, inst)
    return best_cost, tree


def extract_by_levels(levels: Sequence[int], inst: NormalizedInstance) -> HopTree:
    lv = np.asarray(levels, dtype=np.int64)
    if lv[inst.root_index] != 0:
        raise InfeasibleLevels("root must have level 0")
    D = inst.distance_matrix()
    cost, parent = _level_costs(lv[None], D)
    if not np.isfinite(cost[0]):
        raise InfeasibleLevels(f"level assignment {lv.tolist()} has a gap")
    par = parent[0].tolist()
    par[inst.root_index] = -1
    return tree_from_parents(par, inst)


def exact_by_parents(inst: NormalizedInstance, cap: int = 8) -> tuple[float, HopTree]:
    """Exact optimum by enumerating every parent function of the non-root points."""
    n = inst.n
    if n > cap:
        raise InstanceTooLarge(f"exact_by_parents handles n <= {cap}, got {n}")
    if n == 1:
        return 0.0, tree_from_parents([-1], inst)
    D = inst.distance_matrix()
    best_cost, best_row = np.inf, None
    it = itertools.product(range(n), repeat=n - 1)
    steps = min(inst.k, n - 1)
    while True:
        block = list(itertools.islice(it, CHUNK))
        if not block:
            break
        par = np.zeros((len(block), n), dtype=np.int64)
        par[:, 1:] = block
        cur = np.broadcast_to(np.arange(n), par.shape).copy()
        for _ in range(steps):
            cur = np.take_along_axis(par, cur, axis=1)
        ok = (cur == 0).all(axis=1) & (par[:, 1:] != np.arange(1, n)).all(axis=1)
        if not ok.any():
            continue
        costs = D[np.arange(1, n), par[:, 1:]].sum(axis=1)
        costs = np.where(ok, costs, np.inf)
        i = int(costs.argmin())
        if costs[i] < best_cost:
            best_cost, best_row = float(costs[i]), par[i].copy()
    best_row[0] = -1
    return best_cost, tree_from_parents(best_row.tolist(), inst)


def prim_mst(inst: NormalizedInstance) -> tuple[float, HopTree]:
    n = inst.n
    D = inst.distance_matrix()
    root = inst.root_index
    parent = [-1] * n
    in_tree = np.zeros(n, dtype=bool)
    in_tree[root] = True
    best = D[root].copy()
    link = np.full(n, root)
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        v = int(cand.argmin())
        in_tree[v] = True
        parent[v] = int(link[v])
        closer = D[v] < best
        best = np.where(closer, D[v], best)
        link = np.where(closer, v, link)
    tree = tree_from_parents(parent, inst)
    return tree.cost, tree


def level_assignment_cost(levels: Sequence[int], inst: NormalizedInstance) -> float:
    cost, _ = _level_costs(np.asarray(levels, dtype=np.int64)[None], inst.distance_matrix())
    return float(cost[0])


def heuristic_local_search(inst: NormalizedInstance, iters: int = 1000,
                           seed: int = 0) -> tuple[float, HopTree]:
    """Best-improvement single-point level moves, starting from the star.

    The seed only fixes the order in which equal-gain moves are preferred.
    """
    n = inst.n
    if n == 1:
        return 0.0, tree_from_parents([-1], inst)
    D = inst.distance_matrix()
    kmax = min(inst.k, n - 1)
    order = np.random.default_rng(seed).permutation(np.arange(1, n))
    levels = np.ones(n, dtype=np.int64)
    levels[inst.root_index] = 0
    cost = float(_level_costs(levels[None], D)[0][0])
    for _ in range(iters):
        moves = np.array([(v, h) for v in order for h in range(1, kmax + 1) if h != levels[v]],
                         dtype=np.int64).reshape(-1, 2)
        if not len(moves):
            break
        cand = np.repeat(levels[None], len(moves), axis=0)
        cand[np.arange(len(moves)), moves[:, 0]] = moves[:, 1]
        costs, _ = _level_costs(cand, D)
        i = int(costs.argmin())
        if not costs[i] < cost - 1e-12:
            break
        cost = float(costs[i])
        levels = cand[i]
    tree = extract_by_levels(levels, inst)
    return tree.cost, tree


def dump_tree(tree: HopTree) -> str:
    return "\n".join([TREE_MAGIC, str(tree.n), *map(str, tree.parent)]) + "\n"


def load_tree(text: str) -> list[int]:
    lines = [ln.strip() for ln in text.splitlines()]
    if not lines or lines[0] != TREE_MAGIC:
        raise ValueError(f"line 1: expected header {TREE_MAGIC!r}")
    try:
        n = int(lines[1])
        body = [ln for ln in lines[2:] if ln]
        parents = [int(x) for x in body]
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed tree file: {exc}") from None
    if len(parents) != n:
        raise ValueError(f"expected {n} parent lines, found {len(parents)}")
    return parents
