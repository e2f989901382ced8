"""Estimator-style front end and input validation helpers."""

from __future__ import annotations

import math
from numbers import Integral

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import dp_engine
from .geom_instance import ApproxParams, NormalizedInstance, RawInstance, normalize
from .reference_solvers import (HopTree, exact_by_levels, exact_by_parents,
                                heuristic_local_search, prim_mst)

ALGORITHMS = ("exact", "exact-parents", "ptas", "heuristic", "mst")


class InfeasibleError(RuntimeError):
    """No hop-bounded tree was found for the instance."""


def check_points(X) -> np.ndarray:
    X = check_array(X, dtype=np.float64, ensure_min_samples=1)
    if X.shape[1] != 2:
        raise ValueError(f"expected planar points of shape (n, 2), got {X.shape}")
    return X


def check_hop_bound(k) -> int:
    if isinstance(k, bool) or not isinstance(k, Integral) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    return int(k)


def run_algorithm(inst: NormalizedInstance, algorithm: str, *, eps: float = 0.5,
                  shifts: int = 6, seed: int = 0, m=None, delta=None,
                  full_enum: bool = False, iters: int = 1000) -> tuple[float, HopTree, dict]:
    """Dispatch one solver; returns (cost in grid units, tree, extras)."""
    if algorithm == "exact":
        cost, tree = exact_by_levels(inst)
    elif algorithm == "exact-parents":
        cost, tree = exact_by_parents(inst)
    elif algorithm == "heuristic":
        cost, tree = heuristic_local_search(inst, iters=iters, seed=seed)
    elif algorithm == "mst":
        cost, tree = prim_mst(inst)
    elif algorithm == "ptas":
        cfg = dp_engine.PtasConfig(eps=eps, delta=delta, m=m, shifts=shifts, seed=seed,
                                   full_enum=full_enum)
        res = dp_engine.solve(inst, cfg)
        if res.extracted_tree is None:
            raise InfeasibleError("the DP found no portal-respecting solution")
        return res.extracted_cost, res.extracted_tree, {"dp_cost": res.dp_cost,
                                                         "shifts_used": len(res.shifts),
                                                         "result": res}
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}; pick one of {ALGORITHMS}")
    return cost, tree, {"shifts_used": 0}


class KHopSpanningTree(BaseEstimator):
    """Minimum-cost spanning tree rooted at the first sample with at most k hops.

    Parameters
    ----------
    k : int, default=2
        Hop bound: every root-to-point path has at most ``k`` edges.
    algorithm : {"ptas", "exact", "exact-parents", "heuristic", "mst"}
        "mst" ignores the hop bound.
    eps : float, default=0.5
        Accuracy parameter; also sets the snapping grid.
    shifts : int, default=6
        Random dissection shifts tried by the approximation scheme.
    random_state : int, default=0

    Attributes
    ----------
    parent_ : ndarray of shape (n_samples,)
        Parent index of every sample, -1 for the root.
    depth_ : ndarray of shape (n_samples,)
        Hop count from the root.
    cost_ : float
        Tree length on the snapped grid.
    raw_cost_ : float
        Tree length measured on the input coordinates.
    """

    def __init__(self, k=2, algorithm="ptas", eps=0.5, shifts=6, random_state=0,
                 m=None, delta=None, full_enum=False, max_iter=1000):
        self.k = k
        self.algorithm = algorithm
        self.eps = eps
        self.shifts = shifts
        self.random_state = random_state
        self.m = m
        self.delta = delta
        self.full_enum = full_enum
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = check_points(X)
        k = check_hop_bound(self.k)
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        raw = RawInstance(tuple(map(tuple, X.tolist())), k=k)
        inst = normalize(raw, ApproxParams(eps=self.eps))
        cost, tree, extra = run_algorithm(
            inst, self.algorithm, eps=self.eps, shifts=self.shifts, seed=self.random_state,
            m=self.m, delta=self.delta, full_enum=self.full_enum, iters=self.max_iter)
        self.instance_ = inst
        self.tree_ = tree
        self.parent_ = np.asarray(tree.parent)
        self.depth_ = np.asarray(tree.depth)
        self.cost_ = cost
        self.raw_cost_ = math.fsum(float(np.hypot(*(X[v] - X[p]))) for p, v in tree.edges)
        self.dp_cost_ = extra.get("dp_cost")
        self.n_features_in_ = 2
        return self

    def fit_predict(self, X, y=None):
        """Fit and return each sample's hop level."""
        return self.fit(X).depth_

    @property
    def edges_(self) -> list[tuple[int, int]]:
        check_is_fitted(self, "tree_")
        return self.tree_.edges
