"""Benchmark suites: oracle comparisons, state counters and pass/fail checks.

A suite produces a JSON-ready report with one record per instance, one
record per (box level, profile kind) of every DP run, and a list of named
checks.  ``cli bench`` exits non-zero when a gating check fails.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import dp_engine
from .geom_instance import (ApproxParams, NormalizedInstance, generate_instance,
                            normalize)
from .reference_solvers import (exact_by_levels, exact_by_parents,
                                heuristic_local_search, validate_tree)

SCHEMA = 1
SLACK = 1e-9
# m = 1, delta = 1 micro runs need a wider outside ladder to stay feasible
MICRO_OUTSIDE_REACH = 8.0


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    gating: bool = True

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail,
                "gating": self.gating}


@dataclass
class BenchReport:
    suite: str
    instances: list[dict] = field(default_factory=list)
    boxes: list[dict] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.gating)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.checks if c.gating and not c.passed]

    def as_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "suite": self.suite,
            "instances": self.instances,
            "boxes": self.boxes,
            "checks": [c.as_dict() for c in self.checks],
            "ok": self.ok,
        }


def banded_variable_count(m: int, beta: int, levels: int) -> int:
    """Sum over bands f of beta * ceil(4m / 2^f), cut off after ``levels`` levels."""
    total = 0
    for j in range(levels):
        f = j // beta
        total += 1 if 2 ** f >= 4 * m else math.ceil(4 * m / 2 ** f)
    return total


def micro_instance(seed: int, n: int | None = None, L: int = 8, k: int = 2) -> NormalizedInstance:
    """Distinct random points of the grid {0..L}^2, already snapped."""
    rng = np.random.default_rng(seed)
    if n is None:
        n = int(rng.integers(2, 5))
    cells = rng.choice((L + 1) ** 2, size=n, replace=False)
    return NormalizedInstance.from_grid(np.stack([cells // (L + 1), cells % (L + 1)], axis=1), L, k)


def micro_config(**kw) -> dp_engine.PtasConfig:
    return dp_engine.PtasConfig(eps=1.0, m=1, delta=1.0, outside_reach=MICRO_OUTSIDE_REACH, **kw)


def box_records(counters: dict, k: int, instance: int, shift: tuple[int, int]) -> list[dict]:
    """Flatten per-level DP counters into one record per (box level, profile kind)."""
    out = []
    for rec in counters.get("per_level", []):
        for kind in ("inside", "outside"):
            levels = rec[f"{kind}_levels"]
            out.append({
                "instance": instance,
                "shift": list(shift),
                "box_level": rec["box_level"],
                "side": rec["side"],
                "kind": kind,
                "k": k,
                "m": counters["m"],
                "beta": counters["beta"],
                "levels": levels,
                "compressed_vars": rec[f"{kind}_compressed_vars"],
                "uncompressed_vars": 4 * counters["m"] * k,
                "banded_formula": banded_variable_count(counters["m"], counters["beta"], levels),
                "reachable_entries": rec["reachable_entries"],
                "max_box_entries": rec["max_box_entries"],
            })
    return out


def _timed(fn, *args, **kw):
    t = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t


def accounting_checks(report: BenchReport, cap: int) -> None:
    boxes = [b for b in report.boxes if b["k"] >= 2]
    bad = [b for b in boxes if b["compressed_vars"] != b["banded_formula"]]
    report.checks.append(Check("banded_formula", not bad,
                               f"{len(bad)} of {len(boxes)} box records differ"))
    worst = max((b["max_box_entries"] for b in report.boxes), default=0)
    report.checks.append(Check("entry_cap", worst <= cap, f"max entries in one box {worst}"))
    smaller = [b for b in boxes if b["compressed_vars"] < b["uncompressed_vars"]]
    report.checks.append(Check(
        "compressed_lt_uncompressed", len(smaller) == len(boxes),
        f"{len(smaller)} of {len(boxes)} box records have fewer compressed variables",
        gating=False))


def run_small(count: int = 50, eps: float = 0.5, shifts: int = 6, seed: int = 0,
              timings: bool = True) -> BenchReport:
    """n <= 8, k <= 3 instances against the exact optimum."""
    report = BenchReport("small")
    cfg = dp_engine.PtasConfig(eps=eps, shifts=shifts, seed=seed)
    rng = np.random.default_rng(seed)
    sandwich_bad, within_1, within_2 = [], 0, 0
    for i in range(count):
        n, k = int(rng.integers(3, 9)), int(rng.integers(1, 4))
        dist = "uniform" if i % 2 == 0 else "clustered"
        inst_seed = seed * 10_000 + i
        inst = normalize(generate_instance(n, k, inst_seed, dist), ApproxParams(eps=eps))
        (opt, _), t_exact = _timed(exact_by_levels, inst)
        res, t_ptas = _timed(dp_engine.solve, inst, cfg)
        (heur, _), t_heur = _timed(heuristic_local_search, inst, seed=inst_seed)
        ratio = res.extracted_cost / opt if opt > 0 else 1.0
        if not (opt - SLACK <= res.extracted_cost <= res.dp_cost + SLACK):
            sandwich_bad.append(i)
        if res.extracted_tree is None or validate_tree(res.extracted_tree, inst):
            sandwich_bad.append(i)
        within_1 += res.extracted_cost <= (1 + eps) * opt + SLACK
        within_2 += res.extracted_cost <= (1 + 2 * eps) * opt + SLACK
        report.instances.append({
            "n": n, "k": k, "eps": eps, "seed": inst_seed, "dist": dist, "L": inst.L,
            "opt_cost": opt,
            "ptas_dp_cost": res.dp_cost,
            "ptas_extracted_cost": res.extracted_cost,
            "heuristic_cost": heur,
            "ratio": ratio,
            "shift_costs": [{"a": r.a, "b": r.b, "dp_cost": r.dp_cost,
                             "extracted_cost": r.extracted_cost} for r in res.shifts],
            "wall_time_s": {"exact": t_exact, "ptas": t_ptas, "heuristic": t_heur}
            if timings else {},
        })
        for r in res.shifts:
            report.boxes.extend(box_records(r.counters, k, i, (r.a, r.b)))
    report.checks.append(Check("sandwich", not sandwich_bad, f"failing instances {sandwich_bad}"))
    report.checks.append(Check("approx_1_plus_eps", within_1 >= math.ceil(0.95 * count),
                               f"{within_1}/{count} within (1+eps)*OPT"))
    report.checks.append(Check("approx_1_plus_2eps", within_2 == count,
                               f"{within_2}/{count} within (1+2eps)*OPT"))
    accounting_checks(report, cfg.entry_cap)
    return report


def run_micro(count: int = 8, shifts: int = 4, seed: int = 0, timings: bool = True) -> BenchReport:
    """Micro instances: oracle agreement plus pruning and full-enumeration equivalence."""
    report = BenchReport("micro")
    rng = np.random.default_rng(seed)
    disagree = []
    for i in range(count):
        n, k = int(rng.integers(3, 7)), int(rng.integers(1, 4))
        inst = normalize(generate_instance(n, k, seed * 10_000 + i), ApproxParams(eps=0.5))
        a, _ = exact_by_levels(inst)
        b, _ = exact_by_parents(inst)
        if abs(a - b) > SLACK:
            disagree.append(i)
    report.checks.append(Check("oracle_agreement", not disagree, f"disagreeing {disagree}"))

    mismatch, sandwich_bad = [], []
    main, plain, full = micro_config(), micro_config(prune=False), micro_config(full_enum=True)
    for i in range(count):
        inst = micro_instance(seed * 10_000 + i)
        opt, _ = exact_by_levels(inst)
        costs = []
        t0 = time.perf_counter()
        for s in dp_engine.draw_shifts(inst.L, shifts, seed + i):
            c_main, lv, counters = dp_engine.solve_shift(inst, s, main)
            c_plain, _, _ = dp_engine.solve_shift(inst, s, plain)
            c_full, _, _ = dp_engine.solve_shift(inst, s, full)
            if not c_main == c_plain == c_full:
                mismatch.append((i, s.a, s.b))
            ext = dp_engine.extract_tree(lv, inst).cost if lv is not None else math.inf
            if lv is not None and not opt - SLACK <= ext <= c_main + SLACK:
                sandwich_bad.append((i, s.a, s.b))
            costs.append({"a": s.a, "b": s.b, "dp_cost": c_main, "extracted_cost": ext,
                          "no_prune_cost": c_plain, "full_enum_cost": c_full})
            report.boxes.extend(box_records(counters, inst.k, i, (s.a, s.b)))
        finite = [c for c in costs if math.isfinite(c["dp_cost"])]
        best = min(finite, key=lambda c: c["dp_cost"], default=None)
        report.instances.append({
            "n": inst.n, "k": inst.k, "eps": 1.0, "seed": seed * 10_000 + i, "L": inst.L,
            "points": inst.grid_points.tolist(),
            "opt_cost": opt,
            "ptas_dp_cost": best["dp_cost"] if best else math.inf,
            "ptas_extracted_cost": best["extracted_cost"] if best else math.inf,
            "heuristic_cost": heuristic_local_search(inst)[0],
            "ratio": best["extracted_cost"] / opt if best and opt > 0 else None,
            "shift_costs": costs,
            "wall_time_s": {"all_modes": time.perf_counter() - t0} if timings else {},
        })
    report.checks.append(Check("pruning_soundness", not mismatch, f"mismatching shifts {mismatch}"))
    report.checks.append(Check("sandwich", not sandwich_bad, f"failing shifts {sandwich_bad}"))
    accounting_checks(report, main.entry_cap)
    return report


SUITES = {"micro": run_micro, "small": run_small}

