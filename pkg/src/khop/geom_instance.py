"""Point sets, grid normalization and instance file I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

INSTANCE_MAGIC = "khop 1"


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be parsed."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class RawInstance:
    points: tuple[tuple[float, float], ...]
    k: int
    root_index: int = 0

    def __post_init__(self):
        points = tuple((float(x), float(y)) for x, y in self.points)
        object.__setattr__(self, "points", points)
        if not points:
            raise ValueError("an instance needs at least one point")
        if self.k < 1:
            raise ValueError(f"hop bound k must be >= 1, got {self.k}")
        if self.root_index != 0:
            raise ValueError("the root is always point 0")
        if not all(math.isfinite(c) for p in points for c in p):
            raise ValueError("coordinates must be finite")

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class ApproxParams:
    eps: float = 0.5
    shifts: int = 1
    seed: int = 0
    m_override: Optional[int] = None
    delta_override: Optional[float] = None
    full_enum: bool = False

    def __post_init__(self):
        if not 0 < self.eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if self.shifts < 1:
            raise ValueError("shifts must be >= 1")
        if self.m_override is not None and self.m_override <= 0:
            raise ValueError("m_override must be positive")
        if self.delta_override is not None and self.delta_override <= 0:
            raise ValueError("delta_override must be positive")


@dataclass(frozen=True)
class NormalizedInstance:
    """Points snapped to the integer grid {0..L}^2.

    ``scaled_points`` keeps the pre-snapping coordinates (already translated
    and scaled), which is what the snapping error is measured against.
    """

    grid_points: np.ndarray
    L: int
    k: int
    scale: float = 1.0
    root_index: int = 0
    scaled_points: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.grid_points, dtype=np.int64).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "grid_points", pts)
        if self.scaled_points is None:
            object.__setattr__(self, "scaled_points", pts.astype(float))
        if self.L < 1 or self.L & (self.L - 1):
            raise ValueError(f"L must be a power of two, got {self.L}")
        if len(pts) == 0:
            raise ValueError("an instance needs at least one point")
        if self.k < 1:
            raise ValueError("hop bound k must be >= 1")
        if pts.min() < 0 or pts.max() > self.L:
            raise ValueError("grid points must lie in [0, L]^2")

    @property
    def n(self) -> int:
        return len(self.grid_points)

    def distance_matrix(self) -> np.ndarray:
        p = self.grid_points.astype(float)
        return np.hypot(p[:, None, 0] - p[None, :, 0], p[:, None, 1] - p[None, :, 1])

    @classmethod
    def from_grid(cls, points: Sequence[Sequence[int]], L: int, k: int) -> "NormalizedInstance":
        """Wrap points that already live on the grid (no scaling)."""
        return cls(np.asarray(points, dtype=np.int64), L=L, k=k)


def load_instance(text: str) -> RawInstance:
    lines = text.splitlines()
    if not lines or lines[0].strip() != INSTANCE_MAGIC:
        raise InstanceFormatError(1, f"expected header {INSTANCE_MAGIC!r}")
    if len(lines) < 2:
        raise InstanceFormatError(2, "missing '<n> <k>' line")
    fields = lines[1].split()
    if len(fields) != 2:
        raise InstanceFormatError(2, "expected '<n> <k>'")
    try:
        n, k = int(fields[0]), int(fields[1])
    except ValueError:
        raise InstanceFormatError(2, f"non-integer field in {lines[1]!r}") from None
    if n < 1:
        raise InstanceFormatError(2, "n must be >= 1")
    if k < 1:
        raise InstanceFormatError(2, "k must be >= 1")

    body = [(i + 3, line) for i, line in enumerate(lines[2:]) if line.strip()]
    if len(body) != n:
        lineno = body[n][0] if len(body) > n else len(lines) + 1
        raise InstanceFormatError(lineno, f"expected {n} point lines, found {len(body)}")
    points = []
    for lineno, line in body:
        parts = line.split()
        if len(parts) != 2:
            raise InstanceFormatError(lineno, "expected '<x> <y>'")
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise InstanceFormatError(lineno, f"non-numeric coordinate in {line!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InstanceFormatError(lineno, "coordinates must be finite")
        points.append((x, y))
    return RawInstance(tuple(points), k=k)


def dump_instance(inst: RawInstance) -> str:
    out = [INSTANCE_MAGIC, f"{inst.n} {inst.k}"]
    out.extend(f"{x!r} {y!r}" for x, y in inst.points)
    return "\n".join(out) + "\n"


def grid_side(n: int, eps: float) -> int:
    """Smallest power of two that is at least 4n/eps."""
    target = 4 * n / eps
    L = 1
    while L < target:
        L *= 2
    return L


def normalize(inst: RawInstance, params: ApproxParams) -> NormalizedInstance:
    pts = np.asarray(inst.points, dtype=float)
    L = grid_side(inst.n, params.eps)
    lo = pts.min(axis=0)
    side = float((pts.max(axis=0) - lo).max())
    scale = L / side if side > 0 else 1.0
    # divide first: L / side overflows for subnormal extents
    scaled = (pts - lo) / side * L if side > 0 else pts - lo
    # ties at .5 go toward +inf
    grid = np.floor(scaled + 0.5).astype(np.int64)
    np.clip(grid, 0, L, out=grid)
    return NormalizedInstance(grid, L=L, k=inst.k, scale=scale, scaled_points=scaled)


def euclid_dist(p, q) -> float:
    return math.hypot(float(p[0]) - float(q[0]), float(p[1]) - float(q[1]))


def generate_instance(n: int, k: int, seed: int, dist_kind: str = "uniform") -> RawInstance:
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    rng = np.random.default_rng(seed)
    if dist_kind == "uniform":
        pts = rng.random((n, 2))
    elif dist_kind == "clustered":
        centers = rng.random((math.isqrt(n - 1) + 1, 2))
        which = rng.integers(0, len(centers), size=n)
        pts = np.clip(centers[which] + rng.normal(scale=0.05, size=(n, 2)), 0.0, 1.0)
    else:
        raise ValueError(f"unknown distribution {dist_kind!r}")
    return RawInstance(tuple(map(tuple, pts.tolist())), k=k)
