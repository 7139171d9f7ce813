"""Pareto dominance, non-dominated archives and the hypervolume indicator.

Everything here uses the all-minimization convention: maximize-sense
objectives are negated once, by the evaluator wrapper, before they reach
this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np
from numba import njit

from cimbo.design_space import DesignPoint, ValidationError

MAX_EXACT_OBJECTIVES = 6


class UnsupportedDimensionError(ValueError):
    pass


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValidationError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_mask(points: np.ndarray) -> np.ndarray:
    """Boolean mask of the non-dominated rows; of exact duplicates only the first survives."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n <= 1:
        return np.ones(n, dtype=bool)
    le = pts[:, None, 0] <= pts[None, :, 0]
    for k in range(1, pts.shape[1]):
        le &= pts[:, None, k] <= pts[None, :, k]
    # i knocks out j if i <= j everywhere, unless j <= i too (a duplicate) and j comes first
    knock = le & ~np.tril(le.T)
    return ~knock.any(axis=0)


@njit(cache=True)
def _nondominated_rows(pts: np.ndarray) -> np.ndarray:
    n, m = pts.shape
    keep = np.ones(n, dtype=np.bool_)
    for j in range(n):
        for i in range(n):
            if i == j or not keep[i]:
                continue
            le = True
            eq = True
            for k in range(m):
                if pts[i, k] > pts[j, k]:
                    le = False
                    break
                if pts[i, k] != pts[j, k]:
                    eq = False
            if le and (not eq or i < j):
                keep[j] = False
                break
    return pts[keep]


@njit(cache=True)
def _hv(points: np.ndarray, ref: np.ndarray) -> float:
    # points: strictly inside ref in every objective, mutually non-dominated
    n, m = points.shape
    if n == 0:
        return 0.0
    if n == 1:
        v = 1.0
        for k in range(m):
            v *= ref[k] - points[0, k]
        return v
    if m == 2:
        order = np.argsort(points[:, 0])
        vol = 0.0
        best = ref[1]
        for t in range(n):
            i = order[t]
            if points[i, 1] < best:
                vol += (ref[0] - points[i, 0]) * (best - points[i, 1])
                best = points[i, 1]
        return vol
    # slice on the last objective, worst first: every later point is at least
    # as good there, so the limited set collapses to one fewer dimension
    p = points[np.argsort(-points[:, m - 1], kind="mergesort")]
    head = p[:, : m - 1].copy()
    ref_head = ref[: m - 1].copy()
    vol = 0.0
    for i in range(n):
        box = 1.0
        for k in range(m - 1):
            box *= ref_head[k] - head[i, k]
        rest = n - i - 1
        if rest > 0:
            limited = np.empty((rest, m - 1))
            count = 0
            for r in range(i + 1, n):
                inside = True
                for k in range(m - 1):
                    v = max(head[r, k], head[i, k])
                    limited[count, k] = v
                    if v >= ref_head[k]:
                        inside = False
                if inside:
                    count += 1
            if count > 0:
                box -= _hv(_nondominated_rows(limited[:count]), ref_head)
        vol += (ref[m - 1] - p[i, m - 1]) * box
    return vol


def _prepare(front: Iterable[Sequence[float]] | np.ndarray, ref: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(ref, dtype=float)
    pts = np.asarray(front, dtype=float)
    if pts.size == 0:
        return np.zeros((0, ref.size)), ref
    pts = pts.reshape(-1, ref.size)
    if not np.all(np.isfinite(pts)):
        raise ValidationError("front contains non-finite objective values")
    pts = np.minimum(pts, ref)
    pts = pts[np.all(pts < ref, axis=1)]
    return pts[nondominated_mask(pts)], ref


def hypervolume_exact(front: Iterable[Sequence[float]] | np.ndarray, ref: Sequence[float]) -> float:
    """Exact dominated hypervolume of ``front`` bounded by ``ref``.

    Points are clipped to ``ref`` first, so out-of-bounds points simply add
    nothing. Supports up to six objectives.
    """
    ref_arr = np.asarray(ref, dtype=float)
    if ref_arr.size > MAX_EXACT_OBJECTIVES:
        raise UnsupportedDimensionError(
            f"exact hypervolume supports at most {MAX_EXACT_OBJECTIVES} objectives, "
            f"got {ref_arr.size}; use hypervolume_mc instead"
        )
    pts, ref_arr = _prepare(front, ref_arr)
    return float(_hv(pts, ref_arr))


def hypervolume_mc(
    front: Iterable[Sequence[float]] | np.ndarray,
    ref: Sequence[float],
    n_samples: int,
    rng_seed: int | np.random.Generator,
    chunk: int = 100_000,
) -> tuple[float, float]:
    """Monte-Carlo hypervolume estimate and its standard error."""
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    pts, ref_arr = _prepare(front, ref)
    if len(pts) == 0:
        return 0.0, 0.0
    lower = pts.min(axis=0)
    box_volume = float(np.prod(ref_arr - lower))
    if box_volume <= 0.0:
        return 0.0, 0.0
    rng = np.random.default_rng(rng_seed)
    hits = 0
    remaining = n_samples
    while remaining:
        k = min(chunk, remaining)
        u = rng.uniform(lower, ref_arr, size=(k, ref_arr.size))
        covered = np.zeros(k, dtype=bool)
        for p in pts:
            covered |= np.all(p <= u, axis=1)
        hits += int(covered.sum())
        remaining -= k
    frac = hits / n_samples
    return box_volume * frac, box_volume * float(np.sqrt(frac * (1.0 - frac) / n_samples))


def exclusive_hypervolume(candidate: Sequence[float], front: np.ndarray, ref: np.ndarray) -> float:
    """Volume dominated by ``candidate`` but by no point of ``front``."""
    c = np.minimum(np.asarray(candidate, dtype=float), ref)
    if not np.all(c < ref):
        return 0.0
    box = float(np.prod(ref - c))
    if len(front) == 0:
        return box
    if np.any(np.all(front <= c, axis=1)):
        return 0.0
    limited = np.maximum(np.minimum(front, ref), c)
    limited = limited[np.all(limited < ref, axis=1)]
    return max(0.0, box - _hv(_nondominated_rows(limited), ref))


@dataclass
class ParetoArchive:
    """Unbounded set of mutually non-dominated (design, objectives) entries."""

    n_objectives: int
    reference_point: np.ndarray | None = None
    points: list[DesignPoint] = field(default_factory=list)
    _ys: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def frozen(self) -> bool:
        return self.reference_point is not None

    @property
    def objectives(self) -> np.ndarray:
        if not self._ys:
            return np.zeros((0, self.n_objectives))
        return np.vstack(self._ys)

    def __len__(self) -> int:
        return len(self.points)

    def entries(self) -> list[tuple[DesignPoint, np.ndarray]]:
        return [(p, y.copy()) for p, y in zip(self.points, self._ys)]

    def freeze(self, reference_point: Sequence[float]) -> None:
        if self.frozen:
            raise RuntimeError("reference point is already frozen")
        ref = np.asarray(reference_point, dtype=float)
        if ref.shape != (self.n_objectives,):
            raise ValidationError(f"reference point must have {self.n_objectives} components")
        self.reference_point = ref

    def insert(self, point: DesignPoint, y: Sequence[float]) -> Literal["accepted", "dominated"]:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.n_objectives,) or not np.all(np.isfinite(y)):
            raise ValidationError(f"objective vector must be {self.n_objectives} finite values")
        if self._ys:
            ys = self.objectives
            if np.any(np.all(ys <= y, axis=1)):
                return "dominated"
            keep = ~(np.all(y <= ys, axis=1) & np.any(y < ys, axis=1))
            self.points = [p for p, k in zip(self.points, keep) if k]
            self._ys = [v for v, k in zip(self._ys, keep) if k]
        self.points.append(point)
        self._ys.append(y)
        return "accepted"

    def hypervolume(self) -> float:
        self._require_frozen()
        return hypervolume_exact(self.objectives, self.reference_point)

    def _require_frozen(self) -> None:
        if not self.frozen:
            raise RuntimeError("archive reference point has not been frozen")


def hvi(archive: ParetoArchive, candidate: Sequence[float]) -> float:
    """Hypervolume gained by adding ``candidate`` to ``archive``."""
    archive._require_frozen()
    return exclusive_hypervolume(candidate, archive.objectives, archive.reference_point)


def reference_from_observations(ys: np.ndarray, margin: float) -> np.ndarray:
    """Worst observed value per objective pushed out by ``margin`` of the observed range."""
    ys = np.asarray(ys, dtype=float)
    worst = ys.max(axis=0)
    span = worst - ys.min(axis=0)
    # a zero range would put every point on the boundary
    span = np.where(span > 0, span, np.maximum(np.abs(worst), 1.0))
    return worst + margin * span
