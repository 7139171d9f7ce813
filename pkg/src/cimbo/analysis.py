"""Post-hoc comparisons: seed-aggregated hypervolume curves and the
layer-wise versus uniform-precision check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from cimbo.design_space import ValidationError


@dataclass
class CurveStats:
    queries: np.ndarray
    curves: np.ndarray  # (n_seeds, n_queries)
    mean: np.ndarray
    std: np.ndarray


def curve_stats(curves: Sequence[Sequence[float]]) -> CurveStats:
    """Mean and sample standard deviation across seeds (std is 0 for one seed)."""
    arr = np.asarray(curves, dtype=float)
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise ValidationError("curves must be a non-empty (n_seeds, n_queries) array")
    std = arr.std(axis=0, ddof=1) if arr.shape[0] > 1 else np.zeros(arr.shape[1])
    return CurveStats(np.arange(1, arr.shape[1] + 1), arr, arr.mean(axis=0), std)


def tail_start(n_queries: int, fraction: float = 0.25) -> int:
    """Index of the first query in the final ``fraction`` of the axis."""
    return int(np.floor(n_queries * (1.0 - fraction)))


def dominates_tail(a: np.ndarray, b: np.ndarray, fraction: float = 0.25) -> bool:
    """True if curve ``a`` is at least ``b`` at every query in the final ``fraction``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValidationError("curves must be aligned on the same query axis")
    start = tail_start(len(a), fraction)
    return bool(np.all(a[start:] >= b[start:]))


@dataclass
class LayerwiseFinding:
    best_uniform_label: str
    best_uniform_objectives: np.ndarray
    index: int  # row in the archive, -1 if none qualifies
    objectives: np.ndarray | None
    improved: tuple[str, ...]
    n_qualifying: int

    @property
    def found(self) -> bool:
        return self.index >= 0


def layerwise_vs_uniform(
    archive_objectives: np.ndarray,
    uniform_objectives: np.ndarray,
    uniform_labels: Sequence[str],
    names: Sequence[str],
    senses: Sequence[str],
    accuracy: str = "accuracy",
    tolerance: float = 1.0,
    min_improved: int = 2,
) -> LayerwiseFinding:
    """Look for an archived design matching the best uniform design's accuracy.

    A design qualifies if its ``accuracy`` is within ``tolerance`` (in the
    objective's own units, percentage points for the CIM model) of the most
    accurate uniform design and it is strictly better on at least
    ``min_improved`` of the remaining objectives. Among qualifying designs
    the one improving the most objectives wins, then the most accurate.
    """
    names = list(names)
    if accuracy not in names:
        raise ValidationError(f"no objective named {accuracy!r}")
    a = names.index(accuracy)
    sign = np.array([-1.0 if s == "max" else 1.0 for s in senses])
    U = np.asarray(uniform_objectives, dtype=float).reshape(-1, len(names))
    A = np.asarray(archive_objectives, dtype=float).reshape(-1, len(names))
    if len(U) == 0:
        raise ValidationError("no uniform designs to compare against")
    best = int(np.argmin(U[:, a] * sign[a]))
    ref = U[best]
    others = [k for k in range(len(names)) if k != a]
    close = np.abs(A[:, a] - ref[a]) <= tolerance
    # also accept anything more accurate than the reference
    close |= A[:, a] * sign[a] < ref[a] * sign[a]
    better = (A[:, others] * sign[others]) < (ref[others] * sign[others])
    n_better = better.sum(axis=1)
    ok = close & (n_better >= min_improved)
    if not ok.any():
        return LayerwiseFinding(uniform_labels[best], ref, -1, None, (), 0)
    cand = np.flatnonzero(ok)
    pick = min(cand, key=lambda i: (-n_better[i], A[i, a] * sign[a], i))
    improved = tuple(names[others[k]] for k in np.flatnonzero(better[pick]))
    return LayerwiseFinding(uniform_labels[best], ref, int(pick), A[pick], improved, int(ok.sum()))
