"""Discrete layer-wise design spaces for crossbar CIM accelerators.

A design is a vector of level indices, one per *slot*. Per-layer parameters
(weight/input bit precision, subarray size) contribute one slot per network
layer; global parameters (ADC bits, column mux) contribute a single slot.

Optimizers see designs through an ordinal embedding: slot index ``i`` out of
``L`` levels maps to ``i / (L - 1)`` in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np


class ValidationError(ValueError):
    """Raised when a design, vector or space declaration is malformed."""


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    scope: Literal["per-layer", "global"]
    levels: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))
        if self.scope not in ("per-layer", "global"):
            raise ValidationError(f"parameter {self.name!r}: unknown scope {self.scope!r}")
        if not self.levels:
            raise ValidationError(f"parameter {self.name!r}: levels must be non-empty")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValidationError(
                f"parameter {self.name!r}: levels must be strictly increasing, got {list(self.levels)}"
            )


@dataclass(frozen=True)
class LayerSpec:
    """One network layer as seen by the crossbar mapper.

    ``fan_in`` is in_channels * kernel_h * kernel_w for convolutions, and
    ``output_positions`` counts spatial outputs per image (1 for linear layers).
    """

    name: str
    kind: Literal["conv", "linear"]
    fan_in: int
    fan_out: int
    output_positions: int = 1
    sensitivity: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("conv", "linear"):
            raise ValidationError(f"layer {self.name!r}: kind must be conv or linear")
        for attr in ("fan_in", "fan_out", "output_positions"):
            if int(getattr(self, attr)) < 1:
                raise ValidationError(f"layer {self.name!r}: {attr} must be >= 1")
        if not self.sensitivity >= 0:
            raise ValidationError(f"layer {self.name!r}: sensitivity must be >= 0")


@dataclass(frozen=True)
class Slot:
    name: str
    param: str
    layer: int | None
    levels: tuple[int, ...]


@dataclass(frozen=True)
class DesignSpace:
    layers: tuple[LayerSpec, ...]
    params: tuple[ParameterSpec, ...]
    slots: tuple[Slot, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "params", tuple(self.params))
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate parameter names in {names}")
        slots = []
        for p in self.params:
            if p.scope == "per-layer":
                for li, layer in enumerate(self.layers):
                    slots.append(Slot(f"{p.name}[{layer.name}]", p.name, li, p.levels))
            else:
                slots.append(Slot(p.name, p.name, None, p.levels))
        if not slots:
            raise ValidationError("design space has no slots")
        object.__setattr__(self, "slots", tuple(slots))
        object.__setattr__(
            self, "_n_levels", np.array([len(s.levels) for s in slots], dtype=np.int64)
        )

    @property
    def dimension(self) -> int:
        return len(self.slots)

    @property
    def n_levels(self) -> np.ndarray:
        return self._n_levels  # type: ignore[attr-defined]

    @property
    def slot_names(self) -> list[str]:
        return [s.name for s in self.slots]

    def param(self, name: str) -> ParameterSpec:
        for p in self.params:
            if p.name == name:
                return p
        raise ValidationError(f"unknown parameter {name!r}")

    def values(self, point: DesignPoint) -> dict[str, int | list[int]]:
        """Raw parameter values of ``point``; per-layer parameters give lists."""
        check_point(point, self)
        out: dict[str, int | list[int]] = {}
        for slot, idx in zip(self.slots, point.indices):
            value = slot.levels[idx]
            if slot.layer is None:
                out[slot.param] = value
            else:
                out.setdefault(slot.param, []).append(value)  # type: ignore[union-attr]
        return out


@dataclass(frozen=True, order=True)
class DesignPoint:
    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))


def grid_space(n_genes: int, n_levels: int) -> DesignSpace:
    """A layer-free space of ``n_genes`` global slots with levels 0..n_levels-1."""
    params = tuple(
        ParameterSpec(f"x{i}", "global", tuple(range(n_levels))) for i in range(n_genes)
    )
    return DesignSpace(layers=(), params=params)


def check_point(point: DesignPoint, space: DesignSpace) -> None:
    if len(point.indices) != space.dimension:
        raise ValidationError(
            f"design has {len(point.indices)} indices, space has dimension {space.dimension}"
        )
    for slot, idx in zip(space.slots, point.indices):
        if not 0 <= idx < len(slot.levels):
            raise ValidationError(
                f"slot {slot.name!r}: index {idx} out of range [0, {len(slot.levels) - 1}]"
            )


def encode(point: DesignPoint, space: DesignSpace) -> np.ndarray:
    check_point(point, space)
    return encode_indices(np.asarray(point.indices, dtype=np.int64), space)


def encode_indices(indices: np.ndarray, space: DesignSpace) -> np.ndarray:
    """Vectorised encode for an (..., D) integer index array (no validation)."""
    denom = np.maximum(space.n_levels - 1, 1)
    return np.asarray(indices, dtype=float) / denom


def decode(vector: Sequence[float] | np.ndarray, space: DesignSpace) -> DesignPoint:
    v = np.asarray(vector, dtype=float)
    if v.shape != (space.dimension,):
        raise ValidationError(f"vector has shape {v.shape}, expected ({space.dimension},)")
    return DesignPoint(tuple(decode_indices(v, space).tolist()))


def decode_indices(vectors: np.ndarray, space: DesignSpace) -> np.ndarray:
    """Clamp to [0, 1] and round to the nearest grid index, midpoints upward."""
    v = np.asarray(vectors, dtype=float)
    if not np.all(np.isfinite(v)):
        bad = np.argwhere(~np.isfinite(v))[0][-1]
        raise ValidationError(f"slot {space.slots[bad].name!r}: non-finite coordinate")
    scaled = np.clip(v, 0.0, 1.0) * (space.n_levels - 1)
    return np.floor(scaled + 0.5).astype(np.int64)


def snap(vectors: np.ndarray, space: DesignSpace) -> np.ndarray:
    """Project continuous vectors onto the embedded grid."""
    return encode_indices(decode_indices(vectors, space), space)


def sample_uniform(space: DesignSpace, n: int, rng_seed: int | np.random.Generator) -> list[DesignPoint]:
    if n < 1:
        raise ValidationError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(rng_seed)
    idx = sample_indices(space, n, rng)
    return [DesignPoint(tuple(row)) for row in idx.tolist()]


def sample_indices(space: DesignSpace, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, space.n_levels, size=(n, space.dimension))


def cardinality(space: DesignSpace) -> int:
    return math.prod(len(s.levels) for s in space.slots)


def uniform_point(space: DesignSpace, assignment: Mapping[str, int]) -> DesignPoint:
    """The design that sets every slot of each parameter to the given raw value."""
    missing = [p.name for p in space.params if p.name not in assignment]
    if missing:
        raise ValidationError(f"uniform assignment is missing parameters {missing}")
    unknown = sorted(set(assignment) - {p.name for p in space.params})
    if unknown:
        raise ValidationError(f"uniform assignment names unknown parameters {unknown}")
    indices = []
    for slot in space.slots:
        value = int(assignment[slot.param])
        if value not in slot.levels:
            raise ValidationError(
                f"parameter {slot.param!r}: level {value} not in {list(slot.levels)}"
            )
        indices.append(slot.levels.index(value))
    return DesignPoint(tuple(indices))


def enumerate_points(space: DesignSpace) -> Iterable[DesignPoint]:
    """All designs in lexicographic index order; only sensible for tiny spaces."""
    for combo in np.ndindex(*space.n_levels.tolist()):
        yield DesignPoint(combo)
