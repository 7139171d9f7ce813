"""Expensive-evaluator contract and its implementations.

``CimEvaluator`` is a closed-form crossbar CIM cost model used in place of
a circuit-level simulator; its accuracy output is a quantization-noise proxy
and is synthetic. ``SyntheticEvaluator`` wraps ZDT1 / DTLZ2 for validation.

Evaluators return raw objective values in their natural sense. The
``to_internal`` helper negates maximize-sense objectives so that all
downstream code minimizes.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, fields
from typing import Literal, Mapping, Sequence

import numpy as np

from cimbo.design_space import (
    DesignPoint,
    DesignSpace,
    ValidationError,
    check_point,
    encode,
    uniform_point,
)

Sense = Literal["min", "max"]


class Evaluator:
    """Base class: subclasses implement ``_evaluate`` and set names/senses."""

    objective_names: tuple[str, ...] = ()
    objective_senses: tuple[Sense, ...] = ()

    def __init__(self, space: DesignSpace):
        self.space = space
        self._count = 0
        self._lock = threading.Lock()

    @property
    def query_count(self) -> int:
        return self._count

    @property
    def n_objectives(self) -> int:
        return len(self.objective_names)

    @property
    def sign(self) -> np.ndarray:
        return np.array([-1.0 if s == "max" else 1.0 for s in self.objective_senses])

    def evaluate(self, point: DesignPoint) -> np.ndarray:
        check_point(point, self.space)
        with self._lock:
            self._count += 1
        return self._evaluate(point)

    def _evaluate(self, point: DesignPoint) -> np.ndarray:
        raise NotImplementedError

    def to_internal(self, raw) -> np.ndarray:
        return np.asarray(raw, dtype=float) * self.sign

    def to_raw(self, internal) -> np.ndarray:
        return np.asarray(internal, dtype=float) * self.sign


@dataclass(frozen=True)
class CimCostModelParams:
    """Constants of the analytical crossbar model.

    Units are chosen so that VGG8-sized networks land near mm^2, ms and uJ.
    ADC area and energy scale as 2**bits, ADC conversion time linearly in bits.
    """

    cell_area: float = 5.0e-8  # mm^2 per 1-bit cell
    cell_read_energy: float = 2.5e-10  # uJ per cell access
    peripheral_area_fraction: float = 0.3
    adc_area_unit: float = 6.0e-6  # mm^2 per 2**bit
    adc_energy_unit: float = 4.0e-8  # uJ per conversion per 2**bit
    adc_time_unit: float = 2.5e-7  # ms per conversion per bit
    cycle_time: float = 5.0e-6  # ms per input bit per output position
    accuracy_ceiling: float = 0.97
    alpha_weight: float = 0.06
    alpha_input: float = 0.6
    alpha_adc: float = 0.65

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name.startswith("alpha_"):
                if value < 0:
                    raise ValidationError(f"{f.name} must be >= 0")
            elif not value > 0:
                raise ValidationError(f"{f.name} must be > 0")
        if self.accuracy_ceiling > 1:
            raise ValidationError("accuracy_ceiling is a fraction in (0, 1]")

    def adc_area(self, bits: int) -> float:
        return self.adc_area_unit * 2.0**bits

    def adc_energy(self, bits: int) -> float:
        return self.adc_energy_unit * 2.0**bits

    def adc_time(self, bits: int) -> float:
        return self.adc_time_unit * bits


CIM_OBJECTIVES = ("accuracy", "area", "latency", "energy", "memory_utilization")
CIM_SENSES: tuple[Sense, ...] = ("max", "min", "min", "min", "max")
CIM_PARAMS = ("WBP", "IBP", "CSS", "ABP", "CCM")


def evaluate_cim(point: DesignPoint, space: DesignSpace, params: CimCostModelParams) -> np.ndarray:
    """(accuracy %, area, latency, energy, memory utilization %) of one design."""
    v = space.values(point)
    for name, scope in zip(CIM_PARAMS, ("per-layer",) * 3 + ("global",) * 2):
        if name not in v or space.param(name).scope != scope:
            raise ValidationError(f"CIM space needs {scope} parameter {name!r}")
    abp, ccm = int(v["ABP"]), int(v["CCM"])
    area = latency = energy = used = provisioned = noise = 0.0
    for layer, wbp, ibp, css in zip(space.layers, v["WBP"], v["IBP"], v["CSS"]):
        R, C, P = layer.fan_in, layer.fan_out, layer.output_positions
        columns = C * wbp
        row_blocks = math.ceil(R / css)
        subarrays = row_blocks * math.ceil(columns / css)
        adcs_per_subarray = css / ccm
        area += subarrays * (css * css * params.cell_area * (1.0 + params.peripheral_area_fraction)
                             + adcs_per_subarray * params.adc_area(abp))
        latency += P * ibp * (ccm * params.adc_time(abp) * row_blocks + params.cycle_time)
        energy += P * ibp * (R * columns * params.cell_read_energy
                             + subarrays * adcs_per_subarray * params.adc_energy(abp))
        used += R * columns
        provisioned += subarrays * css * css
        noise += layer.sensitivity * (
            params.alpha_weight * 2.0 ** (-2 * wbp)
            + params.alpha_input * 2.0 ** (-2 * ibp)
            + params.alpha_adc * 2.0 ** (-2 * abp) * math.log2(css)
        )
    accuracy = params.accuracy_ceiling * (1.0 - min(1.0, noise)) * 100.0
    return np.array([accuracy, area, latency, energy, 100.0 * used / provisioned])


class CimEvaluator(Evaluator):
    objective_names = CIM_OBJECTIVES
    objective_senses = CIM_SENSES

    def __init__(self, space: DesignSpace, params: CimCostModelParams | None = None):
        super().__init__(space)
        self.params = params or CimCostModelParams()
        for name in CIM_PARAMS:
            space.param(name)

    def _evaluate(self, point: DesignPoint) -> np.ndarray:
        return evaluate_cim(point, self.space, self.params)


def zdt1(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    f1 = x[0]
    g = 1.0 + 9.0 * np.sum(x[1:]) / (len(x) - 1)
    return np.array([f1, g * (1.0 - math.sqrt(f1 / g))])


def dtlz2(x: np.ndarray, m: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = float(np.sum((x[m - 1 :] - 0.5) ** 2))
    f = np.full(m, 1.0 + g)
    for i in range(m):
        f[i] *= np.prod(np.cos(0.5 * np.pi * x[: m - 1 - i]))
        if i > 0:
            f[i] *= math.sin(0.5 * np.pi * x[m - 1 - i])
    return f


def evaluate_synthetic(point: DesignPoint, space: DesignSpace, problem: str, m: int = 2) -> np.ndarray:
    x = encode(point, space)
    if problem == "zdt1":
        if m != 2 or len(x) < 2:
            raise ValidationError("zdt1 has 2 objectives and needs >= 2 genes")
        return zdt1(x)
    if problem == "dtlz2":
        if m < 2 or len(x) < m:
            raise ValidationError(f"dtlz2 with {m} objectives needs >= {m} genes, got {len(x)}")
        return dtlz2(x, m)
    raise ValidationError(f"unknown synthetic problem {problem!r}")


class SyntheticEvaluator(Evaluator):
    def __init__(self, space: DesignSpace, problem: str = "zdt1", m: int = 2):
        super().__init__(space)
        self.problem = problem
        self.m = m
        self.objective_names = tuple(f"f{i + 1}" for i in range(m))
        self.objective_senses = ("min",) * m
        # surface configuration errors before any query is spent
        evaluate_synthetic(DesignPoint((0,) * space.dimension), space, problem, m)

    def _evaluate(self, point: DesignPoint) -> np.ndarray:
        return evaluate_synthetic(point, self.space, self.problem, self.m)


def expand_sweep(baseline: Mapping[str, int], vary: Sequence[tuple[str, Sequence[int]]]) -> list[tuple[str, dict[str, int]]]:
    """One uniform assignment per (parameter, value), others at baseline."""
    rows = []
    for name, values in vary:
        if name not in baseline:
            raise ValidationError(f"sweep varies {name!r} which has no baseline value")
        for value in values:
            assignment = dict(baseline)
            assignment[name] = int(value)
            rows.append((f"{name}={value}", assignment))
    return rows


def sweep_uniform(
    space: DesignSpace, evaluator: Evaluator, overrides: Sequence[Mapping[str, int]]
) -> list[tuple[DesignPoint, np.ndarray]]:
    points = [uniform_point(space, a) for a in overrides]
    return [(p, evaluator.evaluate(p)) for p in points]
