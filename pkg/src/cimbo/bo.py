"""Multi-objective Bayesian optimization loop and the NSGA-II baseline.

One iteration: retrain one GP per objective, score ``n_sur`` random designs
with LCB, polish the acquisition front with NSGA-II seeded from the best of
those, turn each front member into an optimistic objective vector, and
spend the single expensive query on the member with the largest
hypervolume improvement over the archive of true observations.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from cimbo import gp
from cimbo.acquisition import DEFAULT_BETA, score_batch
from cimbo.design_space import (
    DesignPoint,
    DesignSpace,
    ValidationError,
    cardinality,
    decode_indices,
    encode,
    encode_indices,
    sample_indices,
)
from cimbo.evaluators import Evaluator
from cimbo.nsga2 import Nsga2Config, crowding_distance, evolve, select_survivors
from cimbo.pareto import ParetoArchive, hvi, reference_from_observations

log = logging.getLogger(__name__)

INIT_STREAM, LOOP_STREAM = 0, 1


@dataclass(frozen=True)
class BoConfig:
    n_init: int = 10
    n_iterations: int = 190
    n_sur: int = 2000
    beta: float = DEFAULT_BETA
    epochs: int = 250
    step_size: float = 0.05
    inner: Nsga2Config = field(default_factory=Nsga2Config)
    rng_seed: int = 0
    ref_margin: float = 0.1

    def __post_init__(self) -> None:
        if self.n_init < 2:
            raise ValidationError("n_init must be >= 2")
        if self.n_iterations < 0:
            raise ValidationError("n_iterations must be >= 0")
        if self.n_sur < self.inner.population_size:
            raise ValidationError("n_sur must be >= the inner population size")
        if self.beta < 0:
            raise ValidationError("beta must be >= 0")
        if self.epochs < 0 or self.step_size <= 0:
            raise ValidationError("epochs must be >= 0 and step_size > 0")
        if self.ref_margin < 0:
            raise ValidationError("ref_margin must be >= 0")

    @property
    def budget(self) -> int:
        return self.n_init + self.n_iterations


@dataclass
class IterationRecord:
    iteration: int
    phase: str  # "init", "bo" or "nsga2"
    point: DesignPoint
    objectives: np.ndarray  # raw units, natural sense
    hypervolume: float
    queries: int
    accepted: bool
    wall_time: float


@dataclass
class RunLog:
    objective_names: tuple[str, ...]
    objective_senses: tuple[str, ...]
    slot_names: list[str]
    reference_point: np.ndarray | None = None  # internal (minimization) units
    records: list[IterationRecord] = field(default_factory=list)
    archive: ParetoArchive | None = None

    @property
    def hv_curve(self) -> np.ndarray:
        return np.array([r.hypervolume for r in self.records])


@dataclass
class BoState:
    config: BoConfig
    space: DesignSpace
    evaluator: Evaluator
    X: np.ndarray
    Y: np.ndarray  # internal units
    evaluated: set[tuple[int, ...]]
    archive: ParetoArchive
    models: list[gp.GpModel]
    models_trained: bool
    hv: float
    iteration: int
    rng: np.random.Generator
    log: RunLog


def initial_design(space: DesignSpace, n: int, seed: int) -> list[DesignPoint]:
    """``n`` distinct uniform samples drawn from the run's initialization stream."""
    if n > cardinality(space):
        raise ValidationError(f"cannot draw {n} distinct designs from a space of {cardinality(space)}")
    rng = np.random.default_rng([seed, INIT_STREAM])
    seen: set[tuple[int, ...]] = set()
    out: list[DesignPoint] = []
    while len(out) < n:
        for row in sample_indices(space, n - len(out), rng).tolist():
            key = tuple(row)
            if key not in seen and len(out) < n:
                seen.add(key)
                out.append(DesignPoint(key))
    return out


def _new_log(space: DesignSpace, evaluator: Evaluator) -> RunLog:
    return RunLog(tuple(evaluator.objective_names), tuple(evaluator.objective_senses), space.slot_names)


def initialize(
    config: BoConfig,
    space: DesignSpace,
    evaluator: Evaluator,
    on_record: Callable[[IterationRecord], None] | None = None,
) -> BoState:
    if evaluator.query_count != 0:
        raise ValidationError("initialize needs a fresh evaluator")
    points = initial_design(space, config.n_init, config.rng_seed)
    start = time.perf_counter()
    raw = [evaluator.evaluate(p) for p in points]
    Y = np.vstack([evaluator.to_internal(r) for r in raw])
    run_log = _new_log(space, evaluator)
    archive = ParetoArchive(evaluator.n_objectives)
    archive.freeze(reference_from_observations(Y, config.ref_margin))
    run_log.reference_point = archive.reference_point.copy()
    run_log.archive = archive
    hv = 0.0
    for q, (p, r, y) in enumerate(zip(points, raw, Y), start=1):
        hv += hvi(archive, y)
        accepted = archive.insert(p, y) == "accepted"
        rec = IterationRecord(0, "init", p, r, hv, q, accepted, time.perf_counter() - start)
        run_log.records.append(rec)
        if on_record:
            on_record(rec)
    X = np.vstack([encode(p, space) for p in points])
    models = gp.fit_many(X, Y, epochs=config.epochs, step_size=config.step_size)
    return BoState(
        config=config,
        space=space,
        evaluator=evaluator,
        X=X,
        Y=Y,
        evaluated={p.indices for p in points},
        archive=archive,
        models=models,
        models_trained=True,
        hv=hv,
        iteration=0,
        rng=np.random.default_rng([config.rng_seed, LOOP_STREAM]),
        log=run_log,
    )


def propose(state: BoState) -> tuple[DesignPoint, dict]:
    """Pick the next design to query; does not touch the evaluator."""
    cfg, space = state.config, state.space
    if not state.models_trained:
        state.models = gp.fit_many(state.X, state.Y, epochs=cfg.epochs, step_size=cfg.step_size)
        state.models_trained = True
    models = state.models

    pool = encode_indices(sample_indices(space, cfg.n_sur, state.rng), space)
    pool_scores = score_batch(models, pool, cfg.beta)
    seeds = select_survivors(pool_scores, cfg.inner.population_size)
    inner = replace(cfg.inner, rng_seed=int(state.rng.integers(2**31)))
    result = evolve(
        lambda G: score_batch(models, G, cfg.beta),
        inner,
        initial=pool[seeds],
        space=space,
        vectorized=True,
    )
    mean = np.array([m.target_mean for m in models])
    std = np.array([m.target_std for m in models])
    predicted = mean + std * result.front_fitness
    crowd = crowding_distance(result.front_fitness)
    fresh = [i for i, p in enumerate(result.front_points) if p.indices not in state.evaluated]
    info = {"front_size": len(predicted), "fresh": len(fresh)}
    if not fresh:
        return _random_unevaluated(state), {**info, "hvi": 0.0, "fallback": True}
    gains = {i: hvi(state.archive, predicted[i]) for i in fresh}
    best = min(fresh, key=lambda i: (-gains[i], -crowd[i], i))
    return result.front_points[best], {**info, "hvi": gains[best], "fallback": False}


def _random_unevaluated(state: BoState) -> DesignPoint:
    if len(state.evaluated) >= cardinality(state.space):
        raise RuntimeError("every design in the space has already been evaluated")
    while True:
        row = tuple(sample_indices(state.space, 1, state.rng)[0].tolist())
        if row not in state.evaluated:
            return DesignPoint(row)


def step(state: BoState, on_record: Callable[[IterationRecord], None] | None = None) -> BoState:
    start = time.perf_counter()
    point, info = propose(state)
    raw = state.evaluator.evaluate(point)
    y = state.evaluator.to_internal(raw)
    state.hv += hvi(state.archive, y)
    accepted = state.archive.insert(point, y) == "accepted"
    x = encode(point, state.space)
    state.X = np.vstack([state.X, x])
    state.Y = np.vstack([state.Y, y])
    state.evaluated.add(point.indices)
    state.models = [gp.update(m, x, y[k]) for k, m in enumerate(state.models)]
    state.models_trained = False
    state.iteration += 1
    rec = IterationRecord(
        state.iteration, "bo", point, raw, state.hv, state.evaluator.query_count, accepted,
        time.perf_counter() - start,
    )
    state.log.records.append(rec)
    log.debug(
        "iter %d: hvi_pred=%.4g front=%d accepted=%s hv=%.6g",
        state.iteration, info["hvi"], info["front_size"], accepted, state.hv,
    )
    if on_record:
        on_record(rec)
    return state


def run(
    config: BoConfig,
    space: DesignSpace,
    evaluator: Evaluator,
    on_record: Callable[[IterationRecord], None] | None = None,
) -> RunLog:
    state = initialize(config, space, evaluator, on_record)
    for _ in range(config.n_iterations):
        step(state, on_record)
    return state.log


def initial_reference(config: BoConfig, space: DesignSpace, evaluator: Evaluator) -> np.ndarray:
    """The reference point a BO run with ``config`` would freeze (internal units)."""
    points = initial_design(space, config.n_init, config.rng_seed)
    Y = np.vstack([evaluator.to_internal(evaluator.evaluate(p)) for p in points])
    return reference_from_observations(Y, config.ref_margin)


def run_baseline(
    nsga_config: Nsga2Config,
    space: DesignSpace,
    evaluator: Evaluator,
    reference_point: np.ndarray,
    on_record: Callable[[IterationRecord], None] | None = None,
) -> RunLog:
    """NSGA-II spending every fitness evaluation on the expensive evaluator."""
    run_log = _new_log(space, evaluator)
    archive = ParetoArchive(evaluator.n_objectives)
    archive.freeze(reference_point)
    run_log.reference_point = archive.reference_point.copy()
    run_log.archive = archive
    hv = 0.0
    start = time.perf_counter()
    pop = nsga_config.population_size

    def fitness(x: np.ndarray) -> np.ndarray:
        nonlocal hv
        point = DesignPoint(tuple(decode_indices(x, space).tolist()))
        raw = evaluator.evaluate(point)
        y = evaluator.to_internal(raw)
        hv += hvi(archive, y)
        accepted = archive.insert(point, y) == "accepted"
        q = len(run_log.records) + 1
        rec = IterationRecord((q - 1) // pop, "nsga2", point, raw, hv, q, accepted, time.perf_counter() - start)
        run_log.records.append(rec)
        if on_record:
            on_record(rec)
        return y

    evolve(fitness, nsga_config, space=space)
    return run_log


def baseline_config_for_budget(budget: int, population_size: int, template: Nsga2Config) -> Nsga2Config:
    if budget % population_size:
        raise ValidationError(
            f"baseline budget {budget} is not a multiple of population_size {population_size}"
        )
    generations = budget // population_size - 1
    return replace(template, population_size=population_size, generations=generations)


def reevaluate_archive(archive: ParetoArchive, evaluator: Evaluator) -> bool:
    """True if every archived design reproduces its stored objectives bit-exactly."""
    return all(
        np.array_equal(evaluator.to_internal(evaluator.evaluate(p)), y) for p, y in archive.entries()
    )

