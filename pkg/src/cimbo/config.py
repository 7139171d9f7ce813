"""Experiment configuration files (TOML).

Every table is checked against the fields it may contain; unknown keys are
errors rather than silently ignored typos. ``emit`` writes the fully
resolved configuration back out, so ``parse(emit(cfg)) == cfg``.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from cimbo.bo import BoConfig
from cimbo.design_space import DesignSpace, LayerSpec, ParameterSpec, ValidationError, grid_space
from cimbo.evaluators import CimCostModelParams, CimEvaluator, Evaluator, SyntheticEvaluator
from cimbo.nsga2 import Nsga2Config
from cimbo.presets import PRESETS, SWEEPS

MODES = ("bo", "baseline", "sweep", "compare", "hv")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        where = f"{path or '<config>'}:{line}: " if line else f"{path}: " if path else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class SpaceConfig:
    preset: str = "vgg8"  # vgg8 | vgg16 | custom | grid
    layers: tuple[LayerSpec, ...] = ()
    params: tuple[ParameterSpec, ...] = ()
    n_genes: int = 0
    n_levels: int = 0

    def build(self) -> DesignSpace:
        if self.preset in PRESETS:
            return PRESETS[self.preset]()
        if self.preset == "custom":
            return DesignSpace(self.layers, self.params)
        if self.preset == "grid":
            if self.n_genes < 1 or self.n_levels < 1:
                raise ValidationError("grid space needs n_genes >= 1 and n_levels >= 1")
            return grid_space(self.n_genes, self.n_levels)
        raise ValidationError(f"unknown space preset {self.preset!r}")


@dataclass(frozen=True)
class EvaluatorConfig:
    kind: str = "cim"  # cim | zdt1 | dtlz2
    n_objectives: int = 2
    cim: CimCostModelParams = field(default_factory=CimCostModelParams)

    def build(self, space: DesignSpace) -> Evaluator:
        if self.kind == "cim":
            return CimEvaluator(space, self.cim)
        if self.kind in ("zdt1", "dtlz2"):
            return SyntheticEvaluator(space, self.kind, self.n_objectives)
        raise ValidationError(f"unknown evaluator kind {self.kind!r}")


@dataclass(frozen=True)
class BaselineConfig:
    population_size: int = 20
    budget: int | None = None  # None -> the BO budget
    crossover_probability: float = 0.9
    crossover_eta: float = 15.0
    mutation_probability: float | None = None
    mutation_eta: float = 20.0

    def nsga(self, budget: int, seed: int) -> Nsga2Config:
        if budget % self.population_size:
            raise ValidationError(
                f"baseline budget {budget} is not a multiple of population_size {self.population_size}"
            )
        return Nsga2Config(
            population_size=self.population_size,
            generations=budget // self.population_size - 1,
            crossover_probability=self.crossover_probability,
            crossover_eta=self.crossover_eta,
            mutation_probability=self.mutation_probability,
            mutation_eta=self.mutation_eta,
            rng_seed=seed,
        )


@dataclass(frozen=True)
class SweepVary:
    param: str
    values: tuple[int, ...]


@dataclass(frozen=True)
class SweepConfig:
    baseline: dict[str, int] | None = None
    vary: tuple[SweepVary, ...] | None = None

    def resolved(self, preset: str) -> tuple[dict[str, int], list[tuple[str, tuple[int, ...]]]]:
        base, vary = self.baseline, self.vary
        if (base is None or vary is None) and preset in SWEEPS:
            default_base, default_vary = SWEEPS[preset]
            base = base if base is not None else default_base
            vary = vary if vary is not None else tuple(SweepVary(p, tuple(v)) for p, v in default_vary)
        if base is None or vary is None:
            raise ValidationError("sweep needs 'baseline' and 'vary' for non-preset spaces")
        return dict(base), [(v.param, tuple(v.values)) for v in vary]


@dataclass(frozen=True)
class HvConfig:
    front: str | None = None
    ref: tuple[float, ...] | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "bo"
    seeds: tuple[int, ...] = (0,)
    output_dir: str = "runs/default"
    workers: int = 0  # 0 -> one per seed, capped at the CPU count
    space: SpaceConfig = field(default_factory=SpaceConfig)
    evaluator: EvaluatorConfig = field(default_factory=EvaluatorConfig)
    bo: BoConfig = field(default_factory=BoConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    hv: HvConfig = field(default_factory=HvConfig)

    def bo_for_seed(self, seed: int) -> BoConfig:
        return dataclasses.replace(self.bo, rng_seed=seed)

    @property
    def budget(self) -> int:
        return self.bo.budget

    @property
    def baseline_budget(self) -> int:
        return self.baseline.budget if self.baseline.budget is not None else self.bo.budget


# ---------------------------------------------------------------- parsing


def _line_of(text: str, path: tuple[str, ...]) -> int | None:
    """Best-effort 1-based line of the key at ``path`` in the TOML source."""
    if not text or not path:
        return None
    lines = text.splitlines()
    tables = [p for p in path[:-1] if not p.isdigit()]
    start = 0
    if tables:
        header = re.compile(r"^\s*\[\[?\s*" + r"\s*\.\s*".join(map(re.escape, tables)) + r"\s*\]\]?\s*(#.*)?$")
        for i, line in enumerate(lines):
            if header.match(line):
                start = i
                break
    key = re.compile(r"^\s*[\"']?" + re.escape(path[-1]) + r"[\"']?\s*=")
    for i in range(start, len(lines)):
        if key.match(lines[i]):
            return i + 1
    table = re.compile(r"^\s*\[\[?\s*(.*\.)?" + re.escape(path[-1]) + r"\s*\]\]?")
    for i, line in enumerate(lines):
        if table.match(line):
            return i + 1
    return None


class _Reader:
    def __init__(self, text: str, source: str | None):
        self.text = text
        self.source = source

    def fail(self, message: str, path: tuple[str, ...]) -> ConfigError:
        # fall back to the enclosing table, then the mode line, then the top of the file
        line = None
        for k in range(len(path), 0, -1):
            line = _line_of(self.text, path[:k])
            if line:
                break
        line = line or _line_of(self.text, ("mode",)) or 1
        return ConfigError(message, line, self.source)

    def table(self, data: Any, path: tuple[str, ...], allowed: set[str]) -> dict:
        if not isinstance(data, dict):
            raise self.fail(f"'{'.'.join(path)}' must be a table", path)
        for key in data:
            if key not in allowed:
                raise self.fail(
                    f"unknown key {key!r} in [{'.'.join(path) or 'top level'}]; "
                    f"allowed: {', '.join(sorted(allowed))}",
                    path + (key,),
                )
        return data

    def dataclass(self, cls, data: Any, path: tuple[str, ...], skip: tuple[str, ...] = (), nested: dict | None = None):
        nested = nested or {}
        names = {f.name for f in dataclasses.fields(cls) if f.init and f.name not in skip}
        data = self.table(data, path, names)
        kwargs = {}
        for key, value in data.items():
            if key in nested:
                kwargs[key] = nested[key](value, path + (key,))
            else:
                kwargs[key] = value
        try:
            return cls(**kwargs)
        except (ValidationError, TypeError, ValueError) as exc:
            bad = next((k for k in kwargs if k in str(exc)), None)
            raise self.fail(f"[{'.'.join(path)}] {exc}", path + ((bad,) if bad else ())) from exc


def _parse_space(r: _Reader, data: Any, path: tuple[str, ...]) -> SpaceConfig:
    data = dict(r.table(data, path, {"preset", "layers", "params", "n_genes", "n_levels"}))
    layers = tuple(
        r.dataclass(LayerSpec, row, path + ("layers",)) for row in data.pop("layers", [])
    )
    params = []
    for row in data.pop("params", []):
        row = r.table(row, path + ("params",), {"name", "scope", "levels"})
        params.append(r.dataclass(ParameterSpec, {**row, "levels": tuple(row.get("levels", ()))}, path + ("params",)))
    try:
        return SpaceConfig(layers=layers, params=tuple(params), **data)
    except TypeError as exc:
        raise r.fail(str(exc), path) from exc


def _parse_bo(r: _Reader, data: Any, path: tuple[str, ...]) -> BoConfig:
    def inner(value, p):
        return r.dataclass(Nsga2Config, value, p, skip=("rng_seed",))

    return r.dataclass(BoConfig, data, path, skip=("rng_seed",), nested={"inner": inner})


def _parse_sweep(r: _Reader, data: Any, path: tuple[str, ...]) -> SweepConfig:
    data = r.table(data, path, {"baseline", "vary"})
    base = data.get("baseline")
    if base is not None:
        base = {str(k): int(v) for k, v in r.table(base, path + ("baseline",), set(base)).items()}
    vary = data.get("vary")
    if vary is not None:
        vary = tuple(
            SweepVary(str(row["param"]), tuple(int(v) for v in row["values"]))
            for row in (r.table(v, path + ("vary",), {"param", "values"}) for v in vary)
        )
    return SweepConfig(base, vary)


def _from_dict(doc: dict, text: str = "", source: str | None = None) -> ExperimentConfig:
    r = _Reader(text, source)
    top = {f.name for f in dataclasses.fields(ExperimentConfig)}
    doc = dict(r.table(doc, (), top))
    kwargs: dict[str, Any] = {}
    if "mode" in doc:
        if doc["mode"] not in MODES:
            raise r.fail(f"mode must be one of {', '.join(MODES)}, got {doc['mode']!r}", ("mode",))
        kwargs["mode"] = doc["mode"]
    if "seeds" in doc:
        seeds = doc["seeds"]
        if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
            raise r.fail("seeds must be a non-empty list of integers", ("seeds",))
        kwargs["seeds"] = tuple(seeds)
    for key in ("output_dir", "workers"):
        if key in doc:
            kwargs[key] = doc[key]
    if "space" in doc:
        kwargs["space"] = _parse_space(r, doc["space"], ("space",))
    if "evaluator" in doc:
        kwargs["evaluator"] = r.dataclass(
            EvaluatorConfig, doc["evaluator"], ("evaluator",),
            nested={"cim": lambda v, p: r.dataclass(CimCostModelParams, v, p)},
        )
    if "bo" in doc:
        kwargs["bo"] = _parse_bo(r, doc["bo"], ("bo",))
    if "baseline" in doc:
        kwargs["baseline"] = r.dataclass(BaselineConfig, doc["baseline"], ("baseline",))
    if "sweep" in doc:
        kwargs["sweep"] = _parse_sweep(r, doc["sweep"], ("sweep",))
    if "hv" in doc:
        hv = r.table(doc["hv"], ("hv",), {"front", "ref"})
        ref = hv.get("ref")
        if ref is not None and not (isinstance(ref, list) and all(isinstance(v, (int, float)) for v in ref)):
            raise r.fail("hv.ref must be a list of numbers", ("hv", "ref"))
        kwargs["hv"] = HvConfig(hv.get("front"), None if ref is None else tuple(float(v) for v in ref))
    cfg = ExperimentConfig(**kwargs)
    _check(cfg, r)
    return cfg


def _check(cfg: ExperimentConfig, r: _Reader) -> None:
    try:
        space = cfg.space.build()
    except ValidationError as exc:
        raise r.fail(str(exc), ("space", "preset")) from exc
    try:
        cfg.evaluator.build(space)
    except ValidationError as exc:
        raise r.fail(f"evaluator {cfg.evaluator.kind!r} does not fit this space: {exc}", ("evaluator", "kind")) from exc
    if cfg.mode in ("baseline", "compare"):
        try:
            cfg.baseline.nsga(cfg.baseline_budget, 0)
        except ValidationError as exc:
            raise r.fail(str(exc), ("baseline", "population_size")) from exc
    if cfg.mode == "compare" and cfg.baseline_budget != cfg.budget:
        raise r.fail(
            f"compare mode needs equal budgets: BO spends {cfg.budget} queries, baseline {cfg.baseline_budget}",
            ("baseline", "budget"),
        )
    if cfg.mode == "sweep":
        try:
            cfg.sweep.resolved(cfg.space.preset)
        except ValidationError as exc:
            raise r.fail(str(exc), ("sweep", "vary")) from exc
    if cfg.mode == "hv" and (cfg.hv.front is None or cfg.hv.ref is None):
        raise r.fail("hv mode needs [hv] front and ref", ("hv",))
    if cfg.workers < 0:
        raise r.fail("workers must be >= 0", ("workers",))


def parse_text(text: str, source: str | None = None) -> ExperimentConfig:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        line = int(m.group(1)) if m else max(1, len(text.splitlines()))
        raise ConfigError(f"syntax error: {exc}", line, source) from exc
    return _from_dict(doc, text, source)


def parse_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=str(path)) from exc
    return parse_text(text, str(path))


# ---------------------------------------------------------------- emitting


def _plain(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.init}
    if isinstance(obj, (tuple, list)):
        return [_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    return obj


def _drop_none(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _drop_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, list):
        return [_drop_none(v) for v in obj]
    return obj


def to_dict(cfg: ExperimentConfig) -> dict:
    """Resolved configuration as plain data (``None`` kept, for JSON)."""
    doc = _plain(cfg)
    doc["bo"].pop("rng_seed")
    doc["bo"]["inner"].pop("rng_seed")
    space = doc["space"]
    if cfg.space.preset != "custom":
        space.pop("layers")
        space.pop("params")
    if cfg.space.preset != "grid":
        space.pop("n_genes")
        space.pop("n_levels")
    return doc


def emit(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(_drop_none(to_dict(cfg)))
