"""Command-line front end.

    cimbo run --config P [--seed N] [--out DIR]
    cimbo hv --front CSV --ref v1,...,vM
    cimbo sweep --config P [--out DIR]
    cimbo compare --config P [--out DIR]

Exit status: 0 success, 1 configuration or input error, 2 runtime failure.
``CIMBO_LOG`` sets the log level (e.g. DEBUG, INFO; default WARNING).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import platform
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path
from typing import Sequence

import numpy as np

from cimbo import bo, io
from cimbo.analysis import curve_stats, dominates_tail, layerwise_vs_uniform
from cimbo.config import ConfigError, ExperimentConfig, parse_config, to_dict
from cimbo.design_space import DesignSpace, ValidationError, uniform_point
from cimbo.evaluators import expand_sweep
from cimbo.pareto import MAX_EXACT_OBJECTIVES, hypervolume_exact, hypervolume_mc

log = logging.getLogger("cimbo")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which means runtime failure here
        raise UsageError(f"{self.prog}: {message}")


def versions() -> dict[str, str]:
    out = {"python": platform.python_version()}
    for dist in ("artifact", "numpy", "scipy", "numba"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = "unknown"
    return out


def _meta(cfg: ExperimentConfig, **extra) -> dict:
    return {"config": to_dict(cfg), **extra, "versions": versions()}


# ------------------------------------------------------------------ jobs


@dataclasses.dataclass(frozen=True)
class Job:
    method: str  # "bo" or "nsga2"
    seed: int
    out_dir: str


def _run_job(cfg: ExperimentConfig, job: Job) -> dict:
    """One seed of one method; writes its artifacts and returns a summary."""
    out = Path(job.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    space = cfg.space.build()
    evaluator = cfg.evaluator.build(space)
    meta = _meta(cfg, seed=job.seed, method=job.method, status="running")
    io.write_json(out / "meta.json", meta)
    writer = io.RunLogWriter(out / "runlog.csv", space.slot_names, evaluator.objective_names, evaluator.objective_senses)
    try:
        if job.method == "bo":
            budget = cfg.budget
            run_log = bo.run(cfg.bo_for_seed(job.seed), space, evaluator, writer)
        else:
            budget = cfg.baseline_budget
            # reference from a separate pre-pass so the baseline's counter only sees its own budget
            ref = bo.initial_reference(cfg.bo_for_seed(job.seed), space, cfg.evaluator.build(space))
            run_log = bo.run_baseline(cfg.baseline.nsga(budget, job.seed), space, evaluator, ref, writer)
    except Exception as exc:
        meta.update(status="failed", error=f"{type(exc).__name__}: {exc}", queries=evaluator.query_count)
        io.write_json(out / "meta.json", meta)
        raise
    finally:
        writer.close()
    if evaluator.query_count != budget:
        raise RuntimeError(f"{job.method} seed {job.seed}: {evaluator.query_count} queries, budget {budget}")
    io.write_archive(out, run_log, space)
    io.write_timings(out / "timings.csv", run_log)
    sign = evaluator.sign
    final_hv = run_log.records[-1].hypervolume if run_log.records else 0.0
    meta.update(
        status="complete",
        queries=evaluator.query_count,
        budget=budget,
        reference_point=(run_log.reference_point * sign).tolist(),
        final_hypervolume=final_hv,
        archive_size=len(run_log.archive),
    )
    io.write_json(out / "meta.json", meta)
    return {
        "method": job.method,
        "seed": job.seed,
        "queries": evaluator.query_count,
        "hv_curve": run_log.hv_curve,
        "reference_point": run_log.reference_point,
        "out_dir": str(out),
    }


def _workers(cfg: ExperimentConfig, n_jobs: int) -> int:
    limit = cfg.workers or (os.cpu_count() or 1)
    return max(1, min(limit, n_jobs))


def run_jobs(cfg: ExperimentConfig, jobs: Sequence[Job]) -> list[dict]:
    n = _workers(cfg, len(jobs))
    if n == 1:
        return [_run_job(cfg, j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_run_job, [cfg] * len(jobs), jobs))


# ------------------------------------------------------------------ modes


def run_mode(cfg: ExperimentConfig, out: Path) -> int:
    if cfg.mode == "sweep":
        run_sweep(cfg, out)
    elif cfg.mode == "compare":
        run_compare(cfg, out)
    elif cfg.mode == "hv":
        print(repr(front_hypervolume(Path(cfg.hv.front), cfg.hv.ref)))
    else:
        method = "bo" if cfg.mode == "bo" else "nsga2"
        for r in run_jobs(cfg, [Job(method, s, str(out / f"seed_{s}")) for s in cfg.seeds]):
            print(f"{method} seed {r['seed']}: {r['queries']} queries, final hv {float(r['hv_curve'][-1])!r}")
    return 0


def sweep_rows(cfg: ExperimentConfig, space: DesignSpace):
    base, vary = cfg.sweep.resolved(cfg.space.preset)
    evaluator = cfg.evaluator.build(space)
    rows = []
    for label, assignment in expand_sweep(base, vary):
        point = uniform_point(space, assignment)
        rows.append((label, point, evaluator.evaluate(point)))
    return rows, evaluator


def write_sweep(path: Path, rows, space: DesignSpace, evaluator) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", *space.slot_names, *io.objective_header(evaluator.objective_names, evaluator.objective_senses)])
        for label, point, y in rows:
            w.writerow([label, *point.indices, *map(repr, map(float, y))])


def run_sweep(cfg: ExperimentConfig, out: Path) -> list:
    out.mkdir(parents=True, exist_ok=True)
    space = cfg.space.build()
    rows, evaluator = sweep_rows(cfg, space)
    write_sweep(out / "sweep.csv", rows, space, evaluator)
    io.write_json(out / "meta.json", _meta(cfg, rows=len(rows)))
    for label, _, y in rows:
        print(label, " ".join(f"{n}={v:.6g}" for n, v in zip(evaluator.objective_names, y)))
    return rows


def run_compare(cfg: ExperimentConfig, out: Path) -> dict:
    if cfg.budget != cfg.baseline_budget:
        raise ConfigError(f"compare mode needs equal budgets ({cfg.budget} vs {cfg.baseline_budget})")
    out.mkdir(parents=True, exist_ok=True)
    jobs = [Job("bo", s, str(out / "bo" / f"seed_{s}")) for s in cfg.seeds]
    jobs += [Job("nsga2", s, str(out / "baseline" / f"seed_{s}")) for s in cfg.seeds]
    results = run_jobs(cfg, jobs)
    bo_res = [r for r in results if r["method"] == "bo"]
    base_res = [r for r in results if r["method"] == "nsga2"]
    for b, n in zip(bo_res, base_res):
        if b["queries"] != n["queries"]:
            raise RuntimeError(f"iso-budget violated for seed {b['seed']}: {b['queries']} vs {n['queries']}")
        if not np.array_equal(b["reference_point"], n["reference_point"]):
            raise RuntimeError(f"seed {b['seed']}: BO and baseline reference points differ")
    bo_stats = curve_stats([r["hv_curve"] for r in bo_res])
    base_stats = curve_stats([r["hv_curve"] for r in base_res])
    write_hv_curves(out / "hv_curves.csv", cfg.seeds, bo_stats, base_stats)
    summary = {
        "budget": cfg.budget,
        "seeds": list(cfg.seeds),
        "queries": {"bo": [r["queries"] for r in bo_res], "baseline": [r["queries"] for r in base_res]},
        "final_hypervolume": {
            "bo": [float(c[-1]) for c in bo_stats.curves],
            "baseline": [float(c[-1]) for c in base_stats.curves],
            "bo_mean": float(bo_stats.mean[-1]),
            "baseline_mean": float(base_stats.mean[-1]),
        },
        "bo_mean_ge_baseline_mean": bool(bo_stats.mean[-1] >= base_stats.mean[-1]),
        "bo_dominates_final_quarter": dominates_tail(bo_stats.mean, base_stats.mean),
    }
    if cfg.evaluator.kind == "cim":
        summary["layerwise_vs_uniform"] = _layerwise(cfg, out, [Path(r["out_dir"]) for r in bo_res])
    io.write_json(out / "summary.json", summary)
    io.write_json(out / "meta.json", _meta(cfg))
    print(f"final hv  bo {bo_stats.mean[-1]:.6g} +- {bo_stats.std[-1]:.3g}   "
          f"baseline {base_stats.mean[-1]:.6g} +- {base_stats.std[-1]:.3g}")
    print(f"bo mean >= baseline mean: {summary['bo_mean_ge_baseline_mean']}; "
          f"bo dominates final 25%: {summary['bo_dominates_final_quarter']}")
    return summary


def _layerwise(cfg: ExperimentConfig, out: Path, bo_dirs: Sequence[Path]) -> dict:
    space = cfg.space.build()
    try:
        rows, evaluator = sweep_rows(cfg, space)
    except ValidationError as exc:
        return {"skipped": str(exc)}
    write_sweep(out / "sweep.csv", rows, space, evaluator)
    per_seed = []
    for d in bo_dirs:
        front = io.read_front(d / "pareto.csv")
        f = layerwise_vs_uniform(
            front.objectives,
            np.array([y for _, _, y in rows]),
            [label for label, _, _ in rows],
            front.objective_names,
            front.objective_senses,
        )
        per_seed.append({
            "run": str(d),
            "best_uniform": f.best_uniform_label,
            "best_uniform_objectives": f.best_uniform_objectives.tolist(),
            "found": f.found,
            "qualifying": f.n_qualifying,
            "design": None if not f.found else space.values(front.points()[f.index]),
            "objectives": None if not f.found else f.objectives.tolist(),
            "improved": list(f.improved),
        })
    return {"per_seed": per_seed, "any_found": any(p["found"] for p in per_seed)}


def write_hv_curves(path: Path, seeds: Sequence[int], bo_stats, base_stats) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["queries", *(f"bo_seed{s}" for s in seeds), *(f"baseline_seed{s}" for s in seeds),
                    "bo_mean", "bo_std", "baseline_mean", "baseline_std"])
        for q in range(len(bo_stats.queries)):
            w.writerow([
                int(bo_stats.queries[q]),
                *(repr(float(c[q])) for c in bo_stats.curves),
                *(repr(float(c[q])) for c in base_stats.curves),
                repr(float(bo_stats.mean[q])), repr(float(bo_stats.std[q])),
                repr(float(base_stats.mean[q])), repr(float(base_stats.std[q])),
            ])


def front_hypervolume(path: Path, ref_raw: Sequence[float]) -> float:
    front = io.read_front(path)
    sign = np.array([-1.0 if s == "max" else 1.0 for s in front.objective_senses])
    ref = np.asarray(ref_raw, dtype=float)
    if ref.shape != sign.shape:
        raise ValidationError(f"reference has {ref.size} components, front has {sign.size} objectives")
    if sign.size > MAX_EXACT_OBJECTIVES:
        est, _ = hypervolume_mc(front.internal(), ref * sign, 1_000_000, 0)
        return est
    return hypervolume_exact(front.internal(), ref * sign)


# ------------------------------------------------------------------ entry


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cimbo", description="Multi-objective BO for CIM design-space exploration.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run the mode named in the config")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int, help="override the config's seed list with one seed")
    r.add_argument("--out", help="output directory (overrides output_dir)")
    h = sub.add_parser("hv", help="hypervolume of a front CSV")
    h.add_argument("--front", required=True)
    h.add_argument("--ref", required=True, help="comma-separated reference point in raw units")
    for name, text in (("sweep", "uniform-precision sweep"), ("compare", "BO vs NSGA-II at equal budget")):
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True)
        s.add_argument("--out")
    return p


def _setup_logging() -> None:
    level = os.environ.get("CIMBO_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
        if args.command == "hv":
            try:
                ref = [float(v) for v in args.ref.split(",")]
            except ValueError as exc:
                raise UsageError(f"--ref must be comma-separated numbers: {args.ref!r}") from exc
            try:
                print(repr(front_hypervolume(Path(args.front), ref)))
            except OSError as exc:
                raise UsageError(f"cannot read front file: {exc}") from exc
            return 0
        cfg = parse_config(args.config)
        if args.command in ("sweep", "compare"):
            cfg = dataclasses.replace(cfg, mode=args.command)
            if cfg.mode == "compare" and cfg.budget != cfg.baseline_budget:
                raise ConfigError(f"compare mode needs equal budgets ({cfg.budget} vs {cfg.baseline_budget})", path=args.config)
        if getattr(args, "seed", None) is not None:
            cfg = dataclasses.replace(cfg, seeds=(args.seed,))
        out = Path(args.out or cfg.output_dir)
    except (UsageError, ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return run_mode(cfg, out)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        log.debug("%s", traceback.format_exc())
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
