"""CSV / JSON artifacts: run logs, Pareto fronts and run metadata.

Objective columns are written in raw units and natural sense, with the
sense in the header, e.g. ``accuracy(max)``. Floats use ``repr`` so files
re-parse to bit-identical values.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from cimbo.bo import IterationRecord, RunLog
from cimbo.design_space import DesignPoint, DesignSpace, ValidationError

_OBJ_COLUMN = re.compile(r"^(?P<name>.+)\((?P<sense>min|max)\)$")
RUNLOG_PREFIX = ("iteration", "phase", "queries", "accepted")


def objective_header(names: Sequence[str], senses: Sequence[str]) -> list[str]:
    return [f"{n}({s})" for n, s in zip(names, senses)]


def _fmt(x: float) -> str:
    return repr(float(x))


class RunLogWriter:
    """Streams run-log rows to disk as they are produced."""

    def __init__(self, path: Path, slot_names: Sequence[str], names: Sequence[str], senses: Sequence[str]):
        self.path = Path(path)
        self._fh: IO[str] = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow([*RUNLOG_PREFIX, *slot_names, *objective_header(names, senses), "hypervolume"])
        self._fh.flush()

    def __call__(self, rec: IterationRecord) -> None:
        self._w.writerow(
            [rec.iteration, rec.phase, rec.queries, int(rec.accepted), *rec.point.indices,
             *map(_fmt, rec.objectives), _fmt(rec.hypervolume)]
        )
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> RunLogWriter:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_runlog(path: Path, run_log: RunLog) -> None:
    with RunLogWriter(path, run_log.slot_names, run_log.objective_names, run_log.objective_senses) as w:
        for rec in run_log.records:
            w(rec)


@dataclass
class RunLogTable:
    slot_names: list[str]
    objective_names: list[str]
    objective_senses: list[str]
    iteration: np.ndarray
    phase: list[str]
    queries: np.ndarray
    accepted: np.ndarray
    indices: np.ndarray
    objectives: np.ndarray
    hypervolume: np.ndarray


def read_runlog(path: Path) -> RunLogTable:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if tuple(header[:4]) != RUNLOG_PREFIX or header[-1] != "hypervolume":
        raise ValidationError(f"{path}: not a run log")
    slots, names, senses = _split_columns(header[4:-1])
    k = len(slots)
    return RunLogTable(
        slot_names=slots,
        objective_names=names,
        objective_senses=senses,
        iteration=np.array([int(r[0]) for r in body], dtype=np.int64),
        phase=[r[1] for r in body],
        queries=np.array([int(r[2]) for r in body], dtype=np.int64),
        accepted=np.array([r[3] == "1" for r in body], dtype=bool),
        indices=np.array([[int(v) for v in r[4 : 4 + k]] for r in body], dtype=np.int64).reshape(len(body), k),
        objectives=np.array([[float(v) for v in r[4 + k : -1]] for r in body]).reshape(len(body), len(names)),
        hypervolume=np.array([float(r[-1]) for r in body]),
    )


def _split_columns(columns: Sequence[str]) -> tuple[list[str], list[str], list[str]]:
    slots: list[str] = []
    names: list[str] = []
    senses: list[str] = []
    for col in columns:
        m = _OBJ_COLUMN.match(col)
        if m:
            names.append(m["name"])
            senses.append(m["sense"])
        elif names:
            raise ValidationError(f"design column {col!r} after objective columns")
        else:
            slots.append(col)
    if not names:
        raise ValidationError("no objective columns (expected headers like 'area(min)')")
    return slots, names, senses


@dataclass
class FrontFile:
    slot_names: list[str]
    objective_names: list[str]
    objective_senses: list[str]
    indices: np.ndarray  # (n, D) level indices, D may be 0
    objectives: np.ndarray  # (n, M) raw values

    def points(self) -> list[DesignPoint]:
        return [DesignPoint(tuple(r)) for r in self.indices.tolist()]

    def internal(self) -> np.ndarray:
        sign = np.array([-1.0 if s == "max" else 1.0 for s in self.objective_senses])
        return self.objectives * sign

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrontFile):
            return NotImplemented
        return (
            self.slot_names == other.slot_names
            and self.objective_names == other.objective_names
            and self.objective_senses == other.objective_senses
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.objectives, other.objectives)
        )


def write_front(path: Path, front: FrontFile) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*front.slot_names, *objective_header(front.objective_names, front.objective_senses)])
        for idx, y in zip(front.indices.tolist(), front.objectives):
            w.writerow([*idx, *map(_fmt, y)])


def read_front(path: Path) -> FrontFile:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValidationError(f"{path}: empty front file")
    slots, names, senses = _split_columns(rows[0])
    k = len(slots)
    body = rows[1:]
    for i, r in enumerate(body, start=2):
        if len(r) != k + len(names):
            raise ValidationError(f"{path}:{i}: expected {k + len(names)} columns, got {len(r)}")
    return FrontFile(
        slots,
        names,
        senses,
        np.array([[int(v) for v in r[:k]] for r in body], dtype=np.int64).reshape(len(body), k),
        np.array([[float(v) for v in r[k:]] for r in body]).reshape(len(body), len(names)),
    )


def archive_front(run_log: RunLog) -> FrontFile:
    """The final archive of a run, in raw units, ordered by design indices."""
    archive = run_log.archive
    sign = np.array([-1.0 if s == "max" else 1.0 for s in run_log.objective_senses])
    entries = sorted(archive.entries(), key=lambda e: e[0].indices) if archive else []
    D = len(run_log.slot_names)
    M = len(run_log.objective_names)
    return FrontFile(
        list(run_log.slot_names),
        list(run_log.objective_names),
        list(run_log.objective_senses),
        np.array([p.indices for p, _ in entries], dtype=np.int64).reshape(len(entries), D),
        np.array([y * sign for _, y in entries]).reshape(len(entries), M),
    )


def write_archive(out_dir: Path, run_log: RunLog, space: DesignSpace) -> FrontFile:
    front = archive_front(run_log)
    write_front(out_dir / "pareto.csv", front)
    sign = np.array([-1.0 if s == "max" else 1.0 for s in run_log.objective_senses])
    ref = None if run_log.reference_point is None else (run_log.reference_point * sign).tolist()
    doc = {
        "objectives": [{"name": n, "sense": s} for n, s in zip(front.objective_names, front.objective_senses)],
        "reference_point": ref,
        "hypervolume": run_log.records[-1].hypervolume if run_log.records else 0.0,
        "entries": [
            {
                "indices": list(p.indices),
                "design": space.values(p),
                "objectives": dict(zip(front.objective_names, y.tolist())),
            }
            for p, y in zip(front.points(), front.objectives)
        ],
    }
    write_json(out_dir / "pareto.json", doc)
    return front


def write_timings(path: Path, run_log: RunLog) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["queries", "wall_time_s"])
        for rec in run_log.records:
            w.writerow([rec.queries, f"{rec.wall_time:.6f}"])


def write_json(path: Path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")
