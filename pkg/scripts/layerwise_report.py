"""Compare a BO archive against uniform-precision designs.

Prints every uniform sweep design, then the archived layer-wise designs whose
accuracy is within a tolerance of the most accurate uniform design, with the
objectives they improve.

    python3 scripts/layerwise_report.py RUN_DIR [--tolerance 1.0] [--top 5]

RUN_DIR is a single-seed output directory containing pareto.csv.
"""

import argparse
from pathlib import Path

import numpy as np

from cimbo import io
from cimbo.config import ExperimentConfig
from cimbo.cli import sweep_rows
from cimbo.presets import vgg8_space


def fmt(names, y):
    return "  ".join(f"{n}={v:.4g}" for n, v in zip(names, y))


def main() -> None:
    ap = argparse.ArgumentParser(description="layer-wise vs uniform designs")
    ap.add_argument("run_dir", type=Path)
    ap.add_argument("--tolerance", type=float, default=1.0)
    ap.add_argument("--top", type=int, default=5)
    args = ap.parse_args()

    front = io.read_front(args.run_dir / "pareto.csv")
    space = vgg8_space()
    rows, evaluator = sweep_rows(ExperimentConfig(), space)
    names = front.objective_names
    print("uniform designs")
    for label, _, y in rows:
        print(f"  {label:<10} {fmt(names, y)}")
    U = np.array([y for _, _, y in rows])
    best = int(np.argmax(U[:, 0]))
    ref = U[best]
    print(f"\nmost accurate uniform design: {rows[best][0]}  {fmt(names, ref)}")

    sign = np.array([-1.0 if s == "max" else 1.0 for s in front.objective_senses])
    A = front.objectives
    close = A[:, 0] >= ref[0] - args.tolerance
    better = (A[:, 1:] * sign[1:]) < (ref[1:] * sign[1:])
    order = np.argsort(-(better.sum(axis=1) + close * 10))
    print(f"\narchive designs within {args.tolerance} pp ({int(close.sum())} of {len(A)}):")
    for i in order[: args.top]:
        if not close[i]:
            break
        improved = [names[k + 1] for k in np.flatnonzero(better[i])]
        print(f"  {fmt(names, A[i])}\n    improves: {', '.join(improved) or 'nothing'}")
        print(f"    design: {space.values(front.points()[i])}")


if __name__ == "__main__":
    main()
