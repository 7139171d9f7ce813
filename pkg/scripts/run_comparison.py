"""BO vs NSGA-II at equal query budget, then print the mean hypervolume curves.

    python3 scripts/run_comparison.py [--config configs/vgg8_compare.toml] [--out runs/vgg8_compare] [--every 20]
"""

import argparse
import csv
import sys
from pathlib import Path

from cimbo.cli import main as cli_main


def print_curves(path: Path, every: int) -> None:
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    print(f"{'queries':>8} {'bo mean':>12} {'bo std':>10} {'nsga2 mean':>12} {'nsga2 std':>10}")
    for r in rows:
        q = int(r["queries"])
        if q % every == 0 or q == len(rows):
            print(f"{q:>8} {float(r['bo_mean']):>12.2f} {float(r['bo_std']):>10.2f} "
                  f"{float(r['baseline_mean']):>12.2f} {float(r['baseline_std']):>10.2f}")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/vgg8_compare.toml")
    ap.add_argument("--out", default=None)
    ap.add_argument("--every", type=int, default=20)
    args = ap.parse_args()
    argv = ["compare", "--config", args.config] + (["--out", args.out] if args.out else [])
    status = cli_main(argv)
    if status:
        return status
    from cimbo.config import parse_config

    out = Path(args.out or parse_config(args.config).output_dir)
    print_curves(out / "hv_curves.csv", args.every)
    return 0


if __name__ == "__main__":
    sys.exit(main())
