"""Wall time of single BO steps on the VGG16-like 50-slot space at growing archive sizes.

    python3 scripts/step_timing.py [--sizes 10 50 130 200]
"""

import argparse
import time

from cimbo import bo
from cimbo.evaluators import CimEvaluator
from cimbo.presets import vgg16_space


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 50, 130, 200])
    args = ap.parse_args()
    space = vgg16_space()
    for n in args.sizes:
        state = bo.initialize(bo.BoConfig(n_init=n, n_iterations=2), space, CimEvaluator(space))
        bo.step(state)
        start = time.perf_counter()
        bo.step(state)
        print(f"n={n + 1:>4}: {time.perf_counter() - start:.2f}s per step (includes GP retraining)")


if __name__ == "__main__":
    main()
