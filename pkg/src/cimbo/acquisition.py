"""Lower-confidence-bound acquisition, one score per objective."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from cimbo.gp import GpModel, predict

DEFAULT_BETA = 2.0


def lcb(mean, std, beta: float = DEFAULT_BETA):
    """mean - beta * std; works elementwise on arrays."""
    if np.any(np.asarray(std) < 0):
        raise ValueError("std must be non-negative")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    return mean - beta * std


def score_batch(models: Sequence[GpModel], candidates, beta: float = DEFAULT_BETA) -> np.ndarray:
    """LCB scores of every candidate under every model, shape (N, M).

    Row i is the acquisition vector of candidate i, in each model's
    standardized units (lower is better).
    """
    X = np.atleast_2d(np.asarray(candidates, dtype=float))
    if len(X) == 0:
        raise ValueError("no candidates to score")
    scores = np.empty((len(X), len(models)))
    for m, model in enumerate(models):
        mean, var = predict(model, X)
        scores[:, m] = lcb(mean, np.sqrt(var), beta)
    return scores
