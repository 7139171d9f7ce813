"""Generational NSGA-II on continuous genomes in [0, 1]^D.

Discrete spaces are handled by snapping genomes to the design grid right
before fitness evaluation; variation operators never see the grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from cimbo.design_space import DesignPoint, DesignSpace, ValidationError, decode_indices, encode_indices


@dataclass(frozen=True)
class Nsga2Config:
    population_size: int = 100
    generations: int = 20
    crossover_probability: float = 0.9
    crossover_eta: float = 15.0
    mutation_probability: float | None = None  # None -> 1/D
    mutation_eta: float = 20.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.population_size < 4 or self.population_size % 2:
            raise ValidationError(f"population_size must be even and >= 4, got {self.population_size}")
        if self.generations < 0:
            raise ValidationError("generations must be >= 0")
        if not 0.0 <= self.crossover_probability <= 1.0:
            raise ValidationError("crossover_probability must lie in [0, 1]")
        if self.mutation_probability is not None and not 0.0 <= self.mutation_probability <= 1.0:
            raise ValidationError("mutation_probability must lie in [0, 1]")
        if self.crossover_eta <= 0 or self.mutation_eta <= 0:
            raise ValidationError("distribution indices must be positive")

    @property
    def evaluations(self) -> int:
        return self.population_size * (self.generations + 1)


@dataclass
class Nsga2Result:
    genomes: np.ndarray
    fitness: np.ndarray
    front_genomes: np.ndarray
    front_fitness: np.ndarray
    front_points: list[DesignPoint] | None
    n_evaluations: int


def dominance_matrix(F: np.ndarray) -> np.ndarray:
    """dom[i, j] is True iff row i Pareto-dominates row j (minimization)."""
    le = F[:, None, 0] <= F[None, :, 0]
    for k in range(1, F.shape[1]):
        le &= F[:, None, k] <= F[None, :, k]
    # weakly better everywhere and not weakly worse everywhere
    return le & ~le.T


def fast_non_dominated_sort(fitnesses: Sequence[Sequence[float]] | np.ndarray) -> list[list[int]]:
    try:
        F = np.asarray(fitnesses, dtype=float)
    except ValueError as exc:
        raise ValidationError("fitness vectors must share one length") from exc
    if F.ndim != 2 or len(F) == 0:
        raise ValidationError("expected a non-empty list of equal-length fitness vectors")
    dom = dominance_matrix(F)
    count = dom.sum(axis=0)
    fronts: list[list[int]] = []
    current = np.flatnonzero(count == 0)
    while current.size:
        fronts.append(current.tolist())
        count = count - dom[current].sum(axis=0)
        count[current] = -1
        current = np.flatnonzero(count == 0)
    return fronts


def crowding_distance(front_fitnesses) -> np.ndarray:
    F = np.atleast_2d(np.asarray(front_fitnesses, dtype=float))
    n, m = F.shape
    dist = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        col = F[order, k]
        span = col[-1] - col[0]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span > 0:
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def sbx_crossover(a, b, p_c: float, eta_c: float, rng: np.random.Generator, clamp: bool = True):
    """Simulated binary crossover of one parent pair.

    Each gene is crossed with probability 0.5; before clamping the children
    keep the parents' midpoint, c1 + c2 == a + b.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValidationError("parents differ in length")
    c1, c2 = sbx_rows(a[None, :], b[None, :], p_c, eta_c, rng, clamp)
    return c1[0], c2[0]


def sbx_rows(A: np.ndarray, B: np.ndarray, p_c: float, eta_c: float, rng: np.random.Generator, clamp: bool = True):
    """Row-wise SBX over parent matrices A and B of equal shape."""
    mate = rng.random(len(A)) < p_c
    u = rng.random(A.shape)
    cross = (rng.random(A.shape) < 0.5) & mate[:, None]
    power = 1.0 / (eta_c + 1.0)
    beta = np.where(u <= 0.5, (2.0 * u) ** power, (1.0 / (2.0 * (1.0 - u))) ** power)
    mid = 0.5 * (A + B)
    half = 0.5 * beta * (B - A)
    c1 = np.where(cross, mid - half, A)
    c2 = np.where(cross, mid + half, B)
    if clamp:
        c1, c2 = np.clip(c1, 0.0, 1.0), np.clip(c2, 0.0, 1.0)
    return c1, c2


def polynomial_mutation(g, p_m: float, eta_m: float, rng: np.random.Generator) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    mask = rng.random(g.shape) < p_m
    u = rng.random(g.shape)
    power = 1.0 / (eta_m + 1.0)
    d1 = g  # distance to lower bound 0
    d2 = 1.0 - g
    with np.errstate(invalid="ignore"):
        lo = (2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta_m + 1.0)) ** power - 1.0
        hi = 1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta_m + 1.0)) ** power
    delta = np.where(u < 0.5, lo, hi)
    return np.clip(np.where(mask, g + delta, g), 0.0, 1.0)


def rank_and_crowding(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rank = np.empty(len(F), dtype=np.int64)
    crowd = np.empty(len(F))
    for r, front in enumerate(fast_non_dominated_sort(F)):
        rank[front] = r
        crowd[front] = crowding_distance(F[front])
    return rank, crowd


def select_survivors(F: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k best rows by front, then by crowding (descending)."""
    chosen: list[int] = []
    for front in fast_non_dominated_sort(F):
        if len(chosen) + len(front) <= k:
            chosen.extend(front)
            if len(chosen) == k:
                break
            continue
        crowd = crowding_distance(F[front])
        order = np.argsort(-crowd, kind="stable")
        chosen.extend(np.asarray(front)[order[: k - len(chosen)]].tolist())
        break
    return np.asarray(chosen, dtype=np.int64)


def _tournament(rank: np.ndarray, crowd: np.ndarray, rng: np.random.Generator, k: int) -> np.ndarray:
    a = rng.integers(0, len(rank), size=k)
    b = rng.integers(0, len(rank), size=k)
    a_wins = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] >= crowd[b]))
    return np.where(a_wins, a, b)


def evolve(
    fitness_fn: Callable,
    config: Nsga2Config,
    n_genes: int | None = None,
    initial: np.ndarray | None = None,
    space: DesignSpace | None = None,
    vectorized: bool = False,
) -> Nsga2Result:
    """Run NSGA-II and return the final population and its first front.

    ``fitness_fn`` maps one genome to an objective vector, or, with
    ``vectorized=True``, an (N, D) batch to an (N, M) array. When ``space``
    is given, genomes are snapped to its grid before evaluation and the
    front is reported as de-duplicated design points.
    """
    if space is not None:
        n_genes = space.dimension
    if n_genes is None:
        if initial is None:
            raise ValidationError("need n_genes, space or an initial population")
        n_genes = np.asarray(initial).shape[1]
    rng = np.random.default_rng(config.rng_seed)
    N = config.population_size
    p_m = config.mutation_probability if config.mutation_probability is not None else 1.0 / n_genes
    evaluations = 0

    def evaluate(G: np.ndarray) -> np.ndarray:
        nonlocal evaluations
        X = encode_indices(decode_indices(G, space), space) if space is not None else G
        evaluations += len(X)
        if vectorized:
            out = np.asarray(fitness_fn(X), dtype=float)
        else:
            out = np.array([np.asarray(fitness_fn(x), dtype=float) for x in X])
        if out.ndim != 2 or len(out) != len(X):
            raise ValidationError("fitness function returned a malformed batch")
        return out

    if initial is None:
        P = rng.random((N, n_genes))
    else:
        P = np.clip(np.asarray(initial, dtype=float), 0.0, 1.0)
        if P.shape != (N, n_genes):
            raise ValidationError(f"initial population must have shape {(N, n_genes)}, got {P.shape}")
        P = P.copy()
    F = evaluate(P)
    for _ in range(config.generations):
        rank, crowd = rank_and_crowding(F)
        parents = _tournament(rank, crowd, rng, N)
        c1, c2 = sbx_rows(P[parents[0::2]], P[parents[1::2]], config.crossover_probability, config.crossover_eta, rng)
        Q = polynomial_mutation(np.vstack([c1, c2]), p_m, config.mutation_eta, rng)
        FQ = evaluate(Q)
        R = np.vstack([P, Q])
        FR = np.vstack([F, FQ])
        keep = select_survivors(FR, N)
        P, F = R[keep], FR[keep]

    front = fast_non_dominated_sort(F)[0]
    front_genomes, front_fitness = P[front], F[front]
    points = None
    if space is not None:
        idx = decode_indices(front_genomes, space)
        _, first = np.unique(idx, axis=0, return_index=True)
        first = np.sort(first)
        front_genomes, front_fitness = front_genomes[first], front_fitness[first]
        points = [DesignPoint(tuple(row)) for row in idx[first].tolist()]
    return Nsga2Result(P, F, front_genomes, front_fitness, points, evaluations)

