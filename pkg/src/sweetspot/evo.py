"""Bounded, seedable real-coded genetic algorithm.

Used to maximise acquisition surfaces and inner objectives over boxes, balls
and neighbourhood-constrained boxes. Tournament selection, blend crossover,
Gaussian mutation and single-member elitism; infeasible candidates are
repaired or replaced by fresh feasible samples, so every evaluated candidate
passes the region's feasibility test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoFeasibleCentre
from .stats import sample_unit_ball


@dataclass
class EvoConfig:
    population: int
    generations: int
    mutation_scale: float = 0.1
    crossover_rate: float = 0.9
    seed: int | None = None
    tournament: int = 3

    def __post_init__(self):
        if self.population < 2 or self.generations < 1:
            raise ValueError("population must be >= 2 and generations >= 1")
        if self.mutation_scale <= 0:
            raise ValueError("mutation_scale must be positive")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must lie in [0, 1]")


class BoxRegion:
    """The feasible box itself."""

    def __init__(self, bounds):
        self.bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
        self.widths = self.bounds[:, 1] - self.bounds[:, 0]

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.bounds[:, 0], self.bounds[:, 1])

    def feasible(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.bounds[:, 0]) and np.all(x <= self.bounds[:, 1]))

    def repair(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return np.clip(x, self.bounds[:, 0], self.bounds[:, 1])


class BallRegion(BoxRegion):
    """Intersection of a ball with the feasible box."""

    def __init__(self, centre, radius: float, bounds):
        super().__init__(bounds)
        self.centre = np.asarray(centre, dtype=float).reshape(-1)
        self.radius = float(radius)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        for _ in range(100_000):
            p = self.centre + self.radius * sample_unit_ball(1, self.centre.size, rng)[0]
            if super().feasible(p):
                return p
        raise NoFeasibleCentre("ball-box intersection appears to be empty")

    def feasible(self, x: np.ndarray) -> bool:
        return super().feasible(x) and float(np.linalg.norm(x - self.centre)) <= self.radius

    def repair(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        p = np.clip(x, self.bounds[:, 0], self.bounds[:, 1])
        d = float(np.linalg.norm(p - self.centre))
        if d > self.radius:
            p = self.centre + (p - self.centre) * (self.radius / d)
            p = np.clip(p, self.bounds[:, 0], self.bounds[:, 1])
        if self.feasible(p):
            return p
        return self.sample(rng)


class NeighbourhoodRegion(BoxRegion):
    """Box points whose ball of the given radius contains an evaluated location."""

    def __init__(self, bounds, evaluated, radius: float):
        super().__init__(bounds)
        self.evaluated = np.atleast_2d(np.asarray(evaluated, dtype=float))
        self.radius = float(radius)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        anchor = self.evaluated[rng.integers(len(self.evaluated))]
        p = anchor + self.radius * sample_unit_ball(1, anchor.size, rng)[0]
        # clipping to the (convex) box cannot move p further from the anchor
        return np.clip(p, self.bounds[:, 0], self.bounds[:, 1])

    def feasible(self, x: np.ndarray) -> bool:
        if not super().feasible(x):
            return False
        d = np.linalg.norm(self.evaluated - x, axis=1)
        return bool(np.min(d) <= self.radius)

    def repair(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        p = np.clip(x, self.bounds[:, 0], self.bounds[:, 1])
        if self.feasible(p):
            return p
        return self.sample(rng)


def maximise(
    objective, region, config: EvoConfig, seeds=None, rng=None, callback=None, vectorised=False
):
    """Maximise ``objective`` over ``region`` and return (x_best, value_best).

    Deterministic under the configured seed. ``seeds``, when given, are
    injected into the initial population (infeasible seeds are repaired).
    With ``vectorised=True`` the objective is called once per generation with
    the whole population as a (k, dim) array and must return (k,) values.
    ``callback(generation, x_best, value_best)`` is invoked after every
    generation. Raises NoFeasibleCentre if no feasible candidate was ever
    evaluated (impossible when a feasible seed is supplied).
    """
    rng = np.random.default_rng(config.seed if rng is None else rng)
    dim = region.widths.size
    sigma = config.mutation_scale * region.widths

    def evaluate(members: np.ndarray) -> np.ndarray:
        if vectorised:
            return np.asarray(objective(members), dtype=float)
        return np.array([float(objective(x)) for x in members])

    pop = []
    if seeds is not None:
        for s in np.atleast_2d(np.asarray(seeds, dtype=float))[: config.population]:
            p = s if region.feasible(s) else region.repair(s, rng)
            if region.feasible(p):
                pop.append(p)
    while len(pop) < config.population:
        pop.append(region.sample(rng))
    pop = np.array(pop)

    fitness = evaluate(pop)
    best_idx = int(np.argmax(fitness))
    x_best, value_best = pop[best_idx].copy(), float(fitness[best_idx])
    any_feasible = len(pop) > 0

    for gen in range(config.generations):
        children = [x_best.copy()]  # elitism
        while len(children) < config.population:
            pa = _tournament(pop, fitness, config.tournament, rng)
            pb = _tournament(pop, fitness, config.tournament, rng)
            if rng.random() < config.crossover_rate:
                child = _blend(pa, pb, rng)
            else:
                child = pa.copy()
            mask = rng.random(dim) < max(1.0 / dim, 0.1)
            child[mask] += rng.normal(0.0, sigma[mask])
            child = region.repair(child, rng)
            if not region.feasible(child):
                continue
            children.append(child)
        pop = np.array(children)
        fitness = evaluate(pop)
        gen_best = int(np.argmax(fitness))
        if fitness[gen_best] > value_best:
            x_best, value_best = pop[gen_best].copy(), float(fitness[gen_best])
        if callback is not None:
            callback(gen, x_best.copy(), value_best)

    if not any_feasible:
        raise NoFeasibleCentre("no feasible candidate was generated")
    return x_best, value_best


def _tournament(pop, fitness, k, rng):
    idx = rng.integers(0, len(pop), size=min(k, len(pop)))
    return pop[idx[np.argmax(fitness[idx])]]


def _blend(pa, pb, rng, alpha: float = 0.5):
    lo = np.minimum(pa, pb)
    hi = np.maximum(pa, pb)
    span = hi - lo
    return rng.uniform(lo - alpha * span, hi + alpha * span)
