"""Hyperspherical sweet-spot geometry, neighbourhood membership and quality
measures.

A sweet spot is a ball of fixed radius around a candidate centre; quality is
aggregated over the part of the ball inside the feasible box (regions near
the boundary are clipped to the box).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stats import sample_unit_ball


@dataclass(frozen=True)
class SweetSpotShape:
    """Fixed shape of every sweet spot: a ball of radius ``radius``."""

    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @classmethod
    def eighth_of(cls, bounds: np.ndarray) -> "SweetSpotShape":
        """Protocol default: radius = |upper - lower| / 8 for a uniform box."""
        bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
        widths = bounds[:, 1] - bounds[:, 0]
        if not np.allclose(widths, widths[0]):
            raise ValueError("eighth-width rule assumes a uniform box")
        return cls(float(widths[0]) / 8.0)


@dataclass(frozen=True)
class SweetSpot:
    """A ball of the given shape centred at ``centre``, clipped to ``bounds``."""

    centre: np.ndarray
    shape: SweetSpotShape
    bounds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "centre", np.asarray(self.centre, dtype=float).reshape(-1))
        object.__setattr__(self, "bounds", np.asarray(self.bounds, dtype=float).reshape(-1, 2))
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        if np.any(self.centre < lo - 1e-12) or np.any(self.centre > hi + 1e-12):
            raise ValueError("sweet spot centre must lie inside the bounds")


def in_box(p: np.ndarray, bounds: np.ndarray) -> bool:
    p = np.asarray(p, dtype=float).reshape(-1)
    return bool(np.all(p >= bounds[:, 0]) and np.all(p <= bounds[:, 1]))


def contains(ss: SweetSpot, p) -> bool:
    """True iff ``p`` is within the radius of the centre and inside the box."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if not in_box(p, ss.bounds):
        return False
    return float(np.linalg.norm(p - ss.centre)) <= ss.shape.radius


def in_neighbourhood(x, evaluated, shape: SweetSpotShape) -> bool:
    """True iff the sweet spot at ``x`` would contain at least one of the
    already-evaluated locations, i.e. min_n ||x - x_n|| <= radius."""
    x = np.asarray(x, dtype=float).reshape(-1)
    evaluated = np.atleast_2d(np.asarray(evaluated, dtype=float))
    dists = np.linalg.norm(evaluated - x, axis=1)
    return bool(np.min(dists) <= shape.radius)


def sample_interior(ss: SweetSpot, m: int, rng: np.random.Generator) -> np.ndarray:
    """``m`` points in the ball-box intersection, the centre always first and
    the remainder uniformly distributed (rejection against the box)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    dim = ss.centre.size
    out = np.empty((m, dim))
    out[0] = ss.centre
    need = m - 1
    filled = 1
    while need > 0:
        batch = max(need * 2, 8)
        cand = ss.centre + ss.shape.radius * sample_unit_ball(batch, dim, rng)
        ok = np.all(cand >= ss.bounds[:, 0], axis=1) & np.all(cand <= ss.bounds[:, 1], axis=1)
        cand = cand[ok][:need]
        out[filled : filled + len(cand)] = cand
        filled += len(cand)
        need -= len(cand)
    return out


def quality_worst(values) -> float:
    """Worst-case quality: the maximum response over the sample (minimisation
    convention, larger is worse)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("values must be non-empty")
    return float(np.max(values))


def quality_average(values) -> float:
    """Average quality: the arithmetic mean of the sampled responses."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("values must be non-empty")
    return float(np.mean(values))
