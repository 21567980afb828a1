"""Rules for choosing where inside a proposed sweet spot to spend the next
expensive evaluation: at the centre, at the model's most uncertain interior
location, at the worst predicted interior location, or uniformly at random.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from . import evo
from .gp import GpModel
from .region import SweetSpot, contains


class SamplingStrategy(str, Enum):
    CENTRE = "centre"
    MOST_UNCERTAIN = "uncertain"
    WORST_CASE_PREDICTION = "worst"
    UNIFORM_RANDOM = "random"


def _snap_into(ss: SweetSpot, x: np.ndarray) -> np.ndarray:
    """Pull a point that overshot the ball boundary by floating-point error
    back inside; anything further out is a real violation."""
    d = float(np.linalg.norm(x - ss.centre))
    if d > ss.shape.radius:
        if d > ss.shape.radius * (1.0 + 1e-9):
            raise AssertionError("selected location left the sweet spot")
        x = ss.centre + (x - ss.centre) * (ss.shape.radius / d) * (1.0 - 1e-12)
    return x


def select(
    strategy: SamplingStrategy,
    model: GpModel,
    ss: SweetSpot,
    evo_config: evo.EvoConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Evaluation location inside the (box-clipped) sweet spot according to
    the strategy. The result always satisfies ``contains(ss, result)``."""
    strategy = SamplingStrategy(strategy)
    if strategy is SamplingStrategy.CENTRE:
        out = ss.centre.copy()
    elif strategy is SamplingStrategy.UNIFORM_RANDOM:
        out = evo.BallRegion(ss.centre, ss.shape.radius, ss.bounds).sample(rng)
    else:
        if strategy is SamplingStrategy.MOST_UNCERTAIN:
            objective = lambda X: model.predict(np.atleast_2d(X))[1]  # noqa: E731
        else:
            objective = lambda X: model.predict_mean(np.atleast_2d(X))  # noqa: E731
        region = evo.BallRegion(ss.centre, ss.shape.radius, ss.bounds)
        out, _ = evo.maximise(
            objective, region, evo_config, seeds=ss.centre[None, :], rng=rng, vectorised=True
        )
        out = _snap_into(ss, out)
    assert contains(ss, out)
    return out
