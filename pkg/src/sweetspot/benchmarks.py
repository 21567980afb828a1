"""Benchmark objective functions for robust optimisation experiments.

Six synthetic minimisation problems (ids ``f1``..``f6``) plus a
one-dimensional oscillatory toy problem (``toy1d``). All are deterministic and
support vectorised evaluation. ``f4`` (Levy03) and ``f6`` (Styblinski-Tang)
follow their standard published forms; ``f1``, ``f2``, ``f3`` and ``f5`` are
reconstructions built to the qualitative properties they are meant to test
(see each docstring), not transcriptions of any particular reference
implementation.
"""

from __future__ import annotations

import numpy as np

from .errors import OutOfBounds

BOUNDS_TOL = 1e-12


class Benchmark:
    """Base class: a named objective over a box, with bounds checking."""

    id: str = ""

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.bounds = self._bounds()

    def _bounds(self) -> np.ndarray:
        raise NotImplementedError

    def _evaluate(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim}-dimensional input, got shape {x.shape}")
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        if np.any(X < lo - BOUNDS_TOL) or np.any(X > hi + BOUNDS_TOL):
            raise OutOfBounds(f"input outside the feasible box of {self.id}")
        vals = self._evaluate(X)
        return float(vals[0]) if single else vals


class Toy1d(Benchmark):
    """f(x) = sin(3 pi x^3) - sin(8 pi x^3) on [0, 1].

    Oscillates slowly near 0 and rapidly near 1; the single-point minimum sits
    in the fast-oscillating region while the best robust region does not.
    """

    id = "toy1d"

    def __init__(self, dim: int = 1):
        if dim != 1:
            raise ValueError("toy1d is one-dimensional")
        super().__init__(1)

    def _bounds(self):
        return np.array([[0.0, 1.0]])

    def _evaluate(self, X):
        t = X[:, 0] ** 3
        return np.sin(3.0 * np.pi * t) - np.sin(8.0 * np.pi * t)


class GaussianBumpTrap(Benchmark):
    """Reconstruction of a 'robust optimum on a local maximum' test.

    A broad negative basin carries a small bump at its centre; a much deeper
    but very narrow hole sits elsewhere. The single-point optimum is the
    narrow hole, while the worst-case-optimal ball centre is exactly the peak
    of the bump: the bump height is kept below the basin's rim rise at one
    ball radius (0.25, an eighth of the domain width), so re-centred balls
    immediately admit worse values.
    """

    id = "f1"

    BASIN_DEPTH = 1.0
    BASIN_WIDTH = 0.35
    BUMP_HEIGHT = 0.15
    BUMP_WIDTH = 0.08
    HOLE_DEPTH = 1.5
    HOLE_WIDTH = 0.05

    def _bounds(self):
        return np.tile([-1.0, 1.0], (self.dim, 1))

    def _evaluate(self, X):
        p = np.full(self.dim, -0.5)
        q = np.full(self.dim, 0.5)
        d2p = np.sum((X - p) ** 2, axis=1)
        d2q = np.sum((X - q) ** 2, axis=1)
        return (
            -self.BASIN_DEPTH * np.exp(-d2p / (2.0 * self.BASIN_WIDTH**2))
            + self.BUMP_HEIGHT * np.exp(-d2p / (2.0 * self.BUMP_WIDTH**2))
            - self.HOLE_DEPTH * np.exp(-d2q / (2.0 * self.HOLE_WIDTH**2))
        )


class TwinBasins(Benchmark):
    """Reconstruction of a multimodal robustness test: per dimension, a deep
    narrow basin competes with a shallower broad one (2^dim local minima in
    total); the broad basins are the robust choice."""

    id = "f2"

    def _bounds(self):
        return np.tile([-1.0, 1.0], (self.dim, 1))

    def _evaluate(self, X):
        narrow = -0.8 * np.exp(-((X - 0.6) ** 2) / (2.0 * 0.03**2))
        broad = -0.6 * np.exp(-((X + 0.4) ** 2) / (2.0 * 0.15**2))
        return np.sum(narrow + broad, axis=1)


class RidgedSphere(Benchmark):
    """Reconstruction of a 'robust optimum just outside the global optimum'
    test: a parabolic bowl with a tall narrow ridge across the first axis
    close to the bowl's minimum. Point optimisation settles essentially at the
    bowl centre; worst-case optimisation must back the ball away from the
    ridge, displacing the robust centre by roughly one ball radius."""

    id = "f3"

    RIDGE_HEIGHT = 5.0
    RIDGE_POS = 0.0625
    RIDGE_WIDTH = 0.025

    def _bounds(self):
        return np.tile([-1.0, 1.0], (self.dim, 1))

    def _evaluate(self, X):
        bowl = np.sum(X**2, axis=1)
        ridge = self.RIDGE_HEIGHT * np.exp(
            -((X[:, 0] - self.RIDGE_POS) ** 2) / (2.0 * self.RIDGE_WIDTH**2)
        )
        return bowl + ridge


class Levy03(Benchmark):
    """Levy03 in its standard published form (minimum 0 at all-ones):

        z_i = 1 + (x_i - 1) / 4
        f = sin^2(pi z_1) + sum_{i<n} (z_i - 1)^2 (1 + 10 sin^2(pi z_i + 1))
            + (z_n - 1)^2 (1 + sin^2(2 pi z_n))
    """

    id = "f4"

    def _bounds(self):
        return np.tile([-10.0, 10.0], (self.dim, 1))

    def _evaluate(self, X):
        z = 1.0 + (X - 1.0) / 4.0
        head = np.sin(np.pi * z[:, 0]) ** 2
        mid = np.sum(
            (z[:, :-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * z[:, :-1] + 1.0) ** 2),
            axis=1,
        )
        tail = (z[:, -1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * z[:, -1]) ** 2)
        return head + mid + tail


class SteppedSphere(Benchmark):
    """Reconstruction of the stepped sphere: a parabolic sphere with a
    downward step of depth ``STEP_DEPTH`` over the corner hypercube where
    every coordinate is non-negative. The step spans half the domain width in
    each dimension, so it occupies exactly 2^-dim of the box volume."""

    id = "f5"

    STEP_DEPTH = 1.5

    def _bounds(self):
        return np.tile([-1.0, 1.0], (self.dim, 1))

    def _evaluate(self, X):
        sphere = np.sum(X**2, axis=1)
        in_step = np.all(X >= 0.0, axis=1)
        return sphere - self.STEP_DEPTH * in_step


class StyblinskiTang(Benchmark):
    """Styblinski-Tang in its standard form, 0.5 sum(x^4 - 16 x^2 + 5 x),
    minimum about -39.16599 per dimension at x_d = -2.903534."""

    id = "f6"

    def _bounds(self):
        return np.tile([-5.0, 5.0], (self.dim, 1))

    def _evaluate(self, X):
        return 0.5 * np.sum(X**4 - 16.0 * X**2 + 5.0 * X, axis=1)


REGISTRY = {
    cls.id: cls
    for cls in (
        Toy1d,
        GaussianBumpTrap,
        TwinBasins,
        RidgedSphere,
        Levy03,
        SteppedSphere,
        StyblinskiTang,
    )
}


def get_benchmark(benchmark_id: str, dim: int) -> Benchmark:
    """Benchmark instance by registry id (``f1``..``f6`` or ``toy1d``)."""
    try:
        cls = REGISTRY[benchmark_id]
    except KeyError:
        raise KeyError(
            f"unknown benchmark {benchmark_id!r}; available: {sorted(REGISTRY)}"
        ) from None
    return cls(dim)
