"""Brute-force ground truth for the robust quality landscape.

Computes the true worst-case quality of the ball at any centre by dense
sampling of the benchmark itself (no surrogate), locates the robust optimum by
grid search (up to two dimensions) or seeded multi-start refinement (above),
and caches the result to disk so that regret traces are reproducible across
runs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .benchmarks import Benchmark, get_benchmark
from .region import SweetSpotShape
from .stats import latin_hypercube, sample_unit_ball

CACHE_VERSION = 1
DEFAULT_BALL_SAMPLES_PER_DIM = 256
ENV_CACHE_DIR = "SWEETSPOT_ORACLE_DIR"


def _ball_offsets(dim: int, radius: float, seed: int, n_ball: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(77,)))
    return radius * sample_unit_ball(n_ball, dim, rng)


@dataclass
class RobustLandscape:
    """Ground-truth robust quality surface for one (benchmark, radius) pair.

    ``quality`` evaluates the worst benchmark value over the centre plus a
    fixed dense set of ball offsets (clipped to the box); ``x_min``/``q_min``
    record its minimiser. The offsets are regenerated deterministically from
    the stored seed, so qualities are reproducible after a cache round-trip.
    """

    benchmark_id: str
    dim: int
    radius: float
    resolution: int
    seed: int
    n_ball: int
    x_min: np.ndarray
    q_min: float
    grid_q: np.ndarray | None = None
    bench: Benchmark | None = None  # falls back to the registry by id

    def __post_init__(self):
        if self.bench is None:
            self.bench = get_benchmark(self.benchmark_id, self.dim)
        self._offsets = _ball_offsets(self.dim, self.radius, self.seed, self.n_ball)

    def quality(self, x) -> float:
        return float(
            _quality_batch(self.bench, np.atleast_2d(np.asarray(x, dtype=float)), self._offsets)[0]
        )

    def regret(self, x) -> float:
        return self.quality(x) - self.q_min


def _quality_batch(bench: Benchmark, X: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Worst-case benchmark value over the clipped ball at each row of X."""
    lo, hi = bench.bounds[:, 0], bench.bounds[:, 1]
    k, n_ball = len(X), len(offsets)
    q = bench(X)  # centre always counts
    pts = X[:, None, :] + offsets[None, :, :]
    flat = pts.reshape(-1, bench.dim)
    ok = np.all(flat >= lo, axis=1) & np.all(flat <= hi, axis=1)
    vals = np.full(k * n_ball, -np.inf)
    if np.any(ok):
        vals[ok] = bench(flat[ok])
    return np.maximum(q, vals.reshape(k, n_ball).max(axis=1))


def _polish(bench, offsets, x0, widths):
    """Local Nelder-Mead refinement of the quality surface from x0."""
    res = minimize(
        lambda x: _quality_batch(bench, x[None, :], offsets)[0],
        x0,
        method="Nelder-Mead",
        bounds=bench.bounds,
        options={
            "xatol": 1e-7 * float(np.max(widths)),
            "fatol": 1e-12,
            "maxiter": 400 * bench.dim,
        },
    )
    return res.x, float(res.fun)


def build_landscape(
    bench: Benchmark,
    shape: SweetSpotShape,
    resolution: int,
    seed: int = 0,
    n_ball: int | None = None,
) -> RobustLandscape:
    """Compute the robust quality landscape and its minimiser.

    Up to two dimensions ``resolution`` is the number of grid points per axis
    (at least 64); the minimiser is the best grid cell refined by local
    search. Above two dimensions ``resolution`` is a worst-case-evaluation
    budget (at least 1e5) spent on a Latin hypercube scan followed by local
    refinement of the best starts. Deterministic given the seed.
    """
    dim = bench.dim
    if n_ball is None:
        n_ball = DEFAULT_BALL_SAMPLES_PER_DIM * dim
    offsets = _ball_offsets(dim, shape.radius, seed, n_ball)
    lo, hi = bench.bounds[:, 0], bench.bounds[:, 1]
    widths = hi - lo
    grid_q = None

    if dim <= 2:
        if resolution < 64:
            raise ValueError("grid resolution must be at least 64 per axis")
        axes = [np.linspace(lo[d], hi[d], resolution) for d in range(dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        centres = np.stack([m.ravel() for m in mesh], axis=1)
        q = np.empty(len(centres))
        chunk = max(1, 2_000_000 // max(n_ball, 1))
        for i in range(0, len(centres), chunk):
            q[i : i + chunk] = _quality_batch(bench, centres[i : i + chunk], offsets)
        grid_q = q.reshape([resolution] * dim)
        order = np.argsort(q)
        starts = centres[order[:5]]
    else:
        if resolution < 100_000:
            raise ValueError("search budget must be at least 1e5 quality evaluations")
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(78,)))
        n_scan = int(resolution * 0.7)
        pool = lo + latin_hypercube(n_scan, dim, rng) * widths
        q = np.empty(n_scan)
        chunk = max(1, 2_000_000 // max(n_ball, 1))
        for i in range(0, n_scan, chunk):
            q[i : i + chunk] = _quality_batch(bench, pool[i : i + chunk], offsets)
        order = np.argsort(q)
        starts = pool[order[:10]]

    best_x, best_q = None, np.inf
    for x0 in starts:
        x_ref, q_ref = _polish(bench, offsets, x0, widths)
        if q_ref < best_q:
            best_x, best_q = x_ref, q_ref

    return RobustLandscape(
        benchmark_id=bench.id,
        dim=dim,
        radius=shape.radius,
        resolution=resolution,
        seed=seed,
        n_ball=n_ball,
        x_min=np.asarray(best_x, dtype=float),
        q_min=best_q,
        grid_q=grid_q,
        bench=bench,
    )


def true_robust_optimum(
    bench: Benchmark,
    shape: SweetSpotShape,
    resolution: int,
    seed: int = 0,
    n_ball: int | None = None,
) -> tuple[np.ndarray, float]:
    """Location and value of the true robust optimum (see build_landscape)."""
    landscape = build_landscape(bench, shape, resolution, seed=seed, n_ball=n_ball)
    return landscape.x_min, landscape.q_min


# ---------------------------------------------------------------------------
# Disk cache
# ---------------------------------------------------------------------------


def cache_dir(explicit: str | os.PathLike | None = None) -> Path:
    """Cache directory: explicit argument, else $SWEETSPOT_ORACLE_DIR, else
    ``oracle_cache`` under the working directory."""
    if explicit is not None:
        return Path(explicit)
    env = os.environ.get(ENV_CACHE_DIR)
    return Path(env) if env else Path("oracle_cache")


def cache_key(benchmark_id: str, dim: int, radius: float, resolution: int, seed: int) -> str:
    return f"{benchmark_id}_d{dim}_r{radius:.8g}_res{resolution}_s{seed}_v{CACHE_VERSION}"


def save_landscape(landscape: RobustLandscape, directory: str | os.PathLike | None = None) -> Path:
    d = cache_dir(directory)
    d.mkdir(parents=True, exist_ok=True)
    path = d / (
        cache_key(
            landscape.benchmark_id,
            landscape.dim,
            landscape.radius,
            landscape.resolution,
            landscape.seed,
        )
        + ".npz"
    )
    np.savez(
        path,
        benchmark_id=landscape.benchmark_id,
        dim=landscape.dim,
        radius=landscape.radius,
        resolution=landscape.resolution,
        seed=landscape.seed,
        n_ball=landscape.n_ball,
        x_min=landscape.x_min,
        q_min=landscape.q_min,
        grid_q=landscape.grid_q if landscape.grid_q is not None else np.empty(0),
    )
    return path


def load_landscape(path: str | os.PathLike, bench: Benchmark | None = None) -> RobustLandscape:
    with np.load(path, allow_pickle=False) as z:
        grid_q = z["grid_q"]
        return RobustLandscape(
            benchmark_id=str(z["benchmark_id"]),
            dim=int(z["dim"]),
            radius=float(z["radius"]),
            resolution=int(z["resolution"]),
            seed=int(z["seed"]),
            n_ball=int(z["n_ball"]),
            x_min=z["x_min"],
            q_min=float(z["q_min"]),
            grid_q=None if grid_q.size == 0 else grid_q,
            bench=bench,
        )


def load_or_build(
    bench: Benchmark,
    shape: SweetSpotShape,
    resolution: int,
    seed: int = 0,
    n_ball: int | None = None,
    directory: str | os.PathLike | None = None,
) -> RobustLandscape:
    """Load the cached landscape for this configuration, building and saving
    it first if absent."""
    d = cache_dir(directory)
    path = d / (cache_key(bench.id, bench.dim, shape.radius, resolution, seed) + ".npz")
    if path.exists():
        return load_landscape(path, bench=bench)
    landscape = build_landscape(bench, shape, resolution, seed=seed, n_ball=n_ball)
    save_landscape(landscape, d)
    return landscape
