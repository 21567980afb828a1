"""Shared numeric utilities: seedable RNG streams, normal pdf/cdf, robust
summary statistics, the Wilcoxon signed-rank test, Latin hypercube designs and
uniform ball sampling."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats as sps


class SeedStream:
    """Reproducible, order-independent RNG streams derived from one master seed.

    Streams are keyed by an integer counter (or a tuple of integers), so
    parallel consumers can each own an independent generator regardless of
    scheduling order.
    """

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)

    def stream(self, *key: int) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=tuple(int(k) for k in key))
        return np.random.default_rng(seq)

    def child_seed(self, *key: int) -> int:
        """Deterministic 63-bit integer seed for the given key (for sub-configs)."""
        return int(self.stream(*key).integers(0, 2**63 - 1))


def norm_pdf_cdf(z: float) -> tuple[float, float]:
    """Standard normal density and cumulative distribution at ``z``.

    Uses the error function, accurate to well below 1e-12 over the float range.
    """
    pdf = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    cdf = 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
    return pdf, cdf


def latin_hypercube(n: int, dim: int, rng: np.random.Generator, candidates: int = 1) -> np.ndarray:
    """``n`` points in the unit box, one per axis stratum in every dimension.

    With ``candidates > 1``, that many designs are generated and the one with
    the largest minimum pairwise distance is kept (maximin improvement).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    best = None
    best_score = -np.inf
    for _ in range(max(1, candidates)):
        u = rng.random((n, dim))
        design = np.empty((n, dim))
        for d in range(dim):
            perm = rng.permutation(n)
            design[:, d] = (perm + u[:, d]) / n
        if candidates <= 1 or n == 1:
            return design
        diff = design[:, None, :] - design[None, :, :]
        dist2 = np.sum(diff * diff, axis=-1)
        np.fill_diagonal(dist2, np.inf)
        score = dist2.min()
        if score > best_score:
            best_score = score
            best = design
    return best


def sample_unit_ball(m: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """``m`` points uniformly distributed in the unit ball of ``dim`` dimensions."""
    z = rng.standard_normal((m, dim))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radii = rng.random((m, 1)) ** (1.0 / dim)
    return z / norms * radii


def median_abs_deviation(values) -> float:
    """Median absolute deviation around the median (unscaled)."""
    v = np.asarray(values, dtype=float)
    med = np.median(v)
    return float(np.median(np.abs(v - med)))


def iqr(values) -> tuple[float, float]:
    """25th and 75th percentiles."""
    v = np.asarray(values, dtype=float)
    lo, hi = np.percentile(v, [25.0, 75.0])
    return float(lo), float(hi)


def wilcoxon_signed_rank(x, y) -> tuple[float, float]:
    """Two-sided paired Wilcoxon signed-rank test.

    Returns ``(statistic, p_value)``. Zero differences are dropped; if every
    pair is tied the test is undefined and ``(0.0, 1.0)`` is returned. Exact
    p-values are used for small samples without ties, matching published
    small-sample tables.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    d = d[d != 0.0]
    if d.size == 0:
        return 0.0, 1.0
    res = sps.wilcoxon(d, zero_method="wilcox", alternative="two-sided", mode="auto")
    return float(res.statistic), float(res.pvalue)
