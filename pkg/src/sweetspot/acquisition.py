"""Acquisition functions: classic expected improvement and its Monte-Carlo
sweet-spot counterpart.

The sweet-spot acquisition scores a candidate ball by drawing joint sample
paths of the model over the incumbent ball and the candidate ball and
averaging the clipped worst-case quality gain. A single path must cover both
balls: scoring them against independent paths ignores their dependence and
inflates the improvement (it would be nonzero even for the incumbent itself).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtr

from . import evo
from .errors import SingularKernel
from .gp import JITTER_REL_MAX, SQRT5, Dataset, GpModel, chol_psd, matern52_matrix
from .realisation import Realisation
from .region import SweetSpot, SweetSpotShape, in_neighbourhood, sample_interior
from .stats import norm_pdf_cdf, sample_unit_ball

SIGMA_FLOOR = 1e-12


@dataclass
class BestSoFar:
    """Incumbents tracked during optimisation: the best single evaluation
    (for baseline expected improvement) and the best sweet-spot centre with
    its model-based worst-case quality estimate."""

    point_best: float
    point_best_location: np.ndarray
    sweet_best: np.ndarray
    sweet_best_quality: float


def expected_improvement(model: GpModel, x, f_star: float) -> float:
    """Closed-form expected improvement of a single point under the model:
    (f* - mu) Phi(Z) + sigma phi(Z), Z = (f* - mu) / sigma. Degenerates to
    max(f* - mu, 0) when sigma vanishes. Always non-negative."""
    mu, var = model.predict(np.asarray(x, dtype=float).reshape(-1))
    sigma = math.sqrt(max(var, 0.0))
    gap = f_star - mu
    if sigma < SIGMA_FLOOR:
        return max(gap, 0.0)
    z = gap / sigma
    pdf, cdf = norm_pdf_cdf(z)
    return max(gap * cdf + sigma * pdf, 0.0)


# ---------------------------------------------------------------------------
# Best-so-far sweet spot
# ---------------------------------------------------------------------------


def make_quality_objective(model: GpModel, data: Dataset, shape: SweetSpotShape, m: int, rng):
    """Estimator of the worst-case posterior-mean quality of the ball at x.

    The inner maximum is taken over the centre, ``m - 1`` fixed uniform ball
    offsets (shared across all candidate centres so the surface is
    deterministic within one call) and any evaluated points inside the ball;
    offsets falling outside the box are discarded (the ball is clipped).

    The returned callable maps a single centre (d,) to a float or a batch
    (k, d) to a (k,) array.
    """
    dim = data.dim
    lo, hi = data.bounds[:, 0], data.bounds[:, 1]
    offsets = np.vstack(
        [np.zeros((1, dim)), shape.radius * sample_unit_ball(m - 1, dim, rng)]
    )  # centre first
    mu_data, _ = model.predict(data.points)

    def quality(x: np.ndarray):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        k = len(X)
        pts = X[:, None, :] + offsets[None, :, :]  # (k, m, d)
        flat = pts.reshape(-1, dim)
        in_box = np.all(flat >= lo, axis=1) & np.all(flat <= hi, axis=1)
        mu = np.full(len(flat), -np.inf)
        if np.any(in_box):
            mu[in_box] = model.predict_mean(flat[in_box])
        q = mu.reshape(k, -1).max(axis=1)
        # evaluated locations falling inside each ball also count
        d2 = np.sum((X[:, None, :] - data.points[None, :, :]) ** 2, axis=-1)
        inside = d2 <= shape.radius**2
        if np.any(inside):
            masked = np.where(inside, mu_data[None, :], -np.inf)
            q = np.maximum(q, masked.max(axis=1))
        return float(q[0]) if single else q

    return quality


def best_sweetspot(
    model: GpModel,
    data: Dataset,
    shape: SweetSpotShape,
    evo_config: evo.EvoConfig,
    m: int,
    rng: np.random.Generator,
) -> BestSoFar:
    """Identify the incumbent sweet spot: the centre, constrained to contain
    at least one evaluated location, minimising the worst-case posterior-mean
    quality estimate. The optimiser population is seeded with every evaluated
    point, so a feasible solution always exists."""
    quality = make_quality_objective(model, data, shape, m, rng)
    region = evo.NeighbourhoodRegion(data.bounds, data.points, shape.radius)
    x_star, neg_q = evo.maximise(
        lambda x: -quality(x), region, evo_config, seeds=data.points, rng=rng, vectorised=True
    )
    assert in_neighbourhood(x_star, data.points, shape)
    idx = int(np.argmin(data.values))
    return BestSoFar(
        point_best=float(data.values[idx]),
        point_best_location=data.points[idx].copy(),
        sweet_best=x_star,
        sweet_best_quality=-neg_q,
    )


# ---------------------------------------------------------------------------
# Monte-Carlo sweet-spot expected improvement
# ---------------------------------------------------------------------------


def ei_sweetspot(
    model: GpModel,
    candidate: SweetSpot,
    best: BestSoFar,
    J: int,
    m: int,
    rng: np.random.Generator,
) -> float:
    """Monte-Carlo sweet-spot expected improvement of ``candidate`` over the
    incumbent.

    For each of ``J`` sample paths: draw fresh uniform sites over both balls,
    evaluate one joint realisation across all of them, and record the clipped
    gap between the incumbent's worst sampled value and the candidate's.
    Returns the average gap (non-negative, deterministic under the rng seed).

    Both balls consume the same per-path offset stream, so a candidate that
    coincides with the incumbent gets identical sites and exactly zero
    improvement.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    incumbent = SweetSpot(best.sweet_best, candidate.shape, candidate.bounds)
    total = 0.0
    for _ in range(J):
        state = rng.bit_generator.state
        inc_sites = sample_interior(incumbent, m, rng)
        twin = np.random.default_rng()
        twin.bit_generator.state = state
        cand_sites = sample_interior(candidate, m, twin)
        real = Realisation(model, rng)
        vals_inc = real.extend(inc_sites)
        vals_cand = real.extend(cand_sites)
        total += max(0.0, float(np.max(vals_inc)) - float(np.max(vals_cand)))
    return total / J


def make_ei_objective(
    model: GpModel,
    data: Dataset,
    shape: SweetSpotShape,
    best: BestSoFar,
    J: int,
    m: int,
    rng: np.random.Generator,
):
    """Deterministic sweet-spot EI surface for one proposal round.

    Draws a per-round block of randomness (incumbent sites, candidate ball
    offsets and J pairs of standard-normal vectors) up front; every candidate
    centre is then scored against the same block. This keeps the surface
    noise-free for the optimiser and comparable across candidates, and lets
    all J paths share covariance factorisations: the candidate block of each
    path is sampled by conditioning on the incumbent block via triangular
    solves, exactly as in incremental path extension.

    The returned callable maps a single centre (d,) to a float or a batch
    (k, d) to a (k,) array; the batch form factorises and samples all
    candidates of one optimiser generation together.
    """
    lo, hi = data.bounds[:, 0], data.bounds[:, 1]
    dim = data.dim
    incumbent = SweetSpot(best.sweet_best, shape, data.bounds)
    inc_sites = sample_interior(incumbent, m, rng)
    offsets = np.vstack(
        [np.zeros((1, dim)), shape.radius * sample_unit_ball(m - 1, dim, rng)]
    )  # candidate sites are centre + these offsets
    z_inc = rng.standard_normal((m, J))
    z_cand = rng.standard_normal((m, J))

    p = model.params
    scale = p.signal_variance * model.f_scale**2
    fscale2 = model.f_scale**2
    train = model.train_internal
    inc_internal = model.to_internal(inc_sites)
    k_inc = matern52_matrix(inc_internal, train, p)
    v_inc = solve_triangular(model.chol, k_inc.T, lower=True)
    mu_inc = model.f_shift + model.f_scale * (k_inc @ model.alpha)
    cov_inc = (matern52_matrix(inc_internal, inc_internal, p) - v_inc.T @ v_inc) * fscale2
    l_inc = chol_psd(cov_inc, scale)
    f_inc = mu_inc[:, None] + l_inc @ z_inc  # (m, J)
    q_star = f_inc.max(axis=0)  # (J,)
    base_jitter = 1e-8 * scale

    def objective(x: np.ndarray):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        k = len(X)
        sites = X[:, None, :] + offsets[None, :, :]  # (k, m, d)
        flat = sites.reshape(-1, dim)
        in_box = (np.all(flat >= lo, axis=1) & np.all(flat <= hi, axis=1)).reshape(k, m)
        cand_internal = model.to_internal(flat)
        k_cand = matern52_matrix(cand_internal, train, p)  # (k*m, n_train)
        v_cand = solve_triangular(model.chol, k_cand.T, lower=True)  # (n_train, k*m)
        mu_cand = (model.f_shift + model.f_scale * (k_cand @ model.alpha)).reshape(k, m)

        # per-candidate posterior covariance blocks (k, m, m), internal coords
        ci3 = cand_internal.reshape(k, m, dim)
        diff = (ci3[:, :, None, :] - ci3[:, None, :, :]) / p.lengthscales(dim)
        r = np.sqrt(np.maximum(np.sum(diff * diff, axis=-1), 0.0))
        kern = p.signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * np.exp(-SQRT5 * r)
        v_r = v_cand.reshape(-1, k, m)
        cov_cand = (kern - np.einsum("nki,nkj->kij", v_r, v_r)) * fscale2

        # cross-covariance of incumbent sites with each candidate block (k, m, m)
        cross = (
            matern52_matrix(inc_internal, cand_internal, p) - v_inc.T @ v_cand
        ) * fscale2  # (m, k*m)
        b = solve_triangular(l_inc, cross, lower=True).reshape(m, k, m)
        b = np.ascontiguousarray(b.transpose(1, 0, 2))  # (k, m_inc, m_cand)
        cond = cov_cand - b.transpose(0, 2, 1) @ b
        cond = 0.5 * (cond + cond.transpose(0, 2, 1))
        diag = np.arange(m)
        jitter = base_jitter
        cond[:, diag, diag] += jitter
        while True:
            try:
                s = np.linalg.cholesky(cond)
                break
            except np.linalg.LinAlgError:
                cond[:, diag, diag] += 9.0 * jitter
                jitter *= 10.0
                if jitter > JITTER_REL_MAX * scale:
                    raise SingularKernel(
                        "conditional covariance not positive-definite after jitter escalation"
                    ) from None
        f_cand = mu_cand[:, :, None] + b.transpose(0, 2, 1) @ z_inc + s @ z_cand  # (k, m, J)
        f_cand[~in_box] = -np.inf  # clipped to the box: only interior sites count
        q_cand = f_cand.max(axis=1)  # (k, J)
        ei = np.mean(np.maximum(q_star[None, :] - q_cand, 0.0), axis=1)
        return float(ei[0]) if single else ei

    return objective


def propose(
    model: GpModel,
    data: Dataset,
    shape: SweetSpotShape,
    best: BestSoFar,
    evo_config: evo.EvoConfig,
    J: int,
    m: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Centre of the next sweet spot: the box location maximising the
    sweet-spot expected improvement surface of this round."""
    objective = make_ei_objective(model, data, shape, best, J, m, rng)
    region = evo.BoxRegion(data.bounds)
    seeds = np.vstack([best.sweet_best[None, :], best.point_best_location[None, :]])
    x_next, _ = evo.maximise(objective, region, evo_config, seeds=seeds, rng=rng, vectorised=True)
    return x_next


def propose_point_ei(
    model: GpModel,
    data: Dataset,
    evo_config: evo.EvoConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Baseline proposer: the box location maximising classic single-point
    expected improvement over the best evaluation so far."""
    f_star = float(np.min(data.values))
    region = evo.BoxRegion(data.bounds)

    def ei_batch(X):
        mu, var = model.predict(np.atleast_2d(X))
        sigma = np.sqrt(np.maximum(var, 0.0))
        gap = f_star - mu
        z = np.divide(gap, sigma, out=np.zeros_like(gap), where=sigma >= SIGMA_FLOOR)
        pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        ei = np.where(sigma < SIGMA_FLOOR, np.maximum(gap, 0.0), gap * ndtr(z) + sigma * pdf)
        return np.maximum(ei, 0.0)

    x_next, _ = evo.maximise(ei_batch, region, evo_config, seeds=data.points, rng=rng, vectorised=True)
    return x_next
