"""Gaussian-process regression with a Matern 5/2 kernel.

Provides kernel evaluation, hyperparameter fitting by marginal-likelihood
maximisation (multi-start L-BFGS-B with analytic gradients) and posterior
prediction. Observations are treated as noise-free; a small diagonal jitter
keeps covariance factorisations positive-definite.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from .errors import DegenerateDataWarning, SingularKernel

SQRT5 = math.sqrt(5.0)

# Relative jitter escalation: start at JITTER_REL, multiply by 10 on Cholesky
# failure, give up beyond JITTER_REL_MAX (both relative to signal variance).
JITTER_REL = 1e-8
JITTER_REL_MAX = 1e-2

# log-space hyperparameter box used by the fitter (internal, unit-box inputs
# and standardised outputs): lengthscale in [1e-3, 1e3] domain widths, signal
# variance in [1e-6, 1e6] response variances.
LENGTHSCALE_BOUNDS = (1e-3, 1e3)
VARIANCE_BOUNDS = (1e-6, 1e6)

# Default initialisation, also the fallback for degenerate data.
DEFAULT_LENGTHSCALE = 0.3
DEFAULT_VARIANCE = 1.0


@dataclass
class Dataset:
    """Evaluated locations and responses together with the feasible box.

    Parameters
    ----------
    points : ndarray, shape (n, d)
        Evaluated locations, one row per observation.
    values : ndarray, shape (n,)
        Observed responses.
    bounds : ndarray, shape (d, 2)
        Per-dimension [lower, upper] box containing every point.
    """

    points: np.ndarray
    values: np.ndarray
    bounds: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        self.bounds = np.asarray(self.bounds, dtype=float).reshape(-1, 2)
        if len(self.points) != len(self.values) or len(self.points) < 1:
            raise ValueError("points and values must have equal, positive length")
        if not np.all(np.isfinite(self.points)) or not np.all(np.isfinite(self.values)):
            raise ValueError("points and values must be finite")
        if self.bounds.shape[0] != self.points.shape[1]:
            raise ValueError("bounds must have one [lower, upper] row per dimension")
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        if np.any(lo >= hi):
            raise ValueError("each bound must satisfy lower < upper")
        if np.any(self.points < lo - 1e-12) or np.any(self.points > hi + 1e-12):
            raise ValueError("every point must lie inside the bounds")

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def add(self, x: np.ndarray, f: float) -> "Dataset":
        """New dataset with one extra observation appended."""
        return Dataset(
            np.vstack([self.points, np.asarray(x, dtype=float).reshape(1, -1)]),
            np.append(self.values, float(f)),
            self.bounds,
        )


@dataclass
class KernelParams:
    """Matern 5/2 hyperparameters.

    ``lengthscale`` may be a single shared positive scalar or one positive
    value per dimension. ``jitter`` is the absolute diagonal addition used
    when factorising covariance matrices.
    """

    lengthscale: float | np.ndarray
    signal_variance: float
    jitter: float = 0.0

    def __post_init__(self):
        ls = np.asarray(self.lengthscale, dtype=float)
        if np.any(ls <= 0):
            raise ValueError("lengthscale must be positive")
        if self.signal_variance <= 0:
            raise ValueError("signal_variance must be positive")
        if self.jitter < 0:
            raise ValueError("jitter must be non-negative")

    def lengthscales(self, dim: int) -> np.ndarray:
        ls = np.asarray(self.lengthscale, dtype=float)
        if ls.ndim == 0:
            return np.full(dim, float(ls))
        if ls.shape != (dim,):
            raise ValueError(f"lengthscale has shape {ls.shape}, expected scalar or ({dim},)")
        return ls


def matern52(x, y, params: KernelParams) -> float:
    """Matern 5/2 covariance between two locations.

    k(x, y) = sigma_f^2 (1 + sqrt(5) r + 5 r^2 / 3) exp(-sqrt(5) r) with r the
    lengthscale-scaled Euclidean distance. Symmetric, and equal to the signal
    variance at zero distance.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    ls = params.lengthscales(x.size)
    r = math.sqrt(float(np.sum(((x - y) / ls) ** 2)))
    return params.signal_variance * (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * math.exp(-SQRT5 * r)


def matern52_matrix(X, Y, params: KernelParams) -> np.ndarray:
    """Cross-covariance matrix K[i, j] = k(X[i], Y[j])."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    ls = params.lengthscales(X.shape[1])
    d = (X[:, None, :] - Y[None, :, :]) / ls
    r = np.sqrt(np.maximum(np.sum(d * d, axis=-1), 0.0))
    return params.signal_variance * (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * np.exp(-SQRT5 * r)


def chol_psd(cov: np.ndarray, scale: float) -> np.ndarray:
    """Cholesky factor of a nearly positive-semidefinite covariance block.

    Symmetrises the input and escalates a diagonal jitter (relative to
    ``scale``) tenfold until factorisation succeeds; raises SingularKernel
    beyond JITTER_REL_MAX * scale.
    """
    sym = 0.5 * (cov + cov.T)
    n = sym.shape[0]
    jitter = JITTER_REL * scale
    while True:
        try:
            return np.linalg.cholesky(sym + jitter * np.eye(n))
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > JITTER_REL_MAX * scale:
                raise SingularKernel(
                    "covariance block not positive-definite after jitter escalation"
                ) from None


def _chol_with_escalation(K: np.ndarray, scale: float, start_jitter: float):
    """Cholesky of K + jitter*I, escalating jitter tenfold until it exceeds
    JITTER_REL_MAX * scale. Returns (L, jitter_used)."""
    n = K.shape[0]
    jitter = max(float(start_jitter), 0.0)
    while True:
        try:
            L = np.linalg.cholesky(K + jitter * np.eye(n) if jitter > 0 else K)
            return L, jitter
        except np.linalg.LinAlgError:
            jitter = max(jitter * 10.0, JITTER_REL * scale)
            if jitter > JITTER_REL_MAX * scale:
                raise SingularKernel(
                    f"covariance not positive-definite after jitter escalation to {jitter:.3e}"
                ) from None


@dataclass
class GpModel:
    """A fitted Gaussian process. Immutable once constructed; safe to share
    across concurrent readers.

    Internally the model may operate on affinely transformed coordinates
    (inputs mapped to the unit box, outputs standardised); predictions are
    always returned in original units.
    """

    data: Dataset
    params: KernelParams
    chol: np.ndarray
    alpha: np.ndarray
    x_shift: np.ndarray
    x_scale: np.ndarray
    f_shift: float
    f_scale: float
    meta: dict = field(default_factory=dict)

    # -- construction -----------------------------------------------------

    @classmethod
    def build(cls, data: Dataset, params: KernelParams) -> "GpModel":
        """Model with explicit hyperparameters in raw data units (no internal
        rescaling). Raises SingularKernel if the kernel matrix cannot be
        factorised after jitter escalation."""
        dim = data.dim
        K = matern52_matrix(data.points, data.points, params)
        L, jitter = _chol_with_escalation(K, params.signal_variance, params.jitter)
        alpha = cho_solve((L, True), data.values)
        meta = {"jitter": jitter, "rescued": jitter > params.jitter}
        return cls(
            data=data,
            params=params,
            chol=L,
            alpha=alpha,
            x_shift=np.zeros(dim),
            x_scale=np.ones(dim),
            f_shift=0.0,
            f_scale=1.0,
            meta=meta,
        )

    # -- coordinate transforms --------------------------------------------

    def to_internal(self, X: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(np.asarray(X, dtype=float)) - self.x_shift) / self.x_scale

    @property
    def train_internal(self) -> np.ndarray:
        return self.to_internal(self.data.points)

    # -- posterior queries -------------------------------------------------

    def predict(self, x) -> tuple:
        """Posterior mean and variance at ``x``.

        A single location (d,) yields a pair of floats; a batch (n, d) yields
        a pair of arrays. Variances are clamped to be non-negative.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        Xi = self.to_internal(x)
        Kxd = matern52_matrix(Xi, self.train_internal, self.params)
        mean_i = Kxd @ self.alpha
        V = solve_triangular(self.chol, Kxd.T, lower=True)
        var_i = self.params.signal_variance - np.sum(V * V, axis=0)
        mean = self.f_shift + self.f_scale * mean_i
        var = np.maximum(var_i, 0.0) * self.f_scale**2
        if single:
            return float(mean[0]), float(var[0])
        return mean, var

    def predict_mean(self, X) -> np.ndarray:
        """Posterior mean only (skips the variance solves)."""
        Xi = self.to_internal(X)
        Kxd = matern52_matrix(Xi, self.train_internal, self.params)
        return self.f_shift + self.f_scale * (Kxd @ self.alpha)

    def posterior_mean_cov(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Joint posterior mean vector and covariance matrix over rows of X,
        in original units (no jitter added)."""
        Xi = self.to_internal(X)
        Kxd = matern52_matrix(Xi, self.train_internal, self.params)
        Kxx = matern52_matrix(Xi, Xi, self.params)
        V = solve_triangular(self.chol, Kxd.T, lower=True)
        mean = self.f_shift + self.f_scale * (Kxd @ self.alpha)
        cov = (Kxx - V.T @ V) * self.f_scale**2
        return mean, cov


def predict(model: GpModel, x):
    """Module-level alias for :meth:`GpModel.predict`."""
    return model.predict(x)


# ---------------------------------------------------------------------------
# Marginal likelihood and fitting
# ---------------------------------------------------------------------------


def log_marginal_likelihood(data: Dataset, params: KernelParams) -> float:
    """log p(values | params) for the noise-free GP, via the Cholesky factor:

        -1/2 f' K^-1 f - sum(log diag(L)) - n/2 log(2 pi).

    Raises SingularKernel when K (plus escalated jitter) is not
    positive-definite.
    """
    K = matern52_matrix(data.points, data.points, params)
    L, _ = _chol_with_escalation(K, params.signal_variance, params.jitter)
    alpha = cho_solve((L, True), data.values)
    return float(
        -0.5 * data.values @ alpha
        - np.sum(np.log(np.diag(L)))
        - 0.5 * data.n * math.log(2.0 * math.pi)
    )


def _make_objective(points: np.ndarray, values: np.ndarray, ard: bool, jitter_rel: float):
    """Negative log marginal likelihood (and gradient) over log-parameters.

    Parameter vector is (log lengthscale [1 or d entries], log signal
    variance). Jitter is tied to the signal variance (jitter_rel * sigma_f^2),
    so every term of K scales with sigma_f^2 and dK/dlog(sigma_f^2) = K.
    """
    n, dim = points.shape
    diff = points[:, None, :] - points[None, :, :]
    d2 = diff * diff  # (n, n, dim)
    d2_total = np.sum(d2, axis=-1)
    eye = np.eye(n)

    def objective(theta: np.ndarray):
        n_ls = dim if ard else 1
        ls = np.exp(theta[:n_ls])
        sigma2 = math.exp(theta[n_ls])
        if ard:
            scaled = np.sum(d2 / (ls**2), axis=-1)
        else:
            scaled = d2_total / (ls[0] ** 2)
        r = np.sqrt(np.maximum(scaled, 0.0))
        expo = np.exp(-SQRT5 * r)
        K = sigma2 * ((1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * expo + jitter_rel * eye)
        try:
            L = np.linalg.cholesky(K)
        except np.linalg.LinAlgError:
            return 1e25, np.zeros_like(theta)
        alpha = cho_solve((L, True), values)
        lml = (
            -0.5 * values @ alpha
            - np.sum(np.log(np.diag(L)))
            - 0.5 * n * math.log(2.0 * math.pi)
        )
        Kinv = cho_solve((L, True), eye)
        A = np.outer(alpha, alpha) - Kinv
        # dK/dlog(ls_d): (5/3) sigma2 (1 + sqrt5 r) exp(-sqrt5 r) * d2_d / ls_d^2
        base = (5.0 / 3.0) * sigma2 * (1.0 + SQRT5 * r) * expo
        grad = np.empty_like(theta)
        if ard:
            for d in range(dim):
                dK = base * (d2[:, :, d] / ls[d] ** 2)
                grad[d] = 0.5 * np.sum(A * dK)
        else:
            dK = base * scaled
            grad[0] = 0.5 * np.sum(A * dK)
        grad[n_ls] = 0.5 * np.sum(A * K)  # dK/dlog(sigma2) = K (jitter tied)
        return -lml, -grad

    return objective


def fit(
    data: Dataset,
    restarts: int = 10,
    rng: np.random.Generator | int | None = None,
    ard: bool = False,
    normalise: bool = True,
) -> GpModel:
    """Fit kernel hyperparameters by maximising the log marginal likelihood.

    Runs L-BFGS-B from a default initialisation plus ``restarts`` random
    log-uniform starts and keeps the best optimum. Inputs are rescaled to the
    unit box and outputs standardised before fitting (``normalise=True``);
    predictions are produced in original units either way.

    If all response values are identical the optimisation is skipped and the
    model falls back to default hyperparameters, emitting
    DegenerateDataWarning and setting ``meta['degenerate']``.
    """
    rng = np.random.default_rng(rng)
    dim = data.dim

    if normalise:
        x_shift = data.bounds[:, 0].astype(float)
        x_scale = data.bounds[:, 1] - data.bounds[:, 0]
        f_shift = float(np.mean(data.values))
        f_std = float(np.std(data.values))
    else:
        x_shift = np.zeros(dim)
        x_scale = np.ones(dim)
        f_shift = 0.0
        f_std = 1.0

    degenerate = normalise and f_std == 0.0
    f_scale = 1.0 if (not normalise or degenerate) else f_std

    pts = (data.points - x_shift) / x_scale
    vals = (data.values - f_shift) / f_scale

    n_ls = dim if ard else 1
    if degenerate or data.n < 2:
        if degenerate:
            warnings.warn(
                "all response values identical; falling back to default hyperparameters",
                DegenerateDataWarning,
            )
        ls = np.full(n_ls, DEFAULT_LENGTHSCALE)
        best_theta = np.concatenate([np.log(ls), [math.log(DEFAULT_VARIANCE)]])
        best_nll = np.nan
    else:
        objective = _make_objective(pts, vals, ard, JITTER_REL)
        lo = np.concatenate(
            [np.full(n_ls, math.log(LENGTHSCALE_BOUNDS[0])), [math.log(VARIANCE_BOUNDS[0])]]
        )
        hi = np.concatenate(
            [np.full(n_ls, math.log(LENGTHSCALE_BOUNDS[1])), [math.log(VARIANCE_BOUNDS[1])]]
        )
        starts = [
            np.concatenate(
                [np.full(n_ls, math.log(DEFAULT_LENGTHSCALE)), [math.log(DEFAULT_VARIANCE)]]
            )
        ]
        for _ in range(max(0, restarts - 1)):
            s_ls = rng.uniform(math.log(0.05), math.log(2.0), size=n_ls)
            s_v = rng.uniform(math.log(0.1), math.log(10.0))
            starts.append(np.concatenate([s_ls, [s_v]]))
        best_theta, best_nll = None, np.inf
        for start in starts:
            res = minimize(
                objective,
                start,
                jac=True,
                method="L-BFGS-B",
                bounds=list(zip(lo, hi)),
            )
            if res.fun < best_nll:
                best_nll = float(res.fun)
                best_theta = res.x

    ls = np.exp(best_theta[:n_ls])
    sigma2 = math.exp(best_theta[n_ls])
    params = KernelParams(
        lengthscale=ls if ard else float(ls[0]),
        signal_variance=sigma2,
        jitter=JITTER_REL * sigma2,
    )
    K = matern52_matrix(pts, pts, params)
    L, jitter = _chol_with_escalation(K, sigma2, params.jitter)
    alpha = cho_solve((L, True), vals)
    meta = {
        "log_marginal_likelihood": None if math.isnan(best_nll) else -best_nll,
        "restarts": restarts,
        "jitter": jitter,
        "rescued": jitter > params.jitter,
        "degenerate": degenerate,
        "ard": ard,
    }
    if jitter != params.jitter:
        params = KernelParams(params.lengthscale, params.signal_variance, jitter)
    return GpModel(
        data=data,
        params=params,
        chol=L,
        alpha=alpha,
        x_shift=x_shift,
        x_scale=np.asarray(x_scale, dtype=float),
        f_shift=f_shift,
        f_scale=f_scale,
        meta=meta,
    )
