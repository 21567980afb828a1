"""Joint samples from a GP posterior that can be progressively extended.

A realisation is one sample path from the fitted model: it is drawn jointly at
an initial set of sites and can later be evaluated at further sites requested
during search. New values are sampled from the conditional Gaussian given the
values already drawn, and the Cholesky factor of the joint covariance is grown
in place by a block update (triangular solves only, O(M^2) per new site).

A realisation behaves as a function: re-querying a site returns the stored
value exactly. Instances are mutable and must be confined to a single thread;
distinct realisations may be extended concurrently.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .gp import GpModel, chol_psd, matern52_matrix

DUPLICATE_TOL = 1e-12


class Realisation:
    """One progressively extended sample path from a GP posterior."""

    def __init__(self, model: GpModel, rng: np.random.Generator):
        self.model = model
        self.rng = rng
        dim = model.data.dim
        self.sites = np.empty((0, dim))
        self.values = np.empty(0)
        self.joint_chol = np.empty((0, 0))
        # whitened residuals w with joint_chol @ w = values - posterior_mean(sites)
        self._w = np.empty(0)
        # cached triangular solves against the model factor, one column per site
        self._v = np.empty((model.data.n, 0))
        self._sites_internal = np.empty((0, dim))

    # -- internals ----------------------------------------------------------

    def _posterior_blocks(self, new_internal: np.ndarray):
        """Posterior mean of the new sites plus covariance blocks against the
        existing sites, all in original output units."""
        m = self.model
        Kxd = matern52_matrix(new_internal, m.train_internal, m.params)
        v_new = solve_triangular(m.chol, Kxd.T, lower=True)
        mean = m.f_shift + m.f_scale * (Kxd @ m.alpha)
        cov_new = (matern52_matrix(new_internal, new_internal, m.params) - v_new.T @ v_new) * m.f_scale**2
        if len(self.sites):
            cross = (
                matern52_matrix(self._sites_internal, new_internal, m.params)
                - self._v.T @ v_new
            ) * m.f_scale**2
        else:
            cross = np.empty((0, len(new_internal)))
        return mean, cov_new, cross, v_new

    def _chol_block(self, cov: np.ndarray) -> np.ndarray:
        """Factor a conditional covariance block, escalating jitter before
        giving up. Scale reference is the model's output variance."""
        scale = self.model.params.signal_variance * self.model.f_scale**2
        return chol_psd(cov, scale)

    def _append(self, new_internal, new_sites, mean, cov, cross, v_new):
        m_old = len(self.sites)
        if m_old:
            b = solve_triangular(self.joint_chol, cross, lower=True)
            cond_mean = mean + b.T @ self._w
            cond_cov = cov - b.T @ b
        else:
            b = np.empty((0, len(new_sites)))
            cond_mean = mean
            cond_cov = cov
        s = self._chol_block(cond_cov)
        z = self.rng.standard_normal(len(new_sites))
        vals = cond_mean + s @ z

        k = len(new_sites)
        grown = np.zeros((m_old + k, m_old + k))
        grown[:m_old, :m_old] = self.joint_chol
        grown[m_old:, :m_old] = b.T
        grown[m_old:, m_old:] = s
        self.joint_chol = grown
        self.sites = np.vstack([self.sites, new_sites]) if m_old else np.array(new_sites)
        self._sites_internal = (
            np.vstack([self._sites_internal, new_internal]) if m_old else np.array(new_internal)
        )
        self.values = np.concatenate([self.values, vals])
        self._w = np.concatenate([self._w, z])
        self._v = np.hstack([self._v, v_new])
        return vals

    # -- public API -----------------------------------------------------------

    def extend(self, new_sites) -> np.ndarray:
        """Values of this realisation at ``new_sites``.

        Sites within ``DUPLICATE_TOL`` (internal coordinates) of an existing
        site return the stored value; genuinely new sites are sampled from the
        conditional Gaussian given everything drawn so far and appended to the
        realisation.
        """
        new_sites = np.atleast_2d(np.asarray(new_sites, dtype=float))
        internal = self.model.to_internal(new_sites)
        out = np.full(len(new_sites), np.nan)
        fresh_rows: list[int] = []
        dup_of: dict[int, int] = {}
        for i, xi in enumerate(internal):
            idx = self._match(xi)
            if idx >= 0:
                out[i] = self.values[idx]
                continue
            twin = next(
                (j for j in fresh_rows if np.linalg.norm(internal[j] - xi) <= DUPLICATE_TOL),
                None,
            )
            if twin is None:
                fresh_rows.append(i)
            else:
                dup_of[i] = twin
        if fresh_rows:
            block_internal = internal[fresh_rows]
            mean, cov, cross, v_new = self._posterior_blocks(block_internal)
            vals = self._append(block_internal, new_sites[fresh_rows], mean, cov, cross, v_new)
            for row, val in zip(fresh_rows, vals):
                out[row] = val
            for row, twin in dup_of.items():
                out[row] = out[twin]
        return out

    def _match(self, xi: np.ndarray) -> int:
        if not len(self._sites_internal):
            return -1
        d = np.linalg.norm(self._sites_internal - xi, axis=1)
        idx = int(np.argmin(d))
        return idx if d[idx] <= DUPLICATE_TOL else -1


def draw_initial(model: GpModel, sites, rng: np.random.Generator) -> Realisation:
    """Draw a fresh realisation jointly at ``sites``: values are the posterior
    mean plus the factored posterior covariance times i.i.d. standard normals.
    Deterministic given the generator state."""
    sites = np.atleast_2d(np.asarray(sites, dtype=float))
    if len(sites) == 0:
        raise ValueError("sites must be non-empty")
    real = Realisation(model, rng)
    real.extend(sites)
    return real
