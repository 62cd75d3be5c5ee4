"""MAP estimation under the assumed model, with Monte Carlo diagnostics.

The assumed-model MAP estimator has the closed form

``theta_hat = (N H^T S^-1 H + P)^-1 (H^T S^-1 sum_n x_n + P mu_theta)``

with ``P`` the assumed prior precision; with a flat prior (``P = 0``) it
degenerates to the quasi maximum likelihood estimator. The normal matrix is
batch-independent, so :class:`MapSolver` factorizes it once per sample count
and reuses the factor across Monte Carlo trials.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .bounds import pseudotrue
from .linalg import spd_factor, spd_solve
from .models import (
    FlatPrior,
    GaussianDensity,
    LinearGaussianLikelihood,
    ModelPair,
    ObservationBatch,
)

__all__ = [
    "EstimatorSpec",
    "MapSolver",
    "estimate",
    "ms_bias_diagnostic",
    "score_diagnostic",
]

MAP = "map"
QMLE = "qmle"


@dataclass(frozen=True, eq=False)
class EstimatorSpec:
    """Which estimator to run and the assumed model it believes in.

    ``kind="qmle"`` forces a flat prior: any proper prior passed alongside it
    is replaced by :class:`FlatPrior` of the matching dimension, since the
    QMLE is exactly the flat-prior MAP.
    """

    kind: str
    assumed_prior: GaussianDensity | FlatPrior
    assumed_lik: LinearGaussianLikelihood

    def __post_init__(self):
        if self.kind not in (MAP, QMLE):
            raise ValueError(f"kind must be {MAP!r} or {QMLE!r}, got {self.kind!r}")
        if self.kind == QMLE and not self.assumed_prior.is_flat:
            object.__setattr__(self, "assumed_prior",
                               FlatPrior(self.assumed_lik.n_param))

    @classmethod
    def from_pair(cls, pair: ModelPair) -> "EstimatorSpec":
        """MAP under the pair's assumed model; QMLE when its prior is flat."""
        kind = QMLE if pair.assumed_prior.is_flat else MAP
        return cls(kind=kind, assumed_prior=pair.assumed_prior,
                   assumed_lik=pair.assumed_lik)

    @property
    def n_theta(self) -> int:
        return self.assumed_lik.n_param


@dataclass(frozen=True, eq=False)
class MapSolver:
    """MAP normal equations for one (spec, sample count), factorized once."""

    spec: EstimatorSpec
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")

    @cached_property
    def _factor(self):
        h = self.spec.assumed_lik.observation_matrix
        normal = (self.n_samples * (h.T @ self.spec.assumed_lik.noise_solve(h))
                  + self.spec.assumed_prior.precision)
        return spd_factor(normal, "MAP normal matrix")

    @cached_property
    def _prior_pull(self) -> np.ndarray:
        return self.spec.assumed_prior.precision_times_mean

    def estimate_from_sum(self, observation_sum: np.ndarray) -> np.ndarray:
        """MAP estimate given ``sum_n x_n``; accepts a (n_obs, T) stack too."""
        lik = self.spec.assumed_lik
        stat = lik.observation_matrix.T @ lik.noise_solve(observation_sum)
        if stat.ndim == 2:
            stat = stat + self._prior_pull[:, None]
        else:
            stat = stat + self._prior_pull
        return spd_solve(self._factor, stat)

    def estimate(self, batch: ObservationBatch) -> np.ndarray:
        if batch.n_samples != self.n_samples:
            raise ValueError(
                f"batch has {batch.n_samples} samples, solver expects {self.n_samples}")
        return self.estimate_from_sum(batch.samples.sum(axis=1))


def estimate(spec: EstimatorSpec, batch: ObservationBatch) -> np.ndarray:
    """One-shot MAP (or QMLE) estimate from a batch of observations.

    Monte Carlo loops should construct a :class:`MapSolver` instead and reuse
    it, which skips re-factorizing the normal matrix every trial.
    """
    return MapSolver(spec, batch.n_samples).estimate(batch)


def _sum_draws(pair: ModelPair, psi: np.ndarray, trials: int,
               rng: np.random.Generator) -> np.ndarray:
    """Draw ``trials`` realizations of the observation column sum.

    The estimator touches the batch only through ``sum_n x_n``, whose law is
    ``N(N H* psi, N Sigma*)``, so one Gaussian draw per trial reproduces the
    full-batch distribution exactly.
    """
    mean = pair.n_samples * (pair.true_lik.observation_matrix @ psi)
    scale = np.sqrt(pair.n_samples)
    noise = pair.true_lik.noise_cholesky @ rng.standard_normal((pair.n_obs, trials))
    return mean[:, None] + scale * noise


def ms_bias_diagnostic(spec: EstimatorSpec, pair: ModelPair, psi: np.ndarray,
                       trials: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo check that the estimator is centered on the pseudotrue point.

    Returns the mean of ``theta_hat - theta_0(psi)`` over ``trials``
    independent batches drawn at fixed ``psi``, together with the standard
    error of that mean. Mean-square unbiasedness predicts a mean within
    statistical noise of zero.
    """
    if trials < 100:
        raise ValueError(f"trials must be >= 100, got {trials}")
    psi = np.asarray(psi, dtype=float)
    target = pseudotrue(pair, psi)
    solver = MapSolver(spec, pair.n_samples)
    rng = np.random.default_rng(int(seed))
    estimates = solver.estimate_from_sum(_sum_draws(pair, psi, trials, rng))
    errors = estimates - target[:, None]
    mean_error = errors.mean(axis=1)
    standard_error = errors.std(axis=1, ddof=1) / np.sqrt(trials)
    return mean_error, standard_error


def score_diagnostic(pair: ModelPair, psi: np.ndarray, trials: int,
                     seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo mean of the true-model likelihood score at fixed ``psi``.

    The score ``H*^T Sigma*^-1 sum_n (x_n - H* psi)`` has zero conditional
    mean under the true model; returns its Monte Carlo mean over ``trials``
    batches and the standard error, for checking that regularity numerically.
    """
    if trials < 100:
        raise ValueError(f"trials must be >= 100, got {trials}")
    psi = np.asarray(psi, dtype=float)
    rng = np.random.default_rng(int(seed))
    sums = _sum_draws(pair, psi, trials, rng)
    centered = sums - pair.n_samples * (
        pair.true_lik.observation_matrix @ psi)[:, None]
    scores = pair.true_lik.observation_matrix.T @ pair.true_lik.noise_solve(centered)
    mean_score = scores.mean(axis=1)
    standard_error = scores.std(axis=1, ddof=1) / np.sqrt(trials)
    return mean_score, standard_error
