"""True/assumed linear-Gaussian model definitions and sampling.

The estimation setup pairs a true data-generating model (Gaussian prior on
the parameter ``psi``, observations ``x_n ~ N(H* psi, Sigma*)``) with an
assumed, possibly misspecified model of the same structure over a parameter
``theta`` whose dimension may differ.

Types are permissive containers: constructors coerce shapes and freeze the
arrays, while well-formedness (symmetry, positive definiteness, dimension
coherence) is reported by :func:`validate_model_pair` and enforced lazily by
the operations that need it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .linalg import (
    NumericalError,
    SYMMETRY_RTOL,
    cholesky_lower,
    log_det_from_cholesky,
    spd_factor,
    spd_solve,
    symmetry_defect,
)

__all__ = [
    "GaussianDensity",
    "FlatPrior",
    "LinearGaussianLikelihood",
    "ModelPair",
    "ObservationBatch",
    "build_ar1_covariance",
    "validate_model_pair",
    "sample_parameter",
    "sample_observations",
    "with_n_samples",
    "derived_rng",
    "derive_seeds",
    "float_key",
]


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class GaussianDensity:
    """Multivariate normal with mean vector and SPD covariance."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen_array(self.mean, 1, "mean"))
        object.__setattr__(self, "covariance",
                           _frozen_array(self.covariance, 2, "covariance"))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def is_flat(self) -> bool:
        return False

    @cached_property
    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor of the covariance (raises if not SPD)."""
        return cholesky_lower(self.covariance, "covariance")

    @cached_property
    def _factor(self):
        return spd_factor(self.covariance, "covariance")

    @cached_property
    def precision(self) -> np.ndarray:
        return spd_solve(self._factor, np.eye(self.dim))

    @cached_property
    def precision_times_mean(self) -> np.ndarray:
        return spd_solve(self._factor, self.mean)

    @cached_property
    def log_det_covariance(self) -> float:
        return log_det_from_cholesky(self.cholesky)

    def neg_log_density(self, point: np.ndarray) -> float:
        """-log N(point; mean, covariance), normalization constant included."""
        delta = np.asarray(point, dtype=float) - self.mean
        quad = float(delta @ spd_solve(self._factor, delta))
        return 0.5 * (self.dim * np.log(2.0 * np.pi)
                      + self.log_det_covariance + quad)


@dataclass(frozen=True, eq=False)
class FlatPrior:
    """Improper flat prior, represented as zero precision.

    Stands in for the limit of a Gaussian prior with unbounded covariance,
    under which the MAP estimator degenerates to the quasi maximum
    likelihood estimator.
    """

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("FlatPrior dimension must be >= 1")

    @property
    def is_flat(self) -> bool:
        return True

    @property
    def precision(self) -> np.ndarray:
        return np.zeros((self.dim, self.dim))

    @property
    def precision_times_mean(self) -> np.ndarray:
        return np.zeros(self.dim)

    def neg_log_density(self, point: np.ndarray) -> float:
        return 0.0


@dataclass(frozen=True, eq=False)
class LinearGaussianLikelihood:
    """Observation model ``x | param ~ N(observation_matrix @ param, noise_covariance)``."""

    observation_matrix: np.ndarray
    noise_covariance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "observation_matrix",
                           _frozen_array(self.observation_matrix, 2, "observation_matrix"))
        object.__setattr__(self, "noise_covariance",
                           _frozen_array(self.noise_covariance, 2, "noise_covariance"))

    @property
    def n_obs(self) -> int:
        return self.observation_matrix.shape[0]

    @property
    def n_param(self) -> int:
        return self.observation_matrix.shape[1]

    @cached_property
    def noise_cholesky(self) -> np.ndarray:
        return cholesky_lower(self.noise_covariance, "noise_covariance")

    @cached_property
    def _noise_factor(self):
        return spd_factor(self.noise_covariance, "noise_covariance")

    def noise_solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``noise_covariance @ x = rhs`` via the cached factor."""
        return spd_solve(self._noise_factor, rhs)

    @cached_property
    def log_det_noise(self) -> float:
        return log_det_from_cholesky(self.noise_cholesky)


@dataclass(frozen=True, eq=False)
class ModelPair:
    """True model, assumed model, and the number of i.i.d. observations N."""

    true_prior: GaussianDensity
    true_lik: LinearGaussianLikelihood
    assumed_prior: GaussianDensity | FlatPrior
    assumed_lik: LinearGaussianLikelihood
    n_samples: int

    @property
    def n_psi(self) -> int:
        return self.true_lik.n_param

    @property
    def n_theta(self) -> int:
        return self.assumed_lik.n_param

    @property
    def n_obs(self) -> int:
        return self.true_lik.n_obs


@dataclass(frozen=True, eq=False)
class ObservationBatch:
    """N observation columns drawn under the true model for one parameter draw."""

    samples: np.ndarray
    generating_parameter: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen_array(self.samples, 2, "samples"))
        object.__setattr__(
            self, "generating_parameter",
            _frozen_array(self.generating_parameter, 1, "generating_parameter"))

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def column_mean(self) -> np.ndarray:
        return self.samples.mean(axis=1)


def build_ar1_covariance(rho: float, n: int, sigma_sq: float) -> np.ndarray:
    """Order-1 autoregressive covariance ``sigma_sq * rho**|i-j|``.

    Parameters
    ----------
    rho : float
        Correlation parameter, must satisfy ``|rho| < 1`` so the Toeplitz
        matrix stays positive definite.
    n : int
        Dimension (number of observation components).
    sigma_sq : float
        Marginal variance, must be positive.
    """
    if not abs(rho) < 1:
        raise ValueError(f"rho must satisfy |rho| < 1, got {rho}")
    if sigma_sq <= 0:
        raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    idx = np.arange(n)
    return sigma_sq * float(rho) ** np.abs(idx[:, None] - idx[None, :])


def _density_violations(density: GaussianDensity | FlatPrior, label: str) -> list[str]:
    if isinstance(density, FlatPrior):
        return []
    issues = []
    cov = density.covariance
    if cov.shape[0] != cov.shape[1]:
        issues.append(f"{label}: covariance not square (shape {cov.shape})")
        return issues
    if density.mean.shape[0] != cov.shape[0]:
        issues.append(f"{label}: mean length {density.mean.shape[0]} does not "
                      f"match covariance dimension {cov.shape[0]}")
    if symmetry_defect(cov) > SYMMETRY_RTOL:
        issues.append(f"{label}: covariance not symmetric")
    else:
        try:
            density.cholesky
        except NumericalError:
            issues.append(f"{label}: covariance not positive definite")
    return issues


def _likelihood_violations(lik: LinearGaussianLikelihood, label: str) -> list[str]:
    issues = []
    noise = lik.noise_covariance
    if noise.shape[0] != noise.shape[1]:
        issues.append(f"{label}: noise_covariance not square (shape {noise.shape})")
        return issues
    if lik.observation_matrix.shape[0] != noise.shape[0]:
        issues.append(
            f"{label}: dimension mismatch, observation_matrix has "
            f"{lik.observation_matrix.shape[0]} rows but noise_covariance "
            f"dimension is {noise.shape[0]}")
    if symmetry_defect(noise) > SYMMETRY_RTOL:
        issues.append(f"{label}: noise_covariance not symmetric")
    else:
        try:
            lik.noise_cholesky
        except NumericalError:
            issues.append(f"{label}: noise_covariance not positive definite")
    return issues


def validate_model_pair(pair: ModelPair) -> list[str]:
    """Report every violated well-formedness invariant; empty means valid."""
    issues: list[str] = []
    issues += _density_violations(pair.true_prior, "true_prior")
    issues += _density_violations(pair.assumed_prior, "assumed_prior")
    issues += _likelihood_violations(pair.true_lik, "true_lik")
    issues += _likelihood_violations(pair.assumed_lik, "assumed_lik")
    if pair.true_lik.n_obs != pair.assumed_lik.n_obs:
        issues.append(
            f"pair: dimension mismatch, true_lik has {pair.true_lik.n_obs} "
            f"observation rows but assumed_lik has {pair.assumed_lik.n_obs}")
    true_dim = (pair.true_prior.dim if isinstance(pair.true_prior, FlatPrior)
                else pair.true_prior.mean.shape[0])
    if true_dim != pair.true_lik.n_param:
        issues.append(
            f"pair: true_prior dimension {true_dim} does not match "
            f"true_lik parameter dimension {pair.true_lik.n_param}")
    assumed_dim = (pair.assumed_prior.dim if isinstance(pair.assumed_prior, FlatPrior)
                   else pair.assumed_prior.mean.shape[0])
    if assumed_dim != pair.assumed_lik.n_param:
        issues.append(
            f"pair: assumed_prior dimension {assumed_dim} does not match "
            f"assumed_lik parameter dimension {pair.assumed_lik.n_param}")
    if pair.n_samples < 1:
        issues.append(f"pair: n_samples must be >= 1, got {pair.n_samples}")
    return issues


def float_key(value: float) -> int:
    """Stable 64-bit integer key for a float (its IEEE-754 bit pattern)."""
    return int(np.float64(value).view(np.uint64))


def derived_rng(master_seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream identified by (master_seed, keys).

    Streams derived with distinct key tuples are statistically independent
    regardless of the order they are consumed in, which keeps Monte Carlo
    results invariant to execution order and worker count.
    """
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *map(int, keys)]))


def derive_seeds(master_seed: int, *keys: int, count: int = 2) -> list[int]:
    """Derive ``count`` child seeds from (master_seed, keys)."""
    ss = np.random.SeedSequence([int(master_seed), *map(int, keys)])
    return [int(s) for s in ss.generate_state(count, np.uint64)]


def sample_parameter(prior: GaussianDensity, rng_seed: int) -> np.ndarray:
    """One draw from the prior via its Cholesky factor; deterministic in the seed."""
    rng = np.random.default_rng(int(rng_seed))
    return prior.mean + prior.cholesky @ rng.standard_normal(prior.dim)


def sample_observations(pair: ModelPair, psi: np.ndarray, rng_seed: int) -> ObservationBatch:
    """Draw the N observation columns ``H* psi + L* z`` under the true model."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (pair.n_psi,):
        raise ValueError(f"psi must have shape ({pair.n_psi},), got {psi.shape}")
    rng = np.random.default_rng(int(rng_seed))
    noise = pair.true_lik.noise_cholesky @ rng.standard_normal(
        (pair.n_obs, pair.n_samples))
    samples = (pair.true_lik.observation_matrix @ psi)[:, None] + noise
    return ObservationBatch(samples=samples, generating_parameter=psi,
                            seed=int(rng_seed))


def with_n_samples(pair: ModelPair, n_samples: int) -> ModelPair:
    """Copy of the pair with a different observation count."""
    return replace(pair, n_samples=int(n_samples))
