import numpy as np
import pytest

from mbcrb import (
    FlatPrior,
    GaussianDensity,
    LinearGaussianLikelihood,
    ModelPair,
    build_ar1_covariance,
)


def make_scalar_pair(n_samples: int = 1) -> ModelPair:
    """Scalar pair with a doubled assumed gain; pseudotrue(3) = 1.2."""
    return ModelPair(
        true_prior=GaussianDensity(mean=[0.0], covariance=[[1.0]]),
        true_lik=LinearGaussianLikelihood(observation_matrix=[[1.0]],
                                          noise_covariance=[[1.0]]),
        assumed_prior=GaussianDensity(mean=[0.0], covariance=[[1.0]]),
        assumed_lik=LinearGaussianLikelihood(observation_matrix=[[2.0]],
                                             noise_covariance=[[1.0]]),
        n_samples=n_samples,
    )


def make_reference_pair(n_samples: int = 40) -> ModelPair:
    """3-dim pair with shifted assumed prior mean and white assumed noise."""
    return ModelPair(
        true_prior=GaussianDensity(mean=[10.0, 20.0, 5.0],
                                   covariance=0.5 * np.eye(3)),
        true_lik=LinearGaussianLikelihood(
            observation_matrix=np.eye(3),
            noise_covariance=build_ar1_covariance(0.5, 3, 0.04)),
        assumed_prior=GaussianDensity(mean=[8.0, 18.0, 6.0],
                                      covariance=0.5 * np.eye(3)),
        assumed_lik=LinearGaussianLikelihood(observation_matrix=np.eye(3),
                                             noise_covariance=0.1 * np.eye(3)),
        n_samples=n_samples,
    )


def make_matched_flat_pair(n_samples: int = 5) -> ModelPair:
    """Identical likelihoods and a flat assumed prior; pseudotrue is identity."""
    noise = build_ar1_covariance(0.3, 3, 0.2)
    lik = LinearGaussianLikelihood(observation_matrix=np.eye(3),
                                   noise_covariance=noise)
    return ModelPair(
        true_prior=GaussianDensity(mean=[1.0, -2.0, 0.5],
                                   covariance=0.7 * np.eye(3)),
        true_lik=lik,
        assumed_prior=FlatPrior(3),
        assumed_lik=LinearGaussianLikelihood(observation_matrix=np.eye(3),
                                             noise_covariance=noise.copy()),
        n_samples=n_samples,
    )


def random_spd(rng: np.random.Generator, n: int) -> np.ndarray:
    root = rng.standard_normal((n, n))
    return root @ root.T + (0.3 + rng.random()) * np.eye(n)


def make_random_pair(rng: np.random.Generator, flat: bool = False) -> ModelPair:
    """Random well-posed pair with dimensions up to 5 and N up to 50.

    ``flat`` swaps in an improper assumed prior; the observation dimension is
    then kept at least as large as the parameter dimension so the flat-prior
    normal equations stay invertible.
    """
    n_psi = int(rng.integers(1, 6))
    n_theta = int(rng.integers(1, 6))
    n_obs = int(rng.integers(max(1, n_theta if flat else 1), 6))
    true_prior = GaussianDensity(mean=rng.standard_normal(n_psi),
                                 covariance=random_spd(rng, n_psi))
    true_lik = LinearGaussianLikelihood(
        observation_matrix=rng.standard_normal((n_obs, n_psi)),
        noise_covariance=random_spd(rng, n_obs))
    if flat:
        assumed_prior = FlatPrior(n_theta)
    else:
        assumed_prior = GaussianDensity(mean=rng.standard_normal(n_theta),
                                        covariance=random_spd(rng, n_theta))
    assumed_lik = LinearGaussianLikelihood(
        observation_matrix=rng.standard_normal((n_obs, n_theta)),
        noise_covariance=random_spd(rng, n_obs))
    return ModelPair(true_prior=true_prior, true_lik=true_lik,
                     assumed_prior=assumed_prior, assumed_lik=assumed_lik,
                     n_samples=int(rng.integers(1, 51)))


@pytest.fixture
def scalar_pair() -> ModelPair:
    return make_scalar_pair()


@pytest.fixture
def reference_pair() -> ModelPair:
    return make_reference_pair()


@pytest.fixture
def matched_flat_pair() -> ModelPair:
    return make_matched_flat_pair()
