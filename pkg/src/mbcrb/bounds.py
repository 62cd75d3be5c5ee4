"""Closed-form Bayesian bounds under model misspecification.

For the linear-Gaussian pair everything reduces to dense matrix algebra:
the pseudotrue parameter (the assumed-model MAP limit) is an affine map of
the true parameter, its Jacobian is constant, and the misspecified bound is
a congruence transform of the matched-model Bayesian Cramer-Rao bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .linalg import check_psd, spd_factor, spd_solve, symmetrize
from .models import ModelPair

__all__ = [
    "BfimDecomposition",
    "BoundReport",
    "pseudotrue_affine",
    "pseudotrue",
    "pseudotrue_jacobian",
    "bfim",
    "bcrb",
    "mbcrb",
    "bias_vector",
    "biased_bound",
    "map_error_covariance",
    "bound_report",
]


def _assumed_information(pair: ModelPair) -> np.ndarray:
    """N H^T Sigma^-1 H + assumed prior precision (the MAP curvature)."""
    h = pair.assumed_lik.observation_matrix
    data_term = pair.n_samples * (h.T @ pair.assumed_lik.noise_solve(h))
    return symmetrize(data_term + pair.assumed_prior.precision)


def pseudotrue_affine(pair: ModelPair) -> tuple[np.ndarray, np.ndarray]:
    """Gain and offset of the affine map ``psi -> pseudotrue parameter``.

    The pseudotrue parameter is the minimizer over theta of the KL divergence
    from the true joint density to the assumed one at fixed psi; in the
    linear-Gaussian case it is ``gain @ psi + offset`` with

    ``gain = (N H^T S^-1 H + P_theta)^-1 N H^T S^-1 H*``
    ``offset = (N H^T S^-1 H + P_theta)^-1 P_theta mu_theta``

    where ``P_theta`` is the assumed prior precision (zero for a flat prior).
    """
    curvature = spd_factor(_assumed_information(pair), "assumed-model information")
    h = pair.assumed_lik.observation_matrix
    h_true = pair.true_lik.observation_matrix
    cross = pair.n_samples * (h.T @ pair.assumed_lik.noise_solve(h_true))
    gain = spd_solve(curvature, cross)
    offset = spd_solve(curvature, pair.assumed_prior.precision_times_mean)
    return gain, offset


def pseudotrue(pair: ModelPair, psi: np.ndarray) -> np.ndarray:
    """Pseudotrue parameter ``theta_0(psi)`` for one true-parameter value."""
    gain, offset = pseudotrue_affine(pair)
    return gain @ np.asarray(psi, dtype=float) + offset


def pseudotrue_jacobian(pair: ModelPair) -> np.ndarray:
    """Jacobian ``d theta_0 / d psi``; constant because the map is affine."""
    gain, _ = pseudotrue_affine(pair)
    return gain


@dataclass(frozen=True, eq=False)
class BfimDecomposition:
    """Bayesian Fisher information split into data and prior contributions."""

    data_term: np.ndarray
    prior_term: np.ndarray

    @cached_property
    def total(self) -> np.ndarray:
        return symmetrize(self.data_term + self.prior_term)


def bfim(pair: ModelPair) -> BfimDecomposition:
    """Bayesian Fisher information of the true model.

    ``data_term = N H*^T Sigma*^-1 H*`` and ``prior_term`` is the true prior
    precision; the information the bound inverts is their sum.
    """
    h_true = pair.true_lik.observation_matrix
    data_term = pair.n_samples * symmetrize(
        h_true.T @ pair.true_lik.noise_solve(h_true))
    return BfimDecomposition(data_term=data_term,
                             prior_term=pair.true_prior.precision)


def bcrb(pair: ModelPair) -> np.ndarray:
    """Matched-model Bayesian Cramer-Rao bound, the inverse information."""
    info = bfim(pair).total
    factor = spd_factor(info, "Bayesian information")
    bound = symmetrize(spd_solve(factor, np.eye(info.shape[0])))
    check_psd(bound, "bcrb")
    return bound


def mbcrb(pair: ModelPair) -> np.ndarray:
    """Misspecified Bayesian Cramer-Rao bound ``A J^-1 A^T``.

    Lower-bounds the covariance of any estimator of the pseudotrue parameter
    around the pseudotrue map, with ``A`` the pseudotrue Jacobian and ``J``
    the true-model Bayesian information.
    """
    jac = pseudotrue_jacobian(pair)
    info = bfim(pair).total
    factor = spd_factor(info, "Bayesian information")
    bound = symmetrize(jac @ spd_solve(factor, jac.T))
    check_psd(bound, "mbcrb")
    return bound


def bias_vector(pair: ModelPair, psi: np.ndarray) -> np.ndarray:
    """Pseudotrue-vs-true offset ``theta_0(psi) - psi``.

    Defined only when the assumed parameter has the same dimension as the
    true one, so the difference is meaningful.
    """
    psi = np.asarray(psi, dtype=float)
    if pair.n_theta != pair.n_psi:
        raise ValueError(
            f"bias is undefined for n_theta={pair.n_theta} != n_psi={pair.n_psi}")
    return pseudotrue(pair, psi) - psi


def _bias_second_moment(pair: ModelPair) -> np.ndarray:
    """E over the true prior of ``(theta_0(psi) - psi)(theta_0(psi) - psi)^T``.

    With ``r(psi) = (A - I) psi + offset`` the moment splits into the
    propagated prior covariance plus the outer product of the mean bias.
    """
    if pair.n_theta != pair.n_psi:
        raise ValueError(
            f"bias is undefined for n_theta={pair.n_theta} != n_psi={pair.n_psi}")
    gain, offset = pseudotrue_affine(pair)
    shift = gain - np.eye(pair.n_psi)
    mean_bias = shift @ pair.true_prior.mean + offset
    moment = (shift @ pair.true_prior.covariance @ shift.T
              + np.outer(mean_bias, mean_bias))
    return symmetrize(moment)


def biased_bound(pair: ModelPair) -> np.ndarray:
    """Bound on the error about the true parameter: MBCRB plus bias moment.

    Adds ``E{(theta_0(psi) - psi)(theta_0(psi) - psi)^T}`` to the MBCRB so
    the result tracks the mean squared error of a misspecified estimator
    measured against psi itself rather than against the pseudotrue point.
    """
    bound = symmetrize(mbcrb(pair) + _bias_second_moment(pair))
    check_psd(bound, "biased_bound")
    return bound


def map_error_covariance(pair: ModelPair) -> np.ndarray:
    """Exact covariance of the MAP estimate around the pseudotrue parameter.

    The assumed-model MAP estimator is affine in the data, so conditionally
    on psi its error ``theta_hat - theta_0(psi)`` is zero-mean Gaussian with
    covariance ``C (N H^T S^-1 Sigma* S^-1 H) C^T`` where C is the inverse
    MAP curvature. The expression has no psi dependence, so it is also the
    unconditional covariance.
    """
    curvature = spd_factor(_assumed_information(pair), "assumed-model information")
    h = pair.assumed_lik.observation_matrix
    solved = pair.assumed_lik.noise_solve(h)
    inner = pair.n_samples * symmetrize(
        solved.T @ pair.true_lik.noise_covariance @ solved)
    half = spd_solve(curvature, inner)
    cov = symmetrize(spd_solve(curvature, half.T))
    check_psd(cov, "map_error_covariance")
    return cov


@dataclass(frozen=True, eq=False)
class BoundReport:
    """All closed-form quantities for one model pair at one sample count."""

    n_samples: int
    pseudotrue_gain: np.ndarray
    pseudotrue_offset: np.ndarray
    bcrb: np.ndarray
    mbcrb: np.ndarray
    biased_bound: np.ndarray | None
    map_error_covariance: np.ndarray

    @property
    def trace_bcrb(self) -> float:
        return float(np.trace(self.bcrb))

    @property
    def trace_mbcrb(self) -> float:
        return float(np.trace(self.mbcrb))

    @property
    def trace_biased_bound(self) -> float | None:
        if self.biased_bound is None:
            return None
        return float(np.trace(self.biased_bound))

    @property
    def rmse_floor_pseudotrue(self) -> float:
        """Root of the MBCRB trace: the RMSE floor about the pseudotrue point."""
        return float(np.sqrt(self.trace_mbcrb))

    @property
    def rmse_floor_true(self) -> float | None:
        """Root of the biased-bound trace: the RMSE floor about psi."""
        if self.biased_bound is None:
            return None
        return float(np.sqrt(self.trace_biased_bound))


def bound_report(pair: ModelPair) -> BoundReport:
    """Evaluate every bound for the pair; bias terms only when shapes allow."""
    gain, offset = pseudotrue_affine(pair)
    biased = biased_bound(pair) if pair.n_theta == pair.n_psi else None
    return BoundReport(
        n_samples=pair.n_samples,
        pseudotrue_gain=gain,
        pseudotrue_offset=offset,
        bcrb=bcrb(pair),
        mbcrb=mbcrb(pair),
        biased_bound=biased,
        map_error_covariance=map_error_covariance(pair),
    )
