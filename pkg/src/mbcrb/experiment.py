"""Monte Carlo sweeps validating the closed-form bounds.

A sweep varies one axis (sample count N, assumed gain h with ``H = h I``, or
assumed noise variance with ``Sigma = sigma_sq I``), and at each grid point
runs independent trials: draw psi from the true prior, draw N observations,
run the estimator, and square the error against either the pseudotrue point
``theta_0(psi)`` or psi itself. Results carry delta-method standard errors
and the matching closed-form bound floors.

Every trial's random stream is derived from ``(master_seed, axis key,
trial_index)``, so results are independent of execution order and worker
count; aggregation uses numpy's pairwise summation over a preallocated
array, which keeps the output bit-identical as well.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .bounds import bound_report, pseudotrue_affine
from .estimators import EstimatorSpec, MapSolver
from .linalg import NumericalError
from .models import (
    LinearGaussianLikelihood,
    ModelPair,
    derive_seeds,
    float_key,
    sample_observations,
    sample_parameter,
    with_n_samples,
)

__all__ = [
    "AXIS_N",
    "AXIS_H",
    "AXIS_SIGMA_SQ",
    "REFERENCE_PSEUDOTRUE",
    "REFERENCE_TRUE",
    "SweepError",
    "SweepSpec",
    "ExperimentConfig",
    "SweepResult",
    "run_trial",
    "run_sweep",
]

AXIS_N = "sample-count-N"
AXIS_H = "assumed-gain-h"
AXIS_SIGMA_SQ = "assumed-noise-variance-sigma-sq"
_AXES = (AXIS_N, AXIS_H, AXIS_SIGMA_SQ)

REFERENCE_PSEUDOTRUE = "pseudotrue"
REFERENCE_TRUE = "true-parameter"


class SweepError(NumericalError):
    """A sweep grid point failed; the message names the axis value."""


@dataclass(frozen=True, eq=False)
class SweepSpec:
    """One sweep axis and its strictly increasing grid."""

    axis: str
    grid: tuple

    def __post_init__(self):
        if self.axis not in _AXES:
            raise ValueError(f"axis must be one of {_AXES}, got {self.axis!r}")
        grid = tuple(self.grid)
        if not grid:
            raise ValueError("sweep grid must be non-empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        if self.axis == AXIS_N:
            if any(float(v) != int(v) or int(v) < 1 for v in grid):
                raise ValueError("sample-count grid entries must be integers >= 1")
            grid = tuple(int(v) for v in grid)
        else:
            if any(float(v) <= 0 for v in grid):
                raise ValueError("sweep grid entries must be positive")
            grid = tuple(float(v) for v in grid)
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Everything one sweep needs: the model pair template, estimator,
    trial budget, seed, error reference, and the sweep axis."""

    pair: ModelPair
    estimator: EstimatorSpec
    trials: int
    master_seed: int
    error_reference: str
    sweep: SweepSpec

    def __post_init__(self):
        if self.trials < 100:
            raise ValueError(f"trials must be >= 100, got {self.trials}")
        if self.error_reference not in (REFERENCE_PSEUDOTRUE, REFERENCE_TRUE):
            raise ValueError(
                f"error_reference must be {REFERENCE_PSEUDOTRUE!r} or "
                f"{REFERENCE_TRUE!r}, got {self.error_reference!r}")
        if (self.error_reference == REFERENCE_TRUE
                and self.pair.n_theta != self.pair.n_psi):
            raise ValueError(
                "true-parameter reference requires n_theta == n_psi, got "
                f"{self.pair.n_theta} != {self.pair.n_psi}")


def materialize_pair(config: ExperimentConfig, axis_value) -> ModelPair:
    """The model pair with the sweep axis applied at one grid value."""
    pair = config.pair
    axis = config.sweep.axis
    if axis == AXIS_N:
        return with_n_samples(pair, int(axis_value))
    if axis == AXIS_H:
        lik = LinearGaussianLikelihood(
            observation_matrix=float(axis_value) * np.eye(pair.n_obs, pair.n_theta),
            noise_covariance=pair.assumed_lik.noise_covariance)
    else:
        lik = LinearGaussianLikelihood(
            observation_matrix=pair.assumed_lik.observation_matrix,
            noise_covariance=float(axis_value) * np.eye(pair.n_obs))
    return replace(pair, assumed_lik=lik)


def _axis_key(axis: str, axis_value) -> int:
    """Seed-stream key for a grid value: N directly, floats by bit pattern."""
    if axis == AXIS_N:
        return int(axis_value)
    return float_key(float(axis_value))


@dataclass(frozen=True, eq=False)
class _GridPoint:
    """Per-grid-point context reused across trials."""

    config: ExperimentConfig
    axis_value: float

    @cached_property
    def pair(self) -> ModelPair:
        return materialize_pair(self.config, self.axis_value)

    @cached_property
    def solver(self) -> MapSolver:
        spec = EstimatorSpec(kind=self.config.estimator.kind,
                             assumed_prior=self.pair.assumed_prior,
                             assumed_lik=self.pair.assumed_lik)
        return MapSolver(spec, self.pair.n_samples)

    @cached_property
    def reference_map(self) -> tuple[np.ndarray, np.ndarray] | None:
        """Affine psi -> reference; None means the reference is psi itself."""
        if self.config.error_reference == REFERENCE_TRUE:
            return None
        return pseudotrue_affine(self.pair)

    @cached_property
    def seed_key(self) -> int:
        return _axis_key(self.config.sweep.axis, self.axis_value)

    def warm(self) -> None:
        """Populate every cached attribute before sharing across threads."""
        self.solver._factor
        self.solver._prior_pull
        self.reference_map
        self.seed_key


def run_trial(config: ExperimentConfig, axis_value, trial_index: int,
              context: _GridPoint | None = None) -> np.ndarray:
    """Squared error vector of one independent realization.

    Deterministic in ``(config.master_seed, axis_value, trial_index)``: the
    trial derives its own psi and observation streams from that triple, so
    any subset of trials can be recomputed in any order.
    """
    point = context if context is not None else _GridPoint(config, axis_value)
    psi_seed, obs_seed = derive_seeds(config.master_seed, point.seed_key,
                                      trial_index)
    psi = sample_parameter(config.pair.true_prior, psi_seed)
    batch = sample_observations(point.pair, psi, obs_seed)
    theta_hat = point.solver.estimate(batch)
    if point.reference_map is None:
        reference = psi
    else:
        gain, offset = point.reference_map
        reference = gain @ psi + offset
    error = theta_hat - reference
    return error * error


def _floors(point: _GridPoint) -> tuple[np.ndarray, np.ndarray]:
    """Per-component RMSE floor for the configured reference, and BCRB floor."""
    report = bound_report(point.pair)
    if point.config.error_reference == REFERENCE_PSEUDOTRUE:
        bound = report.mbcrb
    else:
        bound = report.biased_bound
    return np.sqrt(np.diag(bound)), np.sqrt(np.diag(report.bcrb))


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Monte Carlo RMSE and bound floors at one grid value.

    ``rmse`` and its standard error are per component; ``bound_rmse_floor``
    is the square root of the diagonal of the bound matching the error
    reference (MBCRB for pseudotrue, biased bound for true-parameter), and
    ``bcrb_floor`` the matched-model bound's, attached for comparison.
    ``trace_rmse`` aggregates all components (root of the summed mean
    squared errors).
    """

    axis_value: float
    rmse: np.ndarray
    rmse_standard_error: np.ndarray
    bound_rmse_floor: np.ndarray
    bcrb_floor: np.ndarray
    trace_rmse: float
    trace_rmse_standard_error: float


def _delta_method_se(mean_sq: np.ndarray, var_sq: np.ndarray,
                     trials: int) -> np.ndarray:
    """Standard error of sqrt(mean of squared errors).

    First-order propagation: se(sqrt(m)) = se(m) / (2 sqrt(m)); zero when
    the mean square itself is zero (degenerate noiseless runs).
    """
    se_mean = np.sqrt(var_sq / trials)
    rmse = np.sqrt(mean_sq)
    return np.divide(se_mean, 2.0 * rmse, out=np.zeros_like(se_mean),
                     where=rmse > 0)


def _point_result(config: ExperimentConfig, axis_value,
                  workers: int) -> SweepResult:
    point = _GridPoint(config, axis_value)
    floor, bcrb_floor = _floors(point)
    point.warm()

    trials = config.trials
    squared = np.empty((trials, config.pair.n_theta))

    def fill(lo: int, hi: int) -> None:
        for t in range(lo, hi):
            squared[t] = run_trial(config, axis_value, t, context=point)

    if workers <= 1:
        fill(0, trials)
    else:
        edges = np.linspace(0, trials, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(fill, lo, hi)
                       for lo, hi in zip(edges[:-1], edges[1:])]
            for future in futures:
                future.result()

    mean_sq = squared.mean(axis=0)
    var_sq = squared.var(axis=0, ddof=1)
    total_sq = squared.sum(axis=1)
    trace_mean = float(total_sq.mean())
    trace_var = float(total_sq.var(ddof=1))
    return SweepResult(
        axis_value=float(axis_value),
        rmse=np.sqrt(mean_sq),
        rmse_standard_error=_delta_method_se(mean_sq, var_sq, trials),
        bound_rmse_floor=floor,
        bcrb_floor=bcrb_floor,
        trace_rmse=float(np.sqrt(trace_mean)),
        trace_rmse_standard_error=float(
            _delta_method_se(np.array(trace_mean), np.array(trace_var), trials)),
    )


def _check_finite(result: SweepResult, axis: str) -> None:
    fields = {
        "rmse": result.rmse,
        "rmse_standard_error": result.rmse_standard_error,
        "bound_rmse_floor": result.bound_rmse_floor,
        "bcrb_floor": result.bcrb_floor,
        "trace_rmse": result.trace_rmse,
        "trace_rmse_standard_error": result.trace_rmse_standard_error,
    }
    for name, value in fields.items():
        arr = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise SweepError(
                f"sweep aborted at {axis}={result.axis_value}: "
                f"{name} not finite and non-negative")


def run_sweep(config: ExperimentConfig, workers: int = 1) -> list[SweepResult]:
    """Run every grid point and return one :class:`SweepResult` per value.

    ``workers`` threads split the trial range; results are bit-identical
    for any worker count. A failure at any grid point aborts the sweep with
    the axis value named in the raised :class:`SweepError`.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    results = []
    for value in config.sweep.grid:
        try:
            result = _point_result(config, value, workers)
        except SweepError:
            raise
        except (NumericalError, ValueError) as exc:
            raise SweepError(
                f"sweep aborted at {config.sweep.axis}={value}: {exc}") from exc
        _check_finite(result, config.sweep.axis)
        results.append(result)
    return results
