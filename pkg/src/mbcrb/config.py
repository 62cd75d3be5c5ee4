"""JSON experiment configuration: parsing, validation, serialization.

A config document has three sections. ``true_model`` and ``assumed_model``
each give a prior (mean plus covariance, or the literal ``"flat"`` for the
assumed prior), an observation matrix (full ``H`` or scalar ``h_scalar``
meaning ``h * I``), and a noise covariance (full ``matrix`` or
``ar1: {rho, sigma_sq}``). ``experiment`` gives trials, master_seed,
error_reference, the fixed ``n_samples`` for non-N sweeps, and the sweep
axis with an explicit ``grid`` or an inclusive ``range``.

Every validation failure raises :class:`ConfigError` whose message starts
with the dotted path of the offending field, e.g.
``true_model.noise.ar1.rho: out of range``.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .estimators import EstimatorSpec
from .experiment import AXIS_N, ExperimentConfig, SweepSpec
from .linalg import NumericalError, SYMMETRY_RTOL, cholesky_lower, symmetry_defect
from .models import (
    FlatPrior,
    GaussianDensity,
    LinearGaussianLikelihood,
    ModelPair,
    build_ar1_covariance,
    validate_model_pair,
)

__all__ = ["ConfigError", "load_config", "parse_config",
           "document_from_config", "config_hash"]

DEFAULT_TRIALS = 10_000
DEFAULT_MASTER_SEED = 0
DEFAULT_ERROR_REFERENCE = "pseudotrue"


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending field path."""


def _require_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
    return value


def _check_keys(mapping: dict, allowed: set[str], path: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}: unknown field")


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if not np.isfinite(value):
        raise ConfigError(f"{path}: must be finite, got {value!r}")
    return float(value)


def _integer(value, path: str) -> int:
    num = _number(value, path)
    if num != int(num):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return int(num)


def _vector(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty list of numbers")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _matrix(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty list of rows")
    rows = []
    width = None
    for i, row in enumerate(value):
        if not isinstance(row, list) or not row:
            raise ConfigError(f"{path}[{i}]: expected a non-empty list of numbers")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ConfigError(f"{path}[{i}]: ragged row, expected length {width}")
        rows.append([_number(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    return np.array(rows)


def _check_spd(mat: np.ndarray, path: str) -> None:
    if mat.shape[0] != mat.shape[1]:
        raise ConfigError(f"{path}: must be square, got shape {mat.shape}")
    if symmetry_defect(mat) > SYMMETRY_RTOL:
        raise ConfigError(f"{path}: not symmetric")
    try:
        cholesky_lower(mat, path)
    except NumericalError:
        raise ConfigError(f"{path}: not positive definite") from None


def _parse_noise(section: dict, path: str, n_obs: int | None) -> np.ndarray:
    noise = _require_mapping(section.get("noise"), path)
    _check_keys(noise, {"ar1", "matrix"}, path)
    has_ar1 = "ar1" in noise
    has_matrix = "matrix" in noise
    if has_ar1 == has_matrix:
        raise ConfigError(f"{path}: give exactly one of 'ar1' or 'matrix'")
    if has_matrix:
        mat = _matrix(noise["matrix"], f"{path}.matrix")
        _check_spd(mat, f"{path}.matrix")
        if n_obs is not None and mat.shape[0] != n_obs:
            raise ConfigError(
                f"{path}.matrix: dimension {mat.shape[0]} does not match the "
                f"observation dimension {n_obs}")
        return mat
    ar1 = _require_mapping(noise["ar1"], f"{path}.ar1")
    _check_keys(ar1, {"rho", "sigma_sq"}, f"{path}.ar1")
    rho = _number(ar1.get("rho"), f"{path}.ar1.rho")
    sigma_sq = _number(ar1.get("sigma_sq"), f"{path}.ar1.sigma_sq")
    if not abs(rho) < 1:
        raise ConfigError(f"{path}.ar1.rho: out of range, need |rho| < 1")
    if sigma_sq <= 0:
        raise ConfigError(f"{path}.ar1.sigma_sq: must be positive")
    if n_obs is None:
        raise ConfigError(
            f"{path}.ar1: observation dimension unknown; give 'H' as a full "
            f"matrix, a vector prior_mean, or the noise as a full matrix")
    return build_ar1_covariance(rho, n_obs, sigma_sq)


def _parse_side(section_doc, path: str, allow_flat: bool,
                n_obs_hint: int | None):
    """Parse one model side into (prior, likelihood)."""
    section = _require_mapping(section_doc, path)
    _check_keys(section, {"prior_mean", "prior_cov", "prior_var_scalar",
                          "H", "h_scalar", "noise"}, path)

    mean_field = section.get("prior_mean")
    flat = mean_field == "flat"
    if flat and not allow_flat:
        raise ConfigError(
            f"{path}.prior_mean: must be a vector; only the assumed prior "
            f"may be flat")
    if mean_field is None:
        raise ConfigError(f"{path}.prior_mean: missing")
    mean = None if flat else _vector(mean_field, f"{path}.prior_mean")
    n_param = None if flat else mean.shape[0]

    has_h = "H" in section
    has_h_scalar = "h_scalar" in section
    if has_h == has_h_scalar:
        raise ConfigError(f"{path}: give exactly one of 'H' or 'h_scalar'")
    n_obs = None
    h_matrix = None
    if has_h:
        h_matrix = _matrix(section["H"], f"{path}.H")
        n_obs = h_matrix.shape[0]
        if n_param is None:
            n_param = h_matrix.shape[1]
        elif h_matrix.shape[1] != n_param:
            raise ConfigError(
                f"{path}.H: has {h_matrix.shape[1]} columns but prior_mean "
                f"has length {n_param}")
    else:
        noise_doc = section.get("noise")
        if isinstance(noise_doc, dict) and isinstance(noise_doc.get("matrix"), list):
            n_obs = len(noise_doc["matrix"])
        elif n_param is not None:
            n_obs = n_param
        elif n_obs_hint is not None:
            n_obs = n_obs_hint
        if n_param is None:
            n_param = n_obs
        if n_param is None:
            raise ConfigError(
                f"{path}: cannot infer dimensions; give 'H' or a vector "
                f"prior_mean or a full noise matrix")

    noise = _parse_noise(section, f"{path}.noise", n_obs)
    if n_obs is None:
        n_obs = noise.shape[0]
    if h_matrix is None:
        h_value = _number(section["h_scalar"], f"{path}.h_scalar")
        h_matrix = h_value * np.eye(n_obs, n_param)

    if flat:
        if "prior_cov" in section or "prior_var_scalar" in section:
            raise ConfigError(
                f"{path}.prior_cov: not allowed with a flat prior")
        prior = FlatPrior(n_param)
    else:
        has_cov = "prior_cov" in section
        has_scalar = "prior_var_scalar" in section
        if has_cov == has_scalar:
            raise ConfigError(
                f"{path}: give exactly one of 'prior_cov' or 'prior_var_scalar'")
        if has_cov:
            cov = _matrix(section["prior_cov"], f"{path}.prior_cov")
            _check_spd(cov, f"{path}.prior_cov")
            if cov.shape[0] != n_param:
                raise ConfigError(
                    f"{path}.prior_cov: dimension {cov.shape[0]} does not "
                    f"match prior_mean length {n_param}")
        else:
            var = _number(section["prior_var_scalar"], f"{path}.prior_var_scalar")
            if var <= 0:
                raise ConfigError(f"{path}.prior_var_scalar: must be positive")
            cov = var * np.eye(n_param)
        prior = GaussianDensity(mean=mean, covariance=cov)

    return prior, LinearGaussianLikelihood(observation_matrix=h_matrix,
                                           noise_covariance=noise)


def _parse_sweep(section: dict, path: str) -> SweepSpec:
    sweep = _require_mapping(section.get("sweep"), path)
    _check_keys(sweep, {"axis", "grid", "range"}, path)
    axis = sweep.get("axis")
    if not isinstance(axis, str):
        raise ConfigError(f"{path}.axis: missing or not a string")
    has_grid = "grid" in sweep
    has_range = "range" in sweep
    if has_grid == has_range:
        raise ConfigError(f"{path}: give exactly one of 'grid' or 'range'")
    if has_grid:
        raw = sweep["grid"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"{path}.grid: expected a non-empty list of numbers")
        grid = [_number(v, f"{path}.grid[{i}]") for i, v in enumerate(raw)]
    else:
        rng = _require_mapping(sweep["range"], f"{path}.range")
        _check_keys(rng, {"start", "stop", "step"}, f"{path}.range")
        start = _number(rng.get("start"), f"{path}.range.start")
        stop = _number(rng.get("stop"), f"{path}.range.stop")
        step = _number(rng.get("step"), f"{path}.range.step")
        if step <= 0:
            raise ConfigError(f"{path}.range.step: must be positive")
        if stop < start:
            raise ConfigError(f"{path}.range.stop: must be >= start")
        # Inclusive of stop up to a small relative slack in the step count.
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        grid = [round(start + k * step, 12) for k in range(count)]
    try:
        return SweepSpec(axis=axis, grid=tuple(grid))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_config(doc) -> ExperimentConfig:
    """Build a validated :class:`ExperimentConfig` from a parsed JSON document."""
    top = _require_mapping(doc, "config")
    _check_keys(top, {"true_model", "assumed_model", "experiment"}, "config")
    for key in ("true_model", "assumed_model", "experiment"):
        if key not in top:
            raise ConfigError(f"{key}: missing section")

    true_prior, true_lik = _parse_side(top["true_model"], "true_model",
                                       allow_flat=False, n_obs_hint=None)
    assumed_prior, assumed_lik = _parse_side(top["assumed_model"],
                                             "assumed_model", allow_flat=True,
                                             n_obs_hint=true_lik.n_obs)
    if assumed_lik.n_obs != true_lik.n_obs:
        raise ConfigError(
            f"assumed_model: observation dimension {assumed_lik.n_obs} does "
            f"not match true_model observation dimension {true_lik.n_obs}")

    exp = _require_mapping(top["experiment"], "experiment")
    _check_keys(exp, {"trials", "master_seed", "error_reference", "n_samples",
                      "sweep"}, "experiment")
    sweep = _parse_sweep(exp, "experiment.sweep")

    trials = _integer(exp.get("trials", DEFAULT_TRIALS), "experiment.trials")
    master_seed = _integer(exp.get("master_seed", DEFAULT_MASTER_SEED),
                           "experiment.master_seed")
    if master_seed < 0:
        raise ConfigError("experiment.master_seed: must be non-negative")
    reference = exp.get("error_reference", DEFAULT_ERROR_REFERENCE)

    if "n_samples" in exp:
        n_samples = _integer(exp["n_samples"], "experiment.n_samples")
        if n_samples < 1:
            raise ConfigError("experiment.n_samples: must be >= 1")
    elif sweep.axis == AXIS_N:
        n_samples = int(sweep.grid[0])
    else:
        raise ConfigError(
            "experiment.n_samples: required when the sweep axis is not the "
            "sample count")

    pair = ModelPair(true_prior=true_prior, true_lik=true_lik,
                     assumed_prior=assumed_prior, assumed_lik=assumed_lik,
                     n_samples=n_samples)
    issues = validate_model_pair(pair)
    if issues:
        raise ConfigError(f"config: {'; '.join(issues)}")

    try:
        return ExperimentConfig(
            pair=pair,
            estimator=EstimatorSpec.from_pair(pair),
            trials=trials,
            master_seed=master_seed,
            error_reference=reference,
            sweep=sweep,
        )
    except ValueError as exc:
        raise ConfigError(f"experiment: {exc}") from None


def load_config(path) -> ExperimentConfig:
    """Read and parse a JSON config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path}: {exc}") from None
    return parse_config(doc)


def _side_document(prior, lik) -> dict:
    doc: dict = {}
    if getattr(prior, "is_flat", False):
        doc["prior_mean"] = "flat"
    else:
        doc["prior_mean"] = prior.mean.tolist()
        doc["prior_cov"] = prior.covariance.tolist()
    doc["H"] = lik.observation_matrix.tolist()
    doc["noise"] = {"matrix": lik.noise_covariance.tolist()}
    return doc


def document_from_config(config: ExperimentConfig) -> dict:
    """Serialize back to the JSON document form (scalars normalized to
    full matrices, ranges to explicit grids)."""
    return {
        "true_model": _side_document(config.pair.true_prior, config.pair.true_lik),
        "assumed_model": _side_document(config.pair.assumed_prior,
                                        config.pair.assumed_lik),
        "experiment": {
            "trials": config.trials,
            "master_seed": config.master_seed,
            "error_reference": config.error_reference,
            "n_samples": config.pair.n_samples,
            "sweep": {"axis": config.sweep.axis,
                      "grid": list(config.sweep.grid)},
        },
    }


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 of the canonical serialized document."""
    canonical = json.dumps(document_from_config(config), sort_keys=True,
                           separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
