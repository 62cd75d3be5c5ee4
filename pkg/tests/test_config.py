import copy
import json

import numpy as np
import pytest

from mbcrb import bundled_config_path
from mbcrb.config import (
    ConfigError,
    config_hash,
    document_from_config,
    load_config,
    parse_config,
)
from mbcrb.experiment import AXIS_H, AXIS_N, AXIS_SIGMA_SQ
from mbcrb.models import build_ar1_covariance

BUNDLED = ["paper_fig1.json", "paper_fig2.json", "paper_fig3_top.json",
           "paper_fig3_bottom.json", "scalar_example.json"]


def base_document():
    return {
        "true_model": {
            "prior_mean": [10.0, 20.0, 5.0],
            "prior_var_scalar": 0.5,
            "h_scalar": 1.0,
            "noise": {"ar1": {"rho": 0.5, "sigma_sq": 0.04}},
        },
        "assumed_model": {
            "prior_mean": [8.0, 18.0, 6.0],
            "prior_var_scalar": 0.5,
            "h_scalar": 1.0,
            "noise": {"ar1": {"rho": 0.0, "sigma_sq": 0.1}},
        },
        "experiment": {
            "trials": 500,
            "master_seed": 7,
            "error_reference": "pseudotrue",
            "sweep": {"axis": AXIS_N, "grid": [1, 5, 10]},
        },
    }


class TestParsing:
    def test_base_document(self):
        config = parse_config(base_document())
        assert config.trials == 500
        assert config.master_seed == 7
        assert config.pair.n_samples == 1
        assert config.estimator.kind == "map"
        np.testing.assert_allclose(config.pair.true_prior.mean, [10, 20, 5])
        np.testing.assert_allclose(config.pair.true_prior.covariance,
                                   0.5 * np.eye(3))
        np.testing.assert_allclose(config.pair.true_lik.observation_matrix,
                                   np.eye(3))
        np.testing.assert_allclose(config.pair.true_lik.noise_covariance,
                                   build_ar1_covariance(0.5, 3, 0.04))
        np.testing.assert_allclose(config.pair.assumed_lik.noise_covariance,
                                   0.1 * np.eye(3))

    def test_scalar_fields_match_explicit_matrices(self):
        doc = base_document()
        explicit = copy.deepcopy(doc)
        explicit["true_model"].pop("prior_var_scalar")
        explicit["true_model"]["prior_cov"] = (0.5 * np.eye(3)).tolist()
        explicit["true_model"].pop("h_scalar")
        explicit["true_model"]["H"] = np.eye(3).tolist()
        explicit["true_model"]["noise"] = {
            "matrix": build_ar1_covariance(0.5, 3, 0.04).tolist()}
        a = parse_config(doc)
        b = parse_config(explicit)
        np.testing.assert_allclose(a.pair.true_prior.covariance,
                                   b.pair.true_prior.covariance)
        np.testing.assert_allclose(a.pair.true_lik.observation_matrix,
                                   b.pair.true_lik.observation_matrix)
        np.testing.assert_allclose(a.pair.true_lik.noise_covariance,
                                   b.pair.true_lik.noise_covariance)
        assert config_hash(a) == config_hash(b)

    def test_flat_assumed_prior(self):
        doc = base_document()
        doc["assumed_model"]["prior_mean"] = "flat"
        del doc["assumed_model"]["prior_var_scalar"]
        config = parse_config(doc)
        assert config.pair.assumed_prior.is_flat
        assert config.estimator.kind == "qmle"

    def test_defaults(self):
        doc = base_document()
        del doc["experiment"]["trials"]
        del doc["experiment"]["master_seed"]
        del doc["experiment"]["error_reference"]
        config = parse_config(doc)
        assert config.trials == 10_000
        assert config.master_seed == 0
        assert config.error_reference == "pseudotrue"

    def test_n_samples_defaults_to_first_grid_value(self):
        config = parse_config(base_document())
        assert config.pair.n_samples == 1

    def test_explicit_n_samples(self):
        doc = base_document()
        doc["experiment"]["n_samples"] = 25
        assert parse_config(doc).pair.n_samples == 25

    def test_rectangular_observation_matrix(self):
        doc = base_document()
        doc["true_model"] = {
            "prior_mean": [1.0, 2.0],
            "prior_var_scalar": 1.0,
            "H": [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            "noise": {"ar1": {"rho": 0.2, "sigma_sq": 1.0}},
        }
        doc["assumed_model"] = {
            "prior_mean": [0.0, 0.0],
            "prior_var_scalar": 1.0,
            "H": [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            "noise": {"matrix": np.eye(3).tolist()},
        }
        config = parse_config(doc)
        assert config.pair.n_obs == 3
        assert config.pair.n_theta == 2
        np.testing.assert_allclose(
            config.pair.true_lik.noise_covariance,
            build_ar1_covariance(0.2, 3, 1.0))


class TestRangeExpansion:
    def test_integer_range(self):
        doc = base_document()
        doc["experiment"]["sweep"] = {
            "axis": AXIS_N, "range": {"start": 1, "stop": 40, "step": 1}}
        config = parse_config(doc)
        assert config.sweep.grid == tuple(range(1, 41))

    def test_float_range_inclusive_stop(self):
        doc = base_document()
        doc["experiment"]["n_samples"] = 50
        doc["experiment"]["sweep"] = {
            "axis": AXIS_H, "range": {"start": 0.6, "stop": 1.4, "step": 0.1}}
        config = parse_config(doc)
        assert len(config.sweep.grid) == 9
        np.testing.assert_allclose(config.sweep.grid,
                                   [0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4])
        assert config.sweep.grid[-1] == 1.4

    def test_single_point_range(self):
        doc = base_document()
        doc["experiment"]["sweep"] = {
            "axis": AXIS_N, "range": {"start": 3, "stop": 3, "step": 1}}
        assert parse_config(doc).sweep.grid == (3,)


class TestErrors:
    def check(self, doc, fragment):
        with pytest.raises(ConfigError, match=fragment):
            parse_config(doc)

    def test_missing_section(self):
        doc = base_document()
        del doc["experiment"]
        self.check(doc, "experiment: missing section")

    def test_unknown_top_level_field(self):
        doc = base_document()
        doc["extra"] = {}
        self.check(doc, r"config\.extra: unknown field")

    def test_unknown_model_field(self):
        doc = base_document()
        doc["true_model"]["gain"] = 2.0
        self.check(doc, r"true_model\.gain: unknown field")

    def test_rho_out_of_range(self):
        doc = base_document()
        doc["true_model"]["noise"]["ar1"]["rho"] = 1.5
        self.check(doc, r"true_model\.noise\.ar1\.rho: out of range")

    def test_negative_noise_variance(self):
        doc = base_document()
        doc["assumed_model"]["noise"]["ar1"]["sigma_sq"] = -1.0
        self.check(doc, r"assumed_model\.noise\.ar1\.sigma_sq: must be positive")

    def test_flat_true_prior_rejected(self):
        doc = base_document()
        doc["true_model"]["prior_mean"] = "flat"
        del doc["true_model"]["prior_var_scalar"]
        self.check(doc, r"true_model\.prior_mean")

    def test_flat_prior_with_covariance_rejected(self):
        doc = base_document()
        doc["assumed_model"]["prior_mean"] = "flat"
        self.check(doc, r"assumed_model\.prior_cov: not allowed")

    def test_both_h_forms_rejected(self):
        doc = base_document()
        doc["true_model"]["H"] = np.eye(3).tolist()
        self.check(doc, "exactly one of 'H' or 'h_scalar'")

    def test_non_spd_prior_cov(self):
        doc = base_document()
        del doc["assumed_model"]["prior_var_scalar"]
        doc["assumed_model"]["prior_cov"] = [[1.0, 2.0, 0.0],
                                             [2.0, 1.0, 0.0],
                                             [0.0, 0.0, 1.0]]
        self.check(doc, r"assumed_model\.prior_cov: not positive definite")

    def test_asymmetric_noise_matrix(self):
        doc = base_document()
        doc["true_model"]["noise"] = {"matrix": [[1.0, 0.5, 0.0],
                                                 [0.0, 1.0, 0.0],
                                                 [0.0, 0.0, 1.0]]}
        self.check(doc, r"true_model\.noise\.matrix: not symmetric")

    def test_noise_dimension_mismatch(self):
        doc = base_document()
        del doc["true_model"]["h_scalar"]
        doc["true_model"]["H"] = np.eye(3).tolist()
        doc["true_model"]["noise"] = {"matrix": np.eye(2).tolist()}
        self.check(doc, r"true_model\.noise\.matrix: dimension 2")

    def test_observation_dimension_mismatch_across_sides(self):
        doc = base_document()
        doc["assumed_model"] = {
            "prior_mean": [0.0, 0.0],
            "prior_var_scalar": 1.0,
            "h_scalar": 1.0,
            "noise": {"matrix": np.eye(2).tolist()},
        }
        self.check(doc, "assumed_model: observation dimension 2")

    def test_bad_grid_entry(self):
        doc = base_document()
        doc["experiment"]["sweep"]["grid"] = [1, "two"]
        self.check(doc, r"experiment\.sweep\.grid\[1\]")

    def test_decreasing_grid(self):
        doc = base_document()
        doc["experiment"]["sweep"]["grid"] = [5, 1]
        self.check(doc, "strictly increasing")

    def test_grid_and_range_rejected(self):
        doc = base_document()
        doc["experiment"]["sweep"]["range"] = {"start": 1, "stop": 2, "step": 1}
        self.check(doc, "exactly one of 'grid' or 'range'")

    def test_bad_range_step(self):
        doc = base_document()
        doc["experiment"]["sweep"] = {
            "axis": AXIS_N, "range": {"start": 1, "stop": 5, "step": 0}}
        self.check(doc, r"experiment\.sweep\.range\.step: must be positive")

    def test_n_samples_required_for_gain_axis(self):
        doc = base_document()
        doc["experiment"]["sweep"] = {"axis": AXIS_H, "grid": [0.5, 1.0]}
        self.check(doc, r"experiment\.n_samples: required")

    def test_trials_too_small(self):
        doc = base_document()
        doc["experiment"]["trials"] = 10
        self.check(doc, "experiment: trials must be >= 100")

    def test_negative_master_seed(self):
        doc = base_document()
        doc["experiment"]["master_seed"] = -1
        self.check(doc, r"experiment\.master_seed")

    def test_non_numeric_value(self):
        doc = base_document()
        doc["true_model"]["prior_mean"] = [1.0, None, 3.0]
        self.check(doc, r"true_model\.prior_mean\[1\]")

    def test_boolean_rejected_as_number(self):
        doc = base_document()
        doc["experiment"]["trials"] = True
        self.check(doc, r"experiment\.trials")

    def test_true_reference_dimension_guard(self):
        doc = base_document()
        doc["assumed_model"] = {
            "prior_mean": [0.0, 0.0],
            "prior_var_scalar": 1.0,
            "H": [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]],
            "noise": {"matrix": np.eye(3).tolist()},
        }
        doc["true_model"] = {
            "prior_mean": [1.0, 2.0, 3.0],
            "prior_var_scalar": 1.0,
            "h_scalar": 1.0,
            "noise": {"matrix": np.eye(3).tolist()},
        }
        doc["experiment"]["error_reference"] = "true-parameter"
        self.check(doc, "experiment: true-parameter reference")

    def test_load_config_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.json")

    def test_load_config_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_config(path)


class TestRoundTrip:
    @pytest.mark.parametrize("name", BUNDLED)
    def test_bundled_configs_round_trip(self, name):
        config = load_config(bundled_config_path(name))
        again = parse_config(document_from_config(config))
        assert again.trials == config.trials
        assert again.master_seed == config.master_seed
        assert again.error_reference == config.error_reference
        assert again.sweep.axis == config.sweep.axis
        assert again.sweep.grid == config.sweep.grid
        assert again.pair.n_samples == config.pair.n_samples
        np.testing.assert_array_equal(again.pair.true_prior.mean,
                                      config.pair.true_prior.mean)
        np.testing.assert_array_equal(again.pair.true_prior.covariance,
                                      config.pair.true_prior.covariance)
        np.testing.assert_array_equal(again.pair.true_lik.observation_matrix,
                                      config.pair.true_lik.observation_matrix)
        np.testing.assert_array_equal(again.pair.true_lik.noise_covariance,
                                      config.pair.true_lik.noise_covariance)
        np.testing.assert_array_equal(again.pair.assumed_lik.noise_covariance,
                                      config.pair.assumed_lik.noise_covariance)
        assert (again.pair.assumed_prior.is_flat
                == config.pair.assumed_prior.is_flat)
        assert config_hash(again) == config_hash(config)

    def test_document_is_json_serializable(self):
        config = parse_config(base_document())
        text = json.dumps(document_from_config(config))
        assert "true_model" in text


class TestBundledConfigs:
    @pytest.mark.parametrize("name", BUNDLED)
    def test_parse_and_desk_scale_trials(self, name):
        config = load_config(bundled_config_path(name))
        assert 100 <= config.trials <= 10_000

    def test_fig1_shape(self):
        config = load_config(bundled_config_path("paper_fig1.json"))
        assert config.sweep.axis == AXIS_N
        assert config.sweep.grid == tuple(range(1, 41))
        assert config.error_reference == "pseudotrue"

    def test_fig2_shape(self):
        config = load_config(bundled_config_path("paper_fig2.json"))
        assert config.sweep.axis == AXIS_N
        assert config.error_reference == "true-parameter"

    def test_fig3_shapes(self):
        top = load_config(bundled_config_path("paper_fig3_top.json"))
        assert top.sweep.axis == AXIS_H
        np.testing.assert_allclose(
            top.sweep.grid, [0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4])
        bottom = load_config(bundled_config_path("paper_fig3_bottom.json"))
        assert bottom.sweep.axis == AXIS_SIGMA_SQ
        np.testing.assert_allclose(
            bottom.sweep.grid, [0.01, 0.02, 0.04, 0.08, 0.1, 0.2, 0.4])

    def test_unknown_bundled_name(self):
        with pytest.raises(FileNotFoundError):
            bundled_config_path("missing.json")


class TestConfigHash:
    def test_stable_across_calls(self):
        config = parse_config(base_document())
        assert config_hash(config) == config_hash(config)

    def test_sensitive_to_seed(self):
        a = parse_config(base_document())
        doc = base_document()
        doc["experiment"]["master_seed"] = 8
        b = parse_config(doc)
        assert config_hash(a) != config_hash(b)

    def test_sensitive_to_model(self):
        a = parse_config(base_document())
        doc = base_document()
        doc["assumed_model"]["noise"]["ar1"]["sigma_sq"] = 0.2
        b = parse_config(doc)
        assert config_hash(a) != config_hash(b)
