import dataclasses
import json

import numpy as np
import pytest

from gaitforge.config import (
    ConfigError,
    ESConfig,
    LEARNED_JOINT_NAMES,
    config_from_dict,
    config_to_dict,
    default_config,
    dump_config,
    load_config,
)


class TestDefaults:
    def test_default_config_valid(self):
        cfg = default_config()
        cfg.validate()
        bounds = cfg.action_bounds()
        assert bounds.lo.shape == (45,)

    def test_all_learned_joints_present(self):
        cfg = default_config()
        assert set(cfg.decoder.coefficient_bounds) == set(LEARNED_JOINT_NAMES)

    def test_gain_bounds_nonnegative(self):
        cfg = default_config()
        for b in (*cfg.decoder.kfp_bounds, *cfg.decoder.kt_bounds):
            assert b[0] >= 0.0


class TestRoundTrip:
    def test_dump_load_identical(self, tmp_path):
        cfg = default_config()
        path = tmp_path / "cfg.json"
        path.write_text(dump_config(cfg))
        loaded = load_config(path)
        assert config_to_dict(loaded) == config_to_dict(cfg)

    def test_double_round_trip_stable(self, tmp_path):
        cfg = default_config()
        p1 = tmp_path / "a.json"
        p1.write_text(dump_config(cfg))
        c1 = load_config(p1)
        p2 = tmp_path / "b.json"
        p2.write_text(dump_config(c1))
        assert p1.read_text() == p2.read_text()

    def test_partial_override(self):
        doc = {"es": {"pairs": 7}, "env": {"mass": 25.0}}
        cfg = config_from_dict(doc)
        assert cfg.es.pairs == 7
        assert cfg.env.mass == 25.0
        # untouched fields keep defaults
        assert cfg.es.sigma == default_config().es.sigma


class TestValidation:
    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError):
            config_from_dict({"unknown_section": {}})

    def test_unknown_env_key(self):
        with pytest.raises(ConfigError):
            config_from_dict({"env": {"not_a_field": 1}})

    def test_unknown_decoder_key(self):
        with pytest.raises(ConfigError):
            config_from_dict({"decoder": {"bogus": []}})

    def test_coefficient_bounds_must_cover_joints(self):
        with pytest.raises(ConfigError):
            config_from_dict({"decoder": {"coefficient_bounds": {"stance_knee": [-1, -0.2]}}})

    def test_bounds_exceeding_mechanical_range_rejected(self):
        doc = {"decoder": {"coefficient_bounds": {
            **{k: list(v) for k, v in default_config().decoder.coefficient_bounds.items()},
            "stance_hip_roll": [-2.0, 2.0],
        }}}
        with pytest.raises(ConfigError):
            config_from_dict(doc)

    def test_inverted_bounds_rejected(self):
        doc = {"decoder": {"coefficient_bounds": {
            **{k: list(v) for k, v in default_config().decoder.coefficient_bounds.items()},
            "stance_knee": [-0.1, -1.4],
        }}}
        with pytest.raises(ConfigError):
            config_from_dict(doc)

    def test_normalization_length_checked(self):
        with pytest.raises(ConfigError):
            config_from_dict({"normalization": {"center": [0.0] * 11}})

    def test_bad_es_values(self):
        with pytest.raises(ConfigError):
            config_from_dict({"es": {"sigma": 0.0}})
        with pytest.raises(ConfigError):
            config_from_dict({"es": {"pairs": 0}})
        with pytest.raises(ConfigError):
            config_from_dict({"es": {"seed": -1}})
        with pytest.raises(ConfigError):
            config_from_dict({"es": {"iterations": 0}})

    def test_symmetry_table_configurable(self):
        cfg = config_from_dict({"decoder": {"symmetry": {
            "permutation": [5, 6, 7, 8, 9, 0, 1, 2, 3, 4],
            "signs": [-1, -1, 1, 1, 1, -1, -1, 1, 1, 1],
        }}})
        T = cfg.make_decoder().T
        assert np.array_equal(T @ T, np.eye(10))

    def test_symmetry_table_validated(self):
        # not an involution
        with pytest.raises(ConfigError):
            config_from_dict({"decoder": {"symmetry": {
                "permutation": [1, 2, 3, 4, 5, 6, 7, 8, 9, 0],
                "signs": [1] * 10,
            }}})
        # mismatched pair signs break T @ T = I
        with pytest.raises(ConfigError):
            config_from_dict({"decoder": {"symmetry": {
                "permutation": [5, 6, 7, 8, 9, 0, 1, 2, 3, 4],
                "signs": [-1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
            }}})
        # ankles must pair with ankles
        with pytest.raises(ConfigError):
            config_from_dict({"decoder": {"symmetry": {
                "permutation": [4, 6, 7, 8, 9, 5, 1, 2, 3, 0],
                "signs": [1] * 10,
            }}})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.json")

    def test_malformed_json_has_line_info(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\n  broken\n}")
        with pytest.raises(ConfigError, match=r":2:"):
            load_config(path)


class TestEnvBuilder:
    def test_make_env_uses_config(self):
        cfg = default_config()
        cfg = dataclasses.replace(cfg, env=dataclasses.replace(cfg.env, mass=20.0))
        env = cfg.make_env()
        assert env.params.mass == 20.0

    def test_es_config_defaults(self):
        es = ESConfig()
        assert es.pairs == 32
        assert es.sigma == 0.05
        assert es.learning_rate == 0.02
        assert es.episodes_per_candidate == 4
