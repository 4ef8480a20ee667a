"""
Tests for run-file loading and key normalization.
"""

import json

import pytest

from schemas import GapRunConfig, NoiseRunConfig, VqaaRunConfig
from utils.error_handler import ConfigError
from utils.validators import config_from_manifest, load_run_config, normalize_keys


def test_keys_are_matched_loosely():
    out = normalize_keys({"CHI-MAX": "32", "svd_cutoff": "1e-8", "backend": "none"}, NoiseRunConfig)
    assert out == {"chi_max": "32", "svd_cutoff": "1e-8"}


def test_unknown_key_names_itself():
    with pytest.raises(ConfigError) as info:
        normalize_keys({"bond_dim": "8"}, NoiseRunConfig)
    assert info.value.key == "bond_dim"


def test_overrides_win_over_the_file(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("N=6\nP=0.01\nTRAJECTORIES=20\n")
    config = load_run_config(str(path), {"trajectories": 5, "seed": None}, NoiseRunConfig)
    assert config.n == 6
    assert config.p == 0.01
    assert config.trajectories == 5


def test_invalid_value_is_reported_by_key(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("N=4\nJ=one,two\n")
    with pytest.raises(ConfigError) as info:
        load_run_config(str(path), {}, GapRunConfig)
    assert info.value.key == "J"


def test_missing_file_is_a_config_error():
    with pytest.raises(ConfigError):
        load_run_config("/nonexistent/run.env", {}, NoiseRunConfig)


def test_missing_required_key():
    with pytest.raises(ConfigError) as info:
        load_run_config(None, {}, VqaaRunConfig)
    assert info.value.key == "n"


def test_manifest_config_round_trip(tmp_path):
    config = VqaaRunConfig(n=4, algo="ratio", L=3, T=2.0)
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"config": config.model_dump(mode="json")}))
    assert config_from_manifest(str(path), VqaaRunConfig) == config
    with pytest.raises(ConfigError):
        config_from_manifest(str(tmp_path / "missing.json"), VqaaRunConfig)
