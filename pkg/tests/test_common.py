"""Tests for src/utils/common.py: parsing, validation and config loading."""
import json
import os
from fractions import Fraction
from unittest.mock import patch

import pytest

from src.utils.common import (
    ConfigValidationError,
    Settings,
    check_config_permissions,
    config_template,
    get_real_user_home,
    load_config,
    parse_rational,
    resolve_settings,
    validate_config,
    validate_config_strict,
    validate_field_degree,
    validate_params,
)


class TestParseRational:
    def test_integer_string(self):
        assert parse_rational("3") == 3

    def test_decimal(self):
        assert parse_rational("0.25") == Fraction(1, 4)

    def test_fraction_literal(self):
        assert parse_rational(" 3/4 ") == Fraction(3, 4)

    def test_passthrough(self):
        value = Fraction(2, 3)
        assert parse_rational(value) is value
        assert parse_rational(5) == 5

    @pytest.mark.parametrize("bad", ["", "abc", "1/0", None, 1.5, True])
    def test_rejected(self, bad):
        with pytest.raises(ValueError):
            parse_rational(bad)


class TestValidateParams:
    def test_valid(self):
        ok, err = validate_params(3, 3, "1", 2)
        assert ok
        assert err == ""

    def test_zero_users(self):
        ok, err = validate_params(0, 3, 1, 1)
        assert not ok
        assert "n" in err

    def test_non_integer(self):
        ok, err = validate_params(3, 3.0, 1, 1)
        assert not ok
        assert "integer" in err

    def test_bool_is_not_int(self):
        ok, _ = validate_params(True, 3, 1, 1)
        assert not ok

    def test_memory_range(self):
        assert not validate_params(3, 3, -1, 1)[0]
        assert not validate_params(3, 3, "7/2", 1)[0]
        assert validate_params(3, 3, 3, 1)[0]

    def test_memory_not_rational(self):
        ok, err = validate_params(3, 3, "x", 1)
        assert not ok
        assert err.startswith("M:")

    def test_requests_above_library(self):
        ok, err = validate_params(3, 3, 1, 4)
        assert not ok
        assert "L" in err


class TestValidateFieldDegree:
    def test_range(self):
        assert validate_field_degree(2)[0]
        assert validate_field_degree(16)[0]
        assert not validate_field_degree(1)[0]
        assert not validate_field_degree(17)[0]

    def test_type(self):
        ok, err = validate_field_degree("8")
        assert not ok
        assert "integer" in err


class TestConfigValidation:
    def test_template_is_valid(self):
        assert validate_config_strict(config_template()) == []

    def test_example_file_matches_template(self):
        root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
        with open(os.path.join(root, "config.json.example")) as f:
            assert json.load(f) == config_template()

    def test_not_a_dict(self):
        errors = validate_config_strict([1, 2])
        assert len(errors) == 1
        assert errors[0].field == "config"

    def test_bad_section(self):
        errors = validate_config_strict({"solver": 5})
        assert any(e.field == "solver" for e in errors)

    def test_bad_integer_setting(self):
        errors = validate_config_strict({"codec": {"verify_width": 0}})
        assert [e.field for e in errors] == ["codec.verify_width"]

    def test_bad_field_degree(self):
        errors = validate_config_strict({"codec": {"field_degree": 20}})
        assert errors[0].field == "codec.field_degree"

    def test_large_guard_is_warning(self):
        errors = validate_config_strict({"solver": {"max_exact_vertices": 60}})
        assert errors[0].severity == "warning"

    def test_bad_workers(self):
        errors = validate_config_strict({"sweep": {"workers": 0}})
        assert errors[0].field == "sweep.workers"
        assert validate_config_strict({"sweep": {"workers": None}}) == []

    def test_bad_logging(self):
        fields = {e.field for e in validate_config_strict(
            {"logging": {"level": "LOUD", "structured": "yes"}})}
        assert fields == {"logging.level", "logging.structured"}

    def test_error_str(self):
        e = ConfigValidationError("codec.q", "bad")
        assert str(e) == "[ERROR] codec.q: bad"

    def test_validate_config_strings(self):
        warnings = validate_config({"codec": {"random_trials": -1}})
        assert warnings[0].startswith("codec.random_trials:")


class TestLoadConfig:
    def test_loads_file(self, tmp_config):
        cfg = load_config(path=tmp_config)
        assert cfg["codec"]["verify_width"] == 4

    def test_missing_file_fallback(self, tmp_path):
        assert load_config(path=str(tmp_path / "nope.json")) == {}
        assert load_config(fallback=None, path=str(tmp_path / "nope.json")) is None

    def test_bad_json_fallback(self, bad_config):
        assert load_config(fallback={"x": 1}, path=bad_config) == {"x": 1}

    def test_invalid_values_logged(self, tmp_path, caplog):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"codec": {"field_degree": 1}}))
        load_config(path=str(path))
        assert "codec.field_degree" in caplog.text


class TestResolveSettings:
    def test_defaults(self):
        assert resolve_settings() == Settings()

    def test_config_values(self, tmp_config):
        settings = resolve_settings(load_config(path=tmp_config))
        assert settings.max_exact_vertices == 30
        assert settings.max_lp_vertices == 12
        assert settings.field_degree == 9
        assert settings.workers == 2
        assert settings.log_level == "WARNING"

    def test_overrides_win(self, tmp_config):
        settings = resolve_settings(load_config(path=tmp_config), field_degree=10, workers=None)
        assert settings.field_degree == 10
        assert settings.workers == 2

    def test_invalid_entries_ignored(self, caplog):
        settings = resolve_settings({"codec": {"verify_width": -3, "random_trials": 5}})
        assert settings.verify_width == Settings().verify_width
        assert settings.random_trials == 5
        assert "Ignoring invalid config value" in caplog.text

    def test_level_uppercased(self):
        assert resolve_settings({"logging": {"level": "debug"}}).log_level == "DEBUG"


class TestPermissions:
    @pytest.mark.skipif(os.name != "posix", reason="POSIX permissions")
    def test_world_writable(self, tmp_config):
        os.chmod(tmp_config, 0o666)
        warnings = check_config_permissions(tmp_config)
        assert len(warnings) == 1
        assert "world-writable" in warnings[0]

    @pytest.mark.skipif(os.name != "posix", reason="POSIX permissions")
    def test_private(self, tmp_config):
        os.chmod(tmp_config, 0o600)
        assert check_config_permissions(tmp_config) == []

    def test_missing_file(self, tmp_path):
        assert check_config_permissions(str(tmp_path / "gone.json")) == []


class TestGetRealUserHome:
    def test_without_sudo(self):
        with patch.dict(os.environ, {}, clear=False):
            os.environ.pop("SUDO_USER", None)
            assert get_real_user_home() == os.path.expanduser("~")

    def test_unknown_sudo_user_falls_back(self):
        with patch.dict(os.environ, {"SUDO_USER": "no-such-user-xyz"}):
            assert get_real_user_home() == os.path.expanduser("~")
