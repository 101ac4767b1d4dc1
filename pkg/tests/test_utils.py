"""
Tests for settings accessors and CLI helpers (curvecast.utils).
"""

import pytest

from django.core.management.base import CommandError

from curvecast.exceptions import ContractError
from curvecast.utils import (
    check_readable,
    check_writable,
    get_bootstrap_workers,
    get_fit_options,
    get_variance_floor,
    is_color_disabled,
    logging_config,
    parse_number_list,
)
from curvecast.weights.inverse_variance import DEFAULT_VARIANCE_FLOOR


class TestSettings:
    """Tests for the CURVECAST_* settings accessors."""

    def test_fit_options_defaults(self):
        """Without CURVECAST_FIT_OPTIONS the solver defaults apply."""
        options = get_fit_options()
        assert options.max_iterations > 1
        assert options.relative_sse_tolerance > 0

    def test_fit_options_override(self, settings):
        """Keys in CURVECAST_FIT_OPTIONS replace the defaults."""
        settings.CURVECAST_FIT_OPTIONS = {"max_iterations": 7}
        assert get_fit_options().max_iterations == 7

    def test_fit_options_unknown_key(self, settings):
        """Unknown option names are rejected."""
        settings.CURVECAST_FIT_OPTIONS = {"max_iters": 7}
        with pytest.raises(ContractError):
            get_fit_options()

    def test_variance_floor(self, settings):
        """CURVECAST_VARIANCE_FLOOR falls back to the default floor."""
        assert get_variance_floor() == DEFAULT_VARIANCE_FLOOR
        settings.CURVECAST_VARIANCE_FLOOR = "0.5"
        assert get_variance_floor() == 0.5

    def test_bootstrap_workers_from_env(self, monkeypatch):
        """The environment is used when the setting is absent."""
        monkeypatch.setenv("CURVECAST_BOOTSTRAP_WORKERS", "3")
        assert get_bootstrap_workers() == 3

    def test_bootstrap_workers_setting_wins(self, settings, monkeypatch):
        """The Django setting takes precedence over the environment."""
        monkeypatch.setenv("CURVECAST_BOOTSTRAP_WORKERS", "3")
        settings.CURVECAST_BOOTSTRAP_WORKERS = 2
        assert get_bootstrap_workers() == 2

    @pytest.mark.parametrize("value", ["0", "-2", "many"])
    def test_bootstrap_workers_invalid(self, monkeypatch, value):
        """Non-positive or non-integer worker counts exit with code 2."""
        monkeypatch.setenv("CURVECAST_BOOTSTRAP_WORKERS", value)
        with pytest.raises(CommandError) as exc_info:
            get_bootstrap_workers()
        assert exc_info.value.returncode == 2

    @pytest.mark.parametrize(
        "value,expected",
        [("1", True), ("yes", True), ("", True), ("0", False), ("off", False)],
    )
    def test_no_color_env(self, monkeypatch, value, expected):
        """CURVECAST_NO_COLOR follows the usual truthy spellings."""
        monkeypatch.setenv("CURVECAST_NO_COLOR", value)
        assert is_color_disabled() is expected

    def test_no_color_unset(self, monkeypatch):
        """Colour stays on by default."""
        monkeypatch.delenv("CURVECAST_NO_COLOR", raising=False)
        assert is_color_disabled() is False


class TestPaths:
    """Tests for the path checks."""

    def test_readable(self, tmp_path):
        """Existing files pass, missing ones exit with code 2."""
        path = tmp_path / "data.csv"
        path.write_text("size,accuracy\n")
        assert check_readable(path) == path
        with pytest.raises(CommandError) as exc_info:
            check_readable(tmp_path / "missing.csv")
        assert exc_info.value.returncode == 2

    def test_writable(self, tmp_path):
        """New files in existing directories are writable."""
        assert check_writable(tmp_path / "out.svg") == tmp_path / "out.svg"

    def test_directory_is_not_writable(self, tmp_path):
        """A directory cannot be used as an output file."""
        with pytest.raises(CommandError, match="is a directory"):
            check_writable(tmp_path)


class TestParseNumberList:
    """Tests for parse_number_list()."""

    def test_floats(self):
        """Comma lists parse to floats, ignoring blanks."""
        assert parse_number_list("5, 10,,20", "--at") == [5.0, 10.0, 20.0]

    def test_ints(self):
        """cast=int parses integer lists."""
        assert parse_number_list("5,10", "--sizes", cast=int) == [5, 10]

    @pytest.mark.parametrize("value", ["", "a,b", "1,nan", "5.5"])
    def test_invalid(self, value):
        """Invalid lists exit with code 2 and name the option."""
        cast = int if value == "5.5" else float
        with pytest.raises(CommandError, match="--sizes") as exc_info:
            parse_number_list(value, "--sizes", cast=cast)
        assert exc_info.value.returncode == 2


def test_logging_config_level():
    """The standalone logging config targets the curvecast logger."""
    config = logging_config("DEBUG")
    assert config["loggers"]["curvecast"]["level"] == "DEBUG"
    assert config["loggers"]["curvecast"]["handlers"] == ["console"]
