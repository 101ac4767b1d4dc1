import math
import os
from pathlib import Path

from django.conf import settings
from django.core.management.base import CommandError

from curvecast.weights.inverse_variance import DEFAULT_VARIANCE_FLOOR

FIXTURES_DIR = Path(__file__).resolve().parent / "fixtures"

_TRUTHY = {"1", "true", "yes", "on"}


def get_fit_options():
    """Get the fit options from the Django settings merged over the defaults."""
    from curvecast.wnls_fit import FitOptions

    overrides = getattr(settings, "CURVECAST_FIT_OPTIONS", None) or {}
    return FitOptions.from_mapping(overrides)


def get_variance_floor():
    """Get the InverseVariance floor from the Django settings or use fallback."""
    floor = getattr(settings, "CURVECAST_VARIANCE_FLOOR", DEFAULT_VARIANCE_FLOOR)
    return float(floor)


def get_weight_scheme_setting():
    """Get the default weight scheme spec from the Django settings, if any."""
    return getattr(settings, "CURVECAST_WEIGHT_SCHEME", None)


def get_bootstrap_workers():
    """Get the bootstrap worker count from the Django settings or environment.

    Defaults to 1 (sequential). Results never depend on the worker count.
    """
    workers = getattr(settings, "CURVECAST_BOOTSTRAP_WORKERS", None)

    if workers is None:
        workers = os.getenv("CURVECAST_BOOTSTRAP_WORKERS", "1")

    try:
        workers = int(workers)
    except (TypeError, ValueError):
        raise CommandError(
            "CURVECAST_BOOTSTRAP_WORKERS must be a positive integer, "
            f"got {workers!r}.",
            returncode=2,
        ) from None
    if workers < 1:
        raise CommandError(
            "CURVECAST_BOOTSTRAP_WORKERS must be a positive integer, "
            f"got {workers}.",
            returncode=2,
        )
    return workers


def is_color_disabled():
    """Whether ANSI styling is disabled via settings or CURVECAST_NO_COLOR."""
    if getattr(settings, "CURVECAST_NO_COLOR", False):
        return True
    value = os.getenv("CURVECAST_NO_COLOR")
    return value is not None and (value == "" or value.strip().lower() in _TRUTHY)


def check_readable(path):
    """Raise CommandError (exit 2) unless *path* is a readable file."""
    path = Path(path)
    if not path.is_file() or not os.access(path, os.R_OK):
        raise CommandError(f"Input file is not readable: {path}", returncode=2)
    return path


def check_writable(path):
    """Raise CommandError (exit 2) unless *path* can be created or overwritten."""
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    if path.is_dir():
        raise CommandError(f"Output path is a directory: {path}", returncode=2)
    if path.exists() and not os.access(path, os.W_OK):
        raise CommandError(f"Output file is not writable: {path}", returncode=2)
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise CommandError(
            f"Output directory does not exist or is not writable: {parent}",
            returncode=2,
        )
    return path


def parse_number_list(value, option, cast=float):
    """Parse a comma-separated CLI value such as ``5,10,20``."""
    try:
        numbers = [cast(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise CommandError(
            f"{option} expects a comma-separated list of numbers, got '{value}'.",
            returncode=2,
        ) from None
    if not numbers or any(not math.isfinite(n) for n in numbers):
        raise CommandError(
            f"{option} expects a comma-separated list of numbers, got '{value}'.",
            returncode=2,
        )
    return numbers


def logging_config(level="WARNING"):
    """LOGGING dict for running curvecast outside a Django project."""
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "simple": {"format": "%(levelname)s %(name)s: %(message)s"},
        },
        "handlers": {
            "console": {"class": "logging.StreamHandler", "formatter": "simple"},
        },
        "loggers": {
            "curvecast": {"handlers": ["console"], "level": level},
        },
    }
