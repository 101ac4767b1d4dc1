"""
Pytest fixtures for curvecast tests.
"""

from io import StringIO

import numpy as np
import pytest

from django.core.management import call_command

from curvecast.curve_model import CurveParams, evaluate
from curvecast.utils import FIXTURES_DIR
from curvecast.wnls_fit import fit

BODY_PART_SIZES = [5, 10, 20, 50, 100, 200]
BODY_PART_AVERAGE = [8.01, 17.37, 51.54, 77.15, 89.68, 95.67]
PUBLISHED_WEIGHTS = [1, 1, 1, 1, 100, 150]


@pytest.fixture
def body_part_average_csv():
    """Path of the body-part average fixture (one mean per size)."""
    return FIXTURES_DIR / "table1_average.csv"


@pytest.fixture
def body_part_means_csv():
    """Path of the body-part per-class means fixture (six body parts)."""
    return FIXTURES_DIR / "table1_means.csv"


@pytest.fixture
def body_part_pairs():
    """Body-part average as (x, t, w) arrays with the published weights."""
    return (
        np.array(BODY_PART_SIZES, dtype=float),
        np.array(BODY_PART_AVERAGE),
        np.array(PUBLISHED_WEIGHTS, dtype=float),
    )


@pytest.fixture
def body_part_fit(body_part_pairs):
    """Weighted fit of the body-part average row."""
    return fit(*body_part_pairs)


@pytest.fixture
def exact_csv(tmp_path):
    """Write noise-free observations of a known curve and return the path."""

    def _write(
        b1=-200.0, b2=-1.0, sizes=(5, 10, 20, 50, 100, 200), reps=1, name="exact.csv"
    ):
        params = CurveParams(b1, b2)
        lines = ["size,accuracy,repetition"]
        for size in sizes:
            for rep in range(1, reps + 1):
                lines.append(f"{size},{evaluate(params, size)!r},{rep}")
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write


@pytest.fixture
def run_curvecast():
    """Run the curvecast command and return its (stdout, stderr) text."""

    def _run(*args, **options):
        stdout = StringIO()
        stderr = StringIO()
        call_command("curvecast", *args, stdout=stdout, stderr=stderr, **options)
        return stdout.getvalue(), stderr.getvalue()

    return _run
