"""
Tests for forward/inverse predictions and the bootstrap (curvecast.predictor).
"""

import json
import statistics

import numpy as np
import pytest

from curvecast.curve_model import CurveParams, evaluate
from curvecast.exceptions import (
    BootstrapFailureError,
    ContractError,
    DomainError,
    UnreachableTargetError,
)
from curvecast.experiments import ObservationGroup, ObservationSet
from curvecast.predictor import (
    STATUS_SUB_UNIT,
    BootstrapReport,
    SizePrediction,
    bootstrap,
    fit_report,
    predict_accuracy,
    required_size,
    sample_curve,
    validate_holdout,
    whole_samples,
    with_interval,
)
from curvecast.synthlab import SynthSpec, generate
from curvecast.weights.inverse_variance import InverseVariance
from curvecast.weights.uniform import Uniform
from curvecast.wnls_fit import FitResult, fit

SIZES = (5, 10, 20, 50, 100, 200)


def _fit_for(params):
    return FitResult(
        params=params, residuals=(), weighted_sse=0.0, iterations_used=0, converged=True
    )


@pytest.fixture
def reference_fit():
    """A FitResult for the curve (-200, -1)."""
    return _fit_for(CurveParams(-200.0, -1.0))


@pytest.fixture
def constant_replicates():
    """Three identical replicates per size on the curve (-200, -1)."""
    params = CurveParams(-200.0, -1.0)
    return ObservationSet(
        tuple(ObservationGroup(size, (evaluate(params, size),) * 3) for size in SIZES)
    )


@pytest.fixture
def noisy_replicates():
    """Ten noisy replicates per size from a seeded synthetic experiment."""
    return generate(
        SynthSpec(
            truth=CurveParams(-150.0, -0.7),
            sizes=SIZES,
            noise_scale=20.0,
            noise_exponent=0.5,
            seed=11,
        )
    )


@pytest.fixture
def flat_means():
    """One near-constant mean per size; the fit collapses to a flat curve."""
    return ObservationSet(
        tuple(
            ObservationGroup(size, (accuracy,))
            for size, accuracy in zip(
                (10, 20, 50, 100), (90.0, 90.05, 89.95, 90.02), strict=True
            )
        )
    )


class TestPredictAccuracy:
    """Tests for predict_accuracy()."""

    def test_clamped_below(self, reference_fit):
        """The raw value -100 at x = 1 is clamped to 0."""
        assert predict_accuracy(reference_fit, 1) == 0.0

    def test_reference_point(self, reference_fit):
        """(-200, -1) predicts 99.5 at 400."""
        assert predict_accuracy(reference_fit, 400) == pytest.approx(99.5)

    def test_body_part_fit_at_1000(self, body_part_fit):
        """The body-part fit predicts between 96 and 100 at 1000 samples."""
        assert 96.0 <= predict_accuracy(body_part_fit, 1000) <= 100.0

    @pytest.mark.parametrize("x", [0, -5])
    def test_domain(self, reference_fit, x):
        """Non-positive sizes raise DomainError."""
        with pytest.raises(DomainError):
            predict_accuracy(reference_fit, x)

    def test_always_in_range(self, body_part_fit):
        """Predictions stay within [0, 100] across many decades."""
        for x in np.geomspace(1e-3, 1e9, 60):
            assert 0.0 <= predict_accuracy(body_part_fit, x) <= 100.0


class TestRequiredSize:
    """Tests for required_size() and whole_samples()."""

    def test_reference_point(self, reference_fit):
        """(-200, -1) needs exactly 400 samples for 99.5%."""
        prediction = required_size(reference_fit, 99.5)
        assert prediction.required_size_real == pytest.approx(400.0)
        assert prediction.required_size == 400
        assert prediction.status == "ok"

    def test_ceiling(self, reference_fit):
        """Fractional sizes are rounded up."""
        prediction = required_size(reference_fit, 99.3)
        assert prediction.required_size_real == pytest.approx(285.714, rel=1e-5)
        assert prediction.required_size == 286
        assert prediction.required_size >= prediction.required_size_real

    def test_unreachable(self, reference_fit):
        """100% is never reached."""
        with pytest.raises(UnreachableTargetError):
            required_size(reference_fit, 100)

    def test_flat_fit_unreachable(self, flat_means):
        """A numerically flat fit cannot reach a target above its plateau."""
        result = fit(*flat_means.pairs(), np.ones(4))
        with pytest.raises(UnreachableTargetError, match="too flat"):
            required_size(result, 95.0)

    def test_sub_unit(self, reference_fit):
        """A target the curve passes before one sample is flagged."""
        prediction = required_size(reference_fit, -500)
        assert prediction.status == STATUS_SUB_UNIT
        assert prediction.required_size == 1

    def test_body_part_target(self, body_part_fit):
        """The body-part fit needs more than 200 samples for 99.5%."""
        prediction = required_size(body_part_fit, 99.5)
        assert np.isfinite(prediction.required_size_real)
        assert prediction.required_size > 200

    @pytest.mark.parametrize(
        "real,expected", [(400.0, 400), (400.0000000001, 400), (400.01, 401), (0.2, 1)]
    )
    def test_whole_samples(self, real, expected):
        """Round-off above an integer is not rounded up a whole sample."""
        assert whole_samples(real) == expected

    def test_inverse_consistency(self, body_part_fit):
        """Predicting at the required size returns the target."""
        low = max(predict_accuracy(body_part_fit, 1), 0.0)
        for target in np.linspace(low + 0.5, 99.99, 50):
            prediction = required_size(body_part_fit, float(target))
            assert predict_accuracy(
                body_part_fit, prediction.required_size_real
            ) == pytest.approx(float(target), rel=1e-9)

    def test_as_dict(self, reference_fit):
        """The JSON form uses target/real/int keys."""
        data = required_size(reference_fit, 99.5).as_dict()
        assert data["target"] == 99.5
        assert data["int"] == 400
        assert "interval" not in data


class TestSampleCurve:
    """Tests for sample_curve()."""

    def test_three_points(self, reference_fit):
        """Log-spaced samples include the geometric midpoint."""
        points = sample_curve(reference_fit, 10, 400, 3)
        expected = [(10.0, 80.0), (63.2456, 96.8377), (400.0, 99.5)]
        for (x, y), (ex, ey) in zip(points, expected, strict=True):
            assert x == pytest.approx(ex, abs=1e-4)
            assert y == pytest.approx(ey, abs=1e-4)

    def test_endpoints(self, reference_fit):
        """n = 2 returns exactly the endpoints."""
        points = sample_curve(reference_fit, 10, 400, 2)
        assert [x for x, _ in points] == [10.0, 400.0]

    def test_monotone(self):
        """Ordinates are nondecreasing for random valid curves."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            params = CurveParams(
                -float(rng.uniform(1, 5000)), -float(rng.uniform(0.05, 3))
            )
            ys = [y for _, y in sample_curve(_fit_for(params), 1, 1e5, 50)]
            assert ys == sorted(ys)

    @pytest.mark.parametrize("bounds", [(0, 10), (10, 10), (100, 10), (-1, 5)])
    def test_bad_bounds(self, reference_fit, bounds):
        """x_min must be positive and below x_max."""
        with pytest.raises(DomainError):
            sample_curve(reference_fit, *bounds, 10)

    def test_too_few_points(self, reference_fit):
        """At least two points are required."""
        with pytest.raises(ContractError):
            sample_curve(reference_fit, 1, 10, 1)


class TestHoldout:
    """Tests for validate_holdout()."""

    def test_signed_error(self, reference_fit):
        """Error is predicted minus observed."""
        (check,) = validate_holdout(reference_fit, [(400, 99.0)])
        assert check.predicted == pytest.approx(99.5)
        assert check.error == pytest.approx(0.5)
        assert check.as_dict()["observed"] == 99.0

    def test_body_part_large_set(self, body_part_fit):
        """The body-part fit is within 2.5 points of 97.25% observed at 1000."""
        (check,) = validate_holdout(body_part_fit, [(1000, 97.25)])
        assert abs(check.error) < 2.5


class TestBootstrap:
    """Tests for bootstrap()."""

    def test_zero_variance_gives_zero_width(self, constant_replicates):
        """Resampling identical replicates cannot move the fit."""
        report = bootstrap(
            constant_replicates, InverseVariance(), target=99.5, replicates=20, seed=1
        )
        assert report.b1_interval[0] == report.b1_interval[1]
        assert report.b2_interval[0] == report.b2_interval[1]
        assert report.size_interval[0] == report.size_interval[1]
        assert report.failed_refits == 0

    def test_deterministic(self, noisy_replicates):
        """The same inputs and seed give identical reports."""
        kwargs = {"target": 99.0, "replicates": 30, "seed": 5}
        first = bootstrap(noisy_replicates, Uniform(), **kwargs)
        second = bootstrap(noisy_replicates, Uniform(), **kwargs)
        assert first == second
        assert json.dumps(first.as_dict()) == json.dumps(second.as_dict())

    def test_concurrent_matches_sequential(self, noisy_replicates):
        """Running refits on threads does not change the report."""
        sequential = bootstrap(noisy_replicates, Uniform(), replicates=30, seed=9)
        threaded = bootstrap(
            noisy_replicates, Uniform(), replicates=30, seed=9, workers=4
        )
        assert sequential == threaded

    def test_seed_changes_draws(self, noisy_replicates):
        """Different seeds resample differently."""
        first = bootstrap(noisy_replicates, Uniform(), replicates=30, seed=1)
        second = bootstrap(noisy_replicates, Uniform(), replicates=30, seed=2)
        assert first.b2_interval != second.b2_interval

    def test_intervals_ordered(self, noisy_replicates):
        """Every interval has low <= high."""
        report = bootstrap(
            noisy_replicates, InverseVariance(), target=99.0, replicates=50, seed=3
        )
        assert isinstance(report, BootstrapReport)
        for low, high in (report.b1_interval, report.b2_interval, report.size_interval):
            assert low <= high
        assert report.replicate_count == 50
        assert 0 <= report.failed_refits <= 50

    def test_without_target(self, noisy_replicates):
        """Without a target only parameter intervals are reported."""
        report = bootstrap(noisy_replicates, Uniform(), replicates=10, seed=0)
        assert report.size_interval is None
        assert "required_size" not in report.as_dict()["intervals"]

    @pytest.mark.parametrize("replicates", [0, -3, 2.5])
    def test_invalid_replicate_count(self, noisy_replicates, replicates):
        """B must be a positive integer."""
        with pytest.raises(ContractError):
            bootstrap(noisy_replicates, Uniform(), replicates=replicates)

    def test_unreachable_target(self, noisy_replicates):
        """A 100% target is rejected before any refit."""
        with pytest.raises(UnreachableTargetError):
            bootstrap(noisy_replicates, Uniform(), target=100, replicates=5)

    def test_all_refits_fail(self, noisy_replicates, mocker):
        """When every refit fails, BootstrapFailureError is raised."""
        mocker.patch(
            "curvecast.predictor.fit", side_effect=ContractError("boom")
        )
        with pytest.raises(BootstrapFailureError):
            bootstrap(noisy_replicates, Uniform(), replicates=5, seed=0)

    def test_flat_series_fails_cleanly(self, flat_means):
        """Refits of a flat series that cannot reach the target all fail."""
        with pytest.raises(BootstrapFailureError):
            bootstrap(flat_means, Uniform(), target=95.0, replicates=20, seed=0)

    def test_failed_refits_counted(self, noisy_replicates, mocker):
        """Failed refits are excluded and counted."""
        calls = {"n": 0}

        def flaky_fit(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] % 2 == 0:
                raise ContractError("flaky")
            return fit(*args, **kwargs)

        mocker.patch("curvecast.predictor.fit", side_effect=flaky_fit)
        report = bootstrap(noisy_replicates, Uniform(), replicates=10, seed=0)
        assert report.failed_refits == 5

    def test_with_interval(self):
        """A degenerate interval that misses the estimate is flagged."""
        prediction = SizePrediction(99.5, 400.0, 400)
        report = BootstrapReport(10, 0, 99.5, (-1.0, -1.0), (-1.0, -1.0), (410, 420), 0)
        flagged = with_interval(prediction, report)
        assert flagged.interval == (410, 420)
        assert flagged.interval_excludes_estimate
        assert flagged.as_dict()["interval"] == [410, 420]

    @pytest.mark.slow
    def test_b2_coverage(self):
        """The true b2 lies inside the 95% interval in at least 80% of trials."""
        truth = CurveParams(-150.0, -0.7)
        covered = 0
        for trial in range(50):
            observations = generate(
                SynthSpec(
                    truth=truth,
                    sizes=SIZES,
                    noise_scale=20.0,
                    noise_exponent=0.5,
                    seed=1000 + trial,
                )
            )
            report = bootstrap(
                observations, InverseVariance(), replicates=200, seed=trial
            )
            low, high = report.b2_interval
            covered += low <= truth.b2 <= high
        assert covered >= 40

    @pytest.mark.slow
    def test_interval_shrinks_with_replicates(self):
        """Doubling replicates per size narrows the median b2 interval."""

        def median_width(reps):
            widths = []
            for seed in range(20):
                observations = generate(
                    SynthSpec(
                        truth=CurveParams(-150.0, -0.7),
                        sizes=SIZES,
                        replicates_per_size=reps,
                        noise_scale=20.0,
                        noise_exponent=0.5,
                        seed=seed,
                    )
                )
                low, high = bootstrap(
                    observations, InverseVariance(), replicates=100, seed=seed
                ).b2_interval
                widths.append(high - low)
            return statistics.median(widths)

        assert median_width(10) <= median_width(5)


class TestFitReport:
    """Tests for the shared JSON report."""

    def test_stable_keys(self, body_part_fit):
        """The report carries the documented keys and serialises to JSON."""
        report = fit_report(
            body_part_fit,
            predictions=[1000],
            size_prediction=required_size(body_part_fit, 99.5),
        )
        for key in (
            "params",
            "weighted_sse",
            "converged",
            "residuals",
            "predictions",
            "required_size",
        ):
            assert key in report
        assert set(report["params"]) == {"b1", "b2"}
        assert report["predictions"][0]["x"] == 1000.0
        assert set(report["required_size"]) >= {"target", "real", "int"}
        assert "bootstrap" not in report
        json.dumps(report)

    def test_required_size_null_without_target(self, body_part_fit):
        """required_size is null when no target was requested."""
        assert fit_report(body_part_fit)["required_size"] is None
