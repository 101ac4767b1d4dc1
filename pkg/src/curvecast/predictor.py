"""
Predictions from a fitted learning curve.

Forward predictions (accuracy at a size) are clamped to [0, 100] for
reporting; inverse predictions (size for a target accuracy) are rounded up to
whole samples. :func:`bootstrap` adds percentile intervals by refitting
within-size resamples of the replicates.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from curvecast.curve_model import ASYMPTOTE, evaluate, invert_for_size
from curvecast.exceptions import (
    BootstrapFailureError,
    ContractError,
    CurvecastError,
    DomainError,
    UnreachableTargetError,
)
from curvecast.experiments import ObservationGroup, ObservationSet, materialize_weights
from curvecast.seeding import derive_seed, make_rng
from curvecast.wnls_fit import fit

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_SUB_UNIT = "sub-unit-size"

# Percentile interval bounds (95% two-sided).
LOWER_PERCENTILE = 2.5
UPPER_PERCENTILE = 97.5

# An inverted size this close to an integer is reported as that integer.
_INTEGER_SNAP = 1e-9


@dataclass(frozen=True)
class SizePrediction:
    """Training size needed to reach a target accuracy.

    Attributes:
        target_accuracy: Target in percent, below 100.
        required_size_real: Exact solution of the curve for the target.
        required_size: Whole samples, ``ceil(required_size_real)``.
        interval: Bootstrap (low, high) whole-sample interval, if computed.
        status: ``"ok"`` or ``"sub-unit-size"`` when the real size is below 1.
        interval_excludes_estimate: The point estimate lies outside *interval*,
            which only happens when resampling is degenerate.
    """

    target_accuracy: float
    required_size_real: float
    required_size: int
    interval: tuple[int, int] | None = None
    status: str = STATUS_OK
    interval_excludes_estimate: bool = False

    def as_dict(self):
        data = {
            "target": self.target_accuracy,
            "real": self.required_size_real,
            "int": self.required_size,
            "status": self.status,
        }
        if self.interval is not None:
            data["interval"] = list(self.interval)
            data["interval_excludes_estimate"] = self.interval_excludes_estimate
        return data


@dataclass(frozen=True)
class BootstrapReport:
    """Percentile bootstrap summary.

    Attributes:
        replicate_count: Number of resampling rounds B.
        seed: Master seed; round i draws from ``derive_seed(seed, i)``.
        target: Target accuracy used for the size interval, if any.
        b1_interval: (low, high) percentile interval of b1.
        b2_interval: (low, high) percentile interval of b2.
        size_interval: (low, high) whole-sample interval of the required size.
        failed_refits: Rounds whose refit raised and were excluded.
    """

    replicate_count: int
    seed: int
    target: float | None
    b1_interval: tuple[float, float]
    b2_interval: tuple[float, float]
    size_interval: tuple[int, int] | None
    failed_refits: int

    def as_dict(self):
        intervals = {"b1": list(self.b1_interval), "b2": list(self.b2_interval)}
        if self.size_interval is not None:
            intervals["required_size"] = list(self.size_interval)
        return {
            "B": self.replicate_count,
            "seed": self.seed,
            "target": self.target,
            "failed_refits": self.failed_refits,
            "intervals": intervals,
        }


@dataclass(frozen=True)
class HoldoutCheck:
    """Prediction compared with an accuracy observed at a held-out size."""

    x: float
    observed: float
    predicted: float

    @property
    def error(self):
        return self.predicted - self.observed

    def as_dict(self):
        return {
            "x": self.x,
            "observed": self.observed,
            "predicted": self.predicted,
            "error": self.error,
        }


def clamp_accuracy(value):
    return min(max(value, 0.0), ASYMPTOTE)


def predict_accuracy(fit_result, x):
    """Predicted accuracy at size *x*, clamped to [0, 100].

    Raises:
        DomainError: If *x* is not a positive real.
    """
    return clamp_accuracy(evaluate(fit_result.params, x))


def whole_samples(size):
    """Round a real training size up to whole samples, ignoring round-off."""
    nearest = round(size)
    if nearest >= 1 and math.isclose(size, nearest, rel_tol=_INTEGER_SNAP):
        return int(nearest)
    return max(int(math.ceil(size)), 1)


def required_size(fit_result, target):
    """Training size at which the fitted curve reaches *target* percent.

    Raises:
        UnreachableTargetError: If ``target >= 100``.
        FlatCurveError: If the fitted curve is flat.
    """
    real = invert_for_size(fit_result.params, target)
    return SizePrediction(
        target_accuracy=float(target),
        required_size_real=real,
        required_size=whole_samples(real),
        status=STATUS_SUB_UNIT if real < 1 else STATUS_OK,
    )


def with_interval(prediction, report):
    """Attach a bootstrap size interval to *prediction*."""
    if report.size_interval is None:
        return prediction
    low, high = report.size_interval
    return replace(
        prediction,
        interval=report.size_interval,
        interval_excludes_estimate=not low <= prediction.required_size <= high,
    )


def _resample(groups, rng):
    resampled = []
    for group in groups:
        values = np.asarray(group.replicates)
        picks = rng.integers(0, values.size, size=values.size)
        resampled.append(
            ObservationGroup(
                group.size, tuple(float(v) for v in values[picks]), group.class_label
            )
        )
    return ObservationSet(tuple(resampled))


def _refit(groups, scheme, options, target, per_replicate, seed, index):
    rng = make_rng(derive_seed(seed, index))
    try:
        resampled = _resample(groups, rng)
        weights = materialize_weights(
            resampled, scheme, per_replicate=per_replicate, warn=False
        )
        x, t = resampled.pairs(per_replicate=per_replicate)
        result = fit(x, t, weights, options)
        size = None
        if target is not None:
            size = invert_for_size(result.params, target)
    except CurvecastError as e:
        logger.warning("Bootstrap refit %d failed: %s", index, e)
        return None
    return result.params.b1, result.params.b2, size


def _percentile_interval(values):
    low, high = np.percentile(np.asarray(values, dtype=float), [
        LOWER_PERCENTILE,
        UPPER_PERCENTILE,
    ])
    return float(low), float(high)


def bootstrap(
    observations,
    scheme,
    options=None,
    target=None,
    replicates=1000,
    seed=0,
    per_replicate=False,
    workers=1,
):
    """Percentile bootstrap of the fitted parameters and the required size.

    Each of the *replicates* rounds resamples the replicates of every size with
    replacement (sizes and group sizes are kept), re-materialises the weights,
    refits and, when *target* is given, inverts the curve. Round ``i`` draws
    from ``derive_seed(seed, i)``, so the report is identical for any
    *workers* count.

    Args:
        observations: A single-series ObservationSet.
        scheme: WeightScheme applied to every resample.
        options: FitOptions for the refits.
        target: Target accuracy for the size interval, or ``None``.
        replicates: Number of rounds B, at least 1.
        seed: Non-negative master seed.
        per_replicate: Fit per-replicate pairs instead of per-size means.
        workers: Threads used for the refits.

    Raises:
        ContractError: On invalid B, seed or a multi-class set.
        UnreachableTargetError: If ``target >= 100``.
        BootstrapFailureError: If every refit failed.
    """
    count = replicates
    if isinstance(count, bool) or not isinstance(count, int) or count < 1:
        raise ContractError(
            f"Bootstrap replicate count must be a positive integer, got {count!r}."
        )
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ContractError(f"Seed must be a non-negative integer, got {seed!r}.")
    if target is not None and float(target) >= ASYMPTOTE:
        raise UnreachableTargetError(
            f"Target accuracy {float(target):g}% is unreachable: the learning curve "
            "only approaches 100% asymptotically."
        )
    groups = observations.ordered_groups()

    def run(index):
        return _refit(groups, scheme, options, target, per_replicate, seed, index)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            outcomes = list(executor.map(run, range(replicates)))
    else:
        outcomes = [run(index) for index in range(replicates)]

    succeeded = [outcome for outcome in outcomes if outcome is not None]
    if not succeeded:
        raise BootstrapFailureError(
            f"All {replicates} bootstrap refits failed; no interval can be formed."
        )

    size_interval = None
    if target is not None:
        low, high = _percentile_interval([outcome[2] for outcome in succeeded])
        size_interval = (whole_samples(low), whole_samples(high))

    return BootstrapReport(
        replicate_count=replicates,
        seed=seed,
        target=None if target is None else float(target),
        b1_interval=_percentile_interval([outcome[0] for outcome in succeeded]),
        b2_interval=_percentile_interval([outcome[1] for outcome in succeeded]),
        size_interval=size_interval,
        failed_refits=replicates - len(succeeded),
    )


def sample_curve(fit_result, x_min, x_max, n_points):
    """Log-spaced ``(x, predicted accuracy)`` samples including both endpoints.

    Raises:
        DomainError: Unless ``0 < x_min < x_max``.
        ContractError: If ``n_points < 2``.
    """
    x_min = float(x_min)
    x_max = float(x_max)
    if not (math.isfinite(x_min) and math.isfinite(x_max)) or not 0 < x_min < x_max:
        raise DomainError(
            f"Curve sampling needs 0 < x_min < x_max, got [{x_min}, {x_max}]."
        )
    if isinstance(n_points, bool) or not isinstance(n_points, int) or n_points < 2:
        raise ContractError(f"n_points must be an integer >= 2, got {n_points!r}.")
    return [
        (float(x), predict_accuracy(fit_result, x))
        for x in np.geomspace(x_min, x_max, n_points)
    ]


def validate_holdout(fit_result, pairs):
    """Compare predictions with accuracies observed at held-out sizes.

    Args:
        pairs: Iterable of ``(size, observed accuracy)``.
    """
    return [
        HoldoutCheck(
            x=float(x),
            observed=float(observed),
            predicted=predict_accuracy(fit_result, x),
        )
        for x, observed in pairs
    ]


def fit_report(
    fit_result,
    *,
    class_label=None,
    scheme=None,
    predictions=(),
    size_prediction=None,
    bootstrap_report=None,
    holdout=(),
):
    """Assemble the JSON-serialisable report shared by every command.

    Stable keys: ``params``, ``weighted_sse``, ``converged``, ``residuals``,
    ``predictions``, ``required_size`` (``None`` without a target) and, when
    requested, ``bootstrap`` and ``holdout``.
    """
    report = {
        "class": class_label,
        "weights": {
            "scheme": scheme.name if scheme is not None else None,
            "values": list(fit_result.weights),
        },
        "params": fit_result.params.as_dict(),
        "weighted_sse": fit_result.weighted_sse,
        "converged": fit_result.converged,
        "iterations": fit_result.iterations_used,
        "condition_warning": fit_result.condition_warning,
        "sizes": list(fit_result.sizes),
        "observed": list(fit_result.observed),
        "residuals": list(fit_result.residuals),
        "predictions": [
            {"x": float(x), "accuracy": predict_accuracy(fit_result, x)}
            for x in predictions
        ],
        "required_size": size_prediction.as_dict() if size_prediction else None,
    }
    if bootstrap_report is not None:
        report["bootstrap"] = bootstrap_report.as_dict()
    if holdout:
        report["holdout"] = [check.as_dict() for check in holdout]
    return report
