"""
Synthetic learning-curve experiments.

Stands in for repeated classifier training: replicated accuracies are drawn
around a known curve with Gaussian noise whose standard deviation shrinks with
the training size, ``sigma(x) = a * x ** -c``, then clamped into [0, 100].
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from curvecast.curve_model import CurveParams, evaluate
from curvecast.exceptions import ContractError, CurvecastError
from curvecast.experiments import ObservationGroup, ObservationSet, materialize_weights
from curvecast.seeding import derive_seed, make_rng
from curvecast.wnls_fit import fit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthSpec:
    """Design of a synthetic experiment.

    Attributes:
        truth: Ground-truth curve.
        sizes: Training sizes per class, unique.
        replicates_per_size: Repetitions per size.
        noise_scale: ``a`` in ``sigma(x) = a * x ** -c``, in percent.
        noise_exponent: ``c`` in ``sigma(x) = a * x ** -c``.
        seed: Non-negative master seed.
    """

    truth: CurveParams
    sizes: tuple[int, ...]
    replicates_per_size: int = 10
    noise_scale: float = 0.0
    noise_exponent: float = 0.0
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(self.sizes)
        if not sizes:
            raise ContractError("A synthetic experiment needs at least one size.")
        for size in sizes:
            if isinstance(size, bool) or not isinstance(size, int) or size <= 0:
                raise ContractError(f"Sizes must be positive integers, got {size!r}.")
        if len(set(sizes)) != len(sizes):
            raise ContractError(f"Sizes must be unique, got {list(sizes)}.")
        object.__setattr__(self, "sizes", sizes)

        reps = self.replicates_per_size
        if isinstance(reps, bool) or not isinstance(reps, int) or reps < 1:
            raise ContractError(
                f"replicates_per_size must be a positive integer, got {reps!r}."
            )
        for name in ("noise_scale", "noise_exponent"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ContractError(f"{name} must be finite and >= 0, got {value}.")
        seed = self.seed
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ContractError(f"seed must be a non-negative integer, got {seed!r}.")

    def noise_std(self, x):
        return self.noise_scale * float(x) ** (-self.noise_exponent)


@dataclass(frozen=True)
class RecoverySummary:
    """Parameter-recovery errors over a batch of synthetic trials.

    ``errors`` holds ``(b1_hat - b1, b2_hat - b2)`` for every trial that fitted;
    the statistics are NaN when none did.
    """

    trials: int
    errors: tuple[tuple[float, float], ...]
    failures: int
    median_b1_error: float
    median_b2_error: float
    mad_b1_error: float
    mad_b2_error: float
    median_abs_b1_error: float
    median_abs_b2_error: float


def generate(spec):
    """Draw a replicated ObservationSet from *spec*.

    Draw order is sizes ascending, then replicate index ascending, from a PCG64
    stream seeded with ``spec.seed``.
    """
    rng = make_rng(spec.seed)
    groups = []
    for size in sorted(spec.sizes):
        noise = rng.standard_normal(spec.replicates_per_size) * spec.noise_std(size)
        values = np.clip(evaluate(spec.truth, size) + noise, 0.0, 100.0)
        groups.append(ObservationGroup(size, tuple(float(v) for v in values)))
    return ObservationSet(tuple(groups))


def _run_trial(spec, scheme, options, per_replicate, index):
    trial_spec = replace(spec, seed=derive_seed(spec.seed, index))
    try:
        observations = generate(trial_spec)
        weights = materialize_weights(
            observations, scheme, per_replicate=per_replicate, warn=False
        )
        x, t = observations.pairs(per_replicate=per_replicate)
        result = fit(x, t, weights, options)
    except CurvecastError as e:
        logger.warning("Recovery trial %d failed: %s", index, e)
        return None
    return (
        result.params.b1 - spec.truth.b1,
        result.params.b2 - spec.truth.b2,
    )


def _median_and_mad(values):
    if values.size == 0:
        return math.nan, math.nan
    median = float(np.median(values))
    return median, float(np.median(np.abs(values - median)))


def recovery_experiment(
    spec, scheme, options=None, trials=1, per_replicate=False, workers=1
):
    """Run generate -> materialize_weights -> fit for *trials* derived seeds.

    Trial ``i`` uses ``derive_seed(spec.seed, i)``; the summary is identical
    for any *workers* count. Failing trials are counted, never raised.
    """
    if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
        raise ContractError(f"trials must be a positive integer, got {trials!r}.")

    def run(index):
        return _run_trial(spec, scheme, options, per_replicate, index)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            outcomes = list(executor.map(run, range(trials)))
    else:
        outcomes = [run(index) for index in range(trials)]

    errors = tuple(outcome for outcome in outcomes if outcome is not None)
    b1_errors = np.array([e[0] for e in errors])
    b2_errors = np.array([e[1] for e in errors])
    median_b1, mad_b1 = _median_and_mad(b1_errors)
    median_b2, mad_b2 = _median_and_mad(b2_errors)
    return RecoverySummary(
        trials=trials,
        errors=errors,
        failures=trials - len(errors),
        median_b1_error=median_b1,
        median_b2_error=median_b2,
        mad_b1_error=mad_b1,
        mad_b2_error=mad_b2,
        median_abs_b1_error=_median_and_mad(np.abs(b1_errors))[0],
        median_abs_b2_error=_median_and_mad(np.abs(b2_errors))[0],
    )
