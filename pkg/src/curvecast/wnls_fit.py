"""
Weighted nonlinear least squares for the learning curve.

The objective is ``E(b) = sum_p w_p * (t_p - f(x_p; b)) ** 2``. :func:`fit`
minimises it with Levenberg-Marquardt on ``theta = (ln(-b1), ln(-b2))`` so every
iterate keeps ``b1 < 0`` and ``b2 < 0``. :func:`grid_search_fit` is a brute-force
oracle used to check the solver.
"""

import logging
import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.optimize import minimize_scalar

from curvecast.curve_model import ASYMPTOTE, CurveParams, curve_values
from curvecast.exceptions import ContractError, FlatDataError, InsufficientDataError

logger = logging.getLogger(__name__)

# Clamps applied to the log-log initial guess so it can be reparameterised.
MAX_INITIAL_B1 = -1e-9
MAX_INITIAL_B2 = -1e-6

# A 2x2 damped system is treated as singular below this fraction of its scale.
SINGULAR_RATIO = 1e-14
# Marquardt scaling floor, relative to the largest diagonal entry.
DIAGONAL_FLOOR = 1e-12
# Past this damping no step can lower the objective at machine precision.
MAX_DAMPING = 1e16
# Below this max |b2 * ln x| the fitted curve is constant over the data.
FLAT_EXPONENT = 1e-12


@dataclass(frozen=True)
class FitOptions:
    """Solver settings for :func:`fit`."""

    max_iterations: int = 500
    relative_sse_tolerance: float = 1e-10
    initial_damping: float = 1e-3
    damping_increase: float = 10.0
    damping_decrease: float = 0.1
    initial_params: CurveParams | None = None

    def __post_init__(self):
        if isinstance(self.max_iterations, bool) or not isinstance(
            self.max_iterations, int
        ):
            raise ContractError(
                f"max_iterations must be an integer, got {self.max_iterations!r}."
            )
        numeric = {
            "max_iterations": self.max_iterations,
            "relative_sse_tolerance": self.relative_sse_tolerance,
            "initial_damping": self.initial_damping,
            "damping_increase": self.damping_increase,
            "damping_decrease": self.damping_decrease,
        }
        for name, value in numeric.items():
            if not math.isfinite(value) or value <= 0:
                raise ContractError(f"{name} must be a positive number, got {value}.")
        if not self.damping_decrease < 1 < self.damping_increase:
            raise ContractError(
                "Damping factors must satisfy damping_decrease < 1 < "
                f"damping_increase, got {self.damping_decrease} and "
                f"{self.damping_increase}."
            )

    @classmethod
    def from_mapping(cls, mapping):
        """Build options from a plain dict, e.g. ``settings.CURVECAST_FIT_OPTIONS``."""
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ContractError(
                f"Unknown fit option(s): {', '.join(sorted(unknown))}. "
                f"Available options: {', '.join(sorted(known))}"
            )
        values = dict(mapping)
        initial = values.get("initial_params")
        if isinstance(initial, dict):
            values["initial_params"] = CurveParams(**initial)
        elif isinstance(initial, (list, tuple)):
            values["initial_params"] = CurveParams(*initial)
        return cls(**values)


@dataclass(frozen=True)
class FitResult:
    """Outcome of a weighted least-squares fit.

    Attributes:
        params: Fitted curve parameters.
        residuals: ``t_p - f(x_p; b)`` in accuracy percent, one per pair.
        weighted_sse: ``sum(w_p * residuals_p ** 2)``.
        iterations_used: Solver iterations (accepted and rejected steps).
        converged: Whether the stopping rule was met within the budget.
        condition_warning: Whether near-singular normal equations were met.
        sse_history: Objective at the start and after every accepted step.
        sizes: Training sizes of the fitted pairs.
        observed: Observed accuracies of the fitted pairs.
        weights: Weights of the fitted pairs.
    """

    params: CurveParams
    residuals: tuple[float, ...]
    weighted_sse: float
    iterations_used: int
    converged: bool
    condition_warning: bool = False
    sse_history: tuple[float, ...] = field(default=())
    sizes: tuple[float, ...] = field(default=())
    observed: tuple[float, ...] = field(default=())
    weights: tuple[float, ...] = field(default=())


def _as_pairs(x, t, weights):
    """Validate flattened (x_p, t_p) pairs and weights, returning float arrays."""
    x = np.asarray(x, dtype=float).ravel()
    t = np.asarray(t, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()

    if x.size != t.size:
        raise ContractError(
            f"Got {x.size} training sizes but {t.size} accuracies; "
            "every size needs exactly one accuracy."
        )
    if w.size != x.size:
        raise ContractError(
            f"Weight vector has {w.size} entries but there are {x.size} "
            "observations; lengths must match."
        )
    if x.size == 0:
        raise InsufficientDataError("No observations to fit.")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise ContractError("Training sizes must be positive finite numbers.")
    if not np.all(np.isfinite(t)):
        raise ContractError("Accuracies must be finite numbers.")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        bad = [float(v) for v in w if not (math.isfinite(v) and v > 0)]
        raise ContractError(
            f"Weights must be positive finite numbers, got {bad[:5]}."
        )
    return x, t, w


def _objective(b1, b2, x, t, w):
    residuals = t - (ASYMPTOTE + b1 * np.power(x, b2))
    return float(np.sum(w * residuals**2))


def weighted_sse(params, x, t, weights):
    """Return ``sum(w_p * (t_p - f(x_p; params)) ** 2)``.

    Raises:
        ContractError: On a length mismatch or a nonpositive weight.
    """
    x, t, w = _as_pairs(x, t, weights)
    return _objective(params.b1, params.b2, x, t, w)


def default_init(x, t):
    """Initial guess from ordinary least squares on the log-log deficit.

    Regresses ``ln(100 - mean_p)`` on ``ln(x_p)`` over the distinct sizes whose
    mean accuracy is below 100; the slope is ``b2`` and the intercept
    ``ln(-b1)``.

    Raises:
        InsufficientDataError: Fewer than two distinct (usable) sizes.
        FlatDataError: Every per-size mean equals 100.
    """
    x = np.asarray(x, dtype=float).ravel()
    t = np.asarray(t, dtype=float).ravel()
    sizes, inverse = np.unique(x, return_inverse=True)
    if sizes.size < 2:
        raise InsufficientDataError(
            f"At least 2 distinct training sizes are needed, got {sizes.size}."
        )

    means = np.bincount(inverse, weights=t) / np.bincount(inverse)
    usable = means < ASYMPTOTE
    if not usable.any():
        raise FlatDataError(
            "Every per-size mean accuracy is 100%; the curve cannot be fitted."
        )
    if usable.sum() < 2:
        raise InsufficientDataError(
            "At least 2 training sizes with mean accuracy below 100% are needed "
            f"to initialise the fit, got {int(usable.sum())}."
        )

    slope, intercept = np.polyfit(
        np.log(sizes[usable]), np.log(ASYMPTOTE - means[usable]), 1
    )
    b2 = min(float(slope), MAX_INITIAL_B2)
    b1 = min(-math.exp(float(intercept)), MAX_INITIAL_B1)
    return CurveParams(b1=b1, b2=b2)


def _build_result(params, x, t, w, **diagnostics):
    residuals = t - curve_values(params, x)
    return FitResult(
        params=params,
        residuals=tuple(float(r) for r in residuals),
        weighted_sse=float(np.sum(w * residuals**2)),
        sizes=tuple(float(v) for v in x),
        observed=tuple(float(v) for v in t),
        weights=tuple(float(v) for v in w),
        **diagnostics,
    )


def fit(x, t, weights, options=None):
    """Fit the learning curve to (x_p, t_p) pairs by weighted least squares.

    Args:
        x: Training sizes, one per pair.
        t: Observed accuracies in percent, one per pair.
        weights: Positive weights, one per pair.
        options: :class:`FitOptions`; defaults are used when omitted.

    Returns:
        FitResult: Always returned, with ``converged=False`` when the iteration
        budget runs out first or the fit ends on a numerically flat curve.

    Raises:
        ContractError: On invalid pairs or weights.
        InsufficientDataError, FlatDataError: From the default initialisation.
    """
    options = options or FitOptions()
    x, t, w = _as_pairs(x, t, weights)
    if np.unique(x).size < 2:
        raise InsufficientDataError(
            "At least 2 distinct training sizes are needed to fit 2 parameters."
        )

    start = options.initial_params or default_init(x, t)
    theta = np.array(
        [math.log(-min(start.b1, MAX_INITIAL_B1)), math.log(-start.b2)]
    )
    log_x = np.log(x)

    damping = options.initial_damping
    sse = _objective(-math.exp(theta[0]), -math.exp(theta[1]), x, t, w)
    history = [sse]
    converged = sse == 0.0
    condition_warning = False
    iterations = 0

    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        while not converged and iterations < options.max_iterations:
            iterations += 1
            b1, b2 = -np.exp(theta)
            scaled_power = b1 * np.power(x, b2)
            residuals = t - (ASYMPTOTE + scaled_power)

            # Chain rule: d b1 / d theta1 = b1 and d b2 / d theta2 = b2.
            jac = np.column_stack((scaled_power, scaled_power * log_x * b2))
            weighted_jac = jac * w[:, np.newaxis]
            normal = weighted_jac.T @ jac
            gradient = weighted_jac.T @ residuals

            diagonal = np.diag(normal)
            diagonal = np.maximum(diagonal, DIAGONAL_FLOOR * diagonal.max())
            damped = normal + damping * np.diag(diagonal)
            determinant = damped[0, 0] * damped[1, 1] - damped[0, 1] * damped[1, 0]
            scale = max(abs(damped[0, 0]), abs(damped[1, 1])) ** 2
            if not math.isfinite(determinant) or abs(determinant) <= (
                SINGULAR_RATIO * scale
            ):
                if not condition_warning:
                    logger.warning(
                        "Near-singular normal equations at b1=%.6g, b2=%.6g; "
                        "increasing damping.",
                        b1,
                        b2,
                    )
                condition_warning = True
                damping *= options.damping_increase
                continue

            trial = theta + np.linalg.solve(damped, gradient)
            trial_b1, trial_b2 = -np.exp(trial)
            trial_sse = _objective(trial_b1, trial_b2, x, t, w)

            if trial_b1 < 0 and trial_b2 < 0 and trial_sse < sse:
                relative = (sse - trial_sse) / sse
                theta, sse = trial, trial_sse
                history.append(sse)
                damping *= options.damping_decrease
                if relative < options.relative_sse_tolerance or sse == 0.0:
                    converged = True
            else:
                damping *= options.damping_increase
                if damping > MAX_DAMPING:
                    converged = True

    b1, b2 = (float(v) for v in -np.exp(theta))
    # exp(theta) can underflow to zero on a collapsing exponent.
    b2 = min(b2, -float(np.finfo(float).tiny))
    params = CurveParams(b1=b1, b2=b2)
    if abs(b2) * float(np.max(np.abs(log_x))) < FLAT_EXPONENT:
        logger.warning(
            "The fitted curve is numerically flat over the observed sizes "
            "(b2=%.3g); b1 and b2 are not identifiable.",
            b2,
        )
        converged = False
    elif not converged:
        logger.warning(
            "Fit did not converge within %d iterations (weighted SSE %.6g).",
            options.max_iterations,
            sse,
        )
    logger.debug(
        "Fit finished after %d iterations: b1=%.6g b2=%.6g sse=%.6g",
        iterations,
        b1,
        b2,
        sse,
    )
    return _build_result(
        params,
        x,
        t,
        w,
        iterations_used=iterations,
        converged=converged,
        condition_warning=condition_warning,
        sse_history=tuple(history),
    )


def _check_range(name, bounds):
    try:
        low, high = (float(v) for v in bounds)
    except (TypeError, ValueError) as e:
        raise ContractError(
            f"{name} must be a (low, high) pair, got {bounds!r}."
        ) from e
    if not (math.isfinite(low) and math.isfinite(high)) or low >= 0 or high >= 0:
        raise ContractError(
            f"{name} must be a finite negative interval, got ({low}, {high})."
        )
    return min(low, high), max(low, high)


def _log_grid(low, high, steps):
    """Negative values log-spaced in magnitude from *low* to *high*."""
    if low == high:
        return np.full(steps, low)
    return -np.geomspace(-low, -high, steps)


def _profiled_b1(b2, x, t, w, b1_low, b1_high):
    """Best b1 for a fixed b2: the objective is quadratic in b1."""
    power = np.power(x, b2)
    b1 = np.sum(w * (t - ASYMPTOTE) * power) / np.sum(w * power**2)
    return min(max(float(b1), b1_low), b1_high)


def grid_search_fit(x, t, weights, b1_range, b2_range, grid_steps=200):
    """Brute-force minimiser of the weighted SSE, used as a test oracle.

    Every point of a ``grid_steps x grid_steps`` grid, log-spaced in ``|b1|``
    and ``|b2|``, is evaluated. One refinement pass then polishes the best
    ``b2`` row: b1 is profiled out in closed form (clipped to *b1_range*) and b2
    is minimised by a bounded Brent search over the neighbouring cells.

    Raises:
        ContractError: On invalid pairs, weights, ranges or ``grid_steps < 10``.
    """
    x, t, w = _as_pairs(x, t, weights)
    b1_low, b1_high = _check_range("b1_range", b1_range)
    b2_low, b2_high = _check_range("b2_range", b2_range)
    if isinstance(grid_steps, bool) or not isinstance(grid_steps, int):
        raise ContractError(f"grid_steps must be an integer, got {grid_steps!r}.")
    if grid_steps < 10:
        raise ContractError(f"grid_steps must be at least 10, got {grid_steps}.")

    b1_grid = _log_grid(b1_low, b1_high, grid_steps)
    b2_grid = _log_grid(b2_low, b2_high, grid_steps)

    power = np.power(x[np.newaxis, :], b2_grid[:, np.newaxis])
    predicted = ASYMPTOTE + b1_grid[:, np.newaxis, np.newaxis] * power[np.newaxis]
    surface = np.sum(w * (t - predicted) ** 2, axis=2)
    i, j = np.unravel_index(np.argmin(surface), surface.shape)
    candidates = [(float(surface[i, j]), float(b1_grid[i]), float(b2_grid[j]))]

    def profiled_sse(b2):
        b1 = _profiled_b1(b2, x, t, w, b1_low, b1_high)
        return _objective(b1, b2, x, t, w)

    profile = np.array([profiled_sse(b2) for b2 in b2_grid])
    k = int(np.argmin(profile))
    b2_best = float(b2_grid[k])
    candidates.append(
        (
            float(profile[k]),
            _profiled_b1(b2_best, x, t, w, b1_low, b1_high),
            b2_best,
        )
    )

    evaluations = grid_steps * grid_steps + grid_steps
    neighbours = b2_grid[max(k - 1, 0) : k + 2]
    low, high = float(neighbours.min()), float(neighbours.max())
    if low < high:
        refined = minimize_scalar(
            profiled_sse,
            bounds=(low, high),
            method="bounded",
            options={"xatol": 1e-12, "maxiter": 500},
        )
        evaluations += int(refined.nfev)
        b2_refined = float(refined.x)
        candidates.append(
            (
                profiled_sse(b2_refined),
                _profiled_b1(b2_refined, x, t, w, b1_low, b1_high),
                b2_refined,
            )
        )

    best_sse, b1, b2 = min(candidates)
    return _build_result(
        CurveParams(b1=b1, b2=b2),
        x,
        t,
        w,
        iterations_used=evaluations,
        converged=True,
        sse_history=(best_sse,),
    )
