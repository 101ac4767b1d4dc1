"""
Inverse power law learning curve: ``y = 100 + b1 * x ** b2``.

The asymptote is fixed at 100 percent. ``b1`` (learning rate) scales the
accuracy deficit and ``b2`` (decay rate) controls how fast it shrinks.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from curvecast.exceptions import (
    ContractError,
    DomainError,
    FlatCurveError,
    UnreachableTargetError,
)

logger = logging.getLogger(__name__)

ASYMPTOTE = 100.0

# Largest natural log that math.exp maps to a finite float.
MAX_LOG_SIZE = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class CurveParams:
    """Parameters of the learning curve.

    Attributes:
        b1: Learning rate in accuracy percent, ``b1 <= 0``.
        b2: Dimensionless decay exponent, ``b2 < 0``.
    """

    b1: float
    b2: float

    def __post_init__(self):
        if not (math.isfinite(self.b1) and math.isfinite(self.b2)):
            raise ContractError(
                f"Curve parameters must be finite, got b1={self.b1}, b2={self.b2}."
            )
        if self.b1 > 0:
            raise ContractError(f"b1 must be <= 0, got {self.b1}.")
        if self.b2 >= 0:
            raise ContractError(f"b2 must be < 0, got {self.b2}.")

    def as_dict(self):
        return {"b1": self.b1, "b2": self.b2}


class JacobianRow(NamedTuple):
    """Partial derivatives of the curve at one training size."""

    d_b1: float
    d_b2: float


def _check_size(x):
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"Training size must be a positive real, got {x}.")


def _power(x, exponent):
    try:
        return x**exponent
    except OverflowError:
        raise DomainError(
            f"x ** b2 overflows at training size {x} with b2={exponent}."
        ) from None


def evaluate(params, x):
    """Return the unclamped model accuracy ``100 + b1 * x ** b2`` at size *x*.

    Raises:
        DomainError: If *x* is not a positive real or ``x ** b2`` overflows.
    """
    x = float(x)
    _check_size(x)
    return ASYMPTOTE + params.b1 * _power(x, float(params.b2))


def jacobian_row(params, x):
    """Return the analytic partials ``(x**b2, b1 * x**b2 * ln x)`` at *x*."""
    x = float(x)
    _check_size(x)
    power = _power(x, float(params.b2))
    return JacobianRow(d_b1=power, d_b2=params.b1 * power * math.log(x))


def curve_values(params, x):
    """Vectorised :func:`evaluate` over an array of positive sizes."""
    x = np.asarray(x, dtype=float)
    return ASYMPTOTE + params.b1 * np.power(x, params.b2)


def jacobian(params, x):
    """Return the ``(m, 2)`` Jacobian of the curve with respect to (b1, b2)."""
    x = np.asarray(x, dtype=float)
    power = np.power(x, params.b2)
    return np.column_stack((power, params.b1 * power * np.log(x)))


def invert_for_size(params, target):
    """Return the training size at which the curve reaches *target* percent.

    Solves ``target = 100 + b1 * x ** b2`` for ``x``. A result below one
    sample is still returned, with a warning logged.

    Raises:
        FlatCurveError: If ``b1 == 0``; no finite size moves off 100%.
        UnreachableTargetError: If ``target >= 100``, or if the curve is so
            flat that the size does not fit in a float.
    """
    target = float(target)
    if not math.isfinite(target):
        raise DomainError(f"Target accuracy must be finite, got {target}.")
    if target >= ASYMPTOTE:
        raise UnreachableTargetError(
            f"Target accuracy {target:g}% is unreachable: the learning curve "
            "only approaches 100% asymptotically."
        )
    if params.b1 == 0:
        raise FlatCurveError(
            "The fitted curve is flat at 100% (b1 = 0); no training size "
            f"reaches {target:g}%."
        )

    log_size = (math.log(ASYMPTOTE - target) - math.log(-params.b1)) / params.b2
    if log_size >= MAX_LOG_SIZE:
        raise UnreachableTargetError(
            f"Target accuracy {target:g}% is unreachable: the fitted curve is too "
            f"flat (b2={params.b2:.6g}) to reach it at any representable size."
        )
    size = math.exp(log_size)
    if size < 1:
        logger.warning(
            "Required size %.6g for target %.4g%% is below one sample.",
            size,
            target,
        )
    return size
