import logging
import math

from curvecast.exceptions import ContractError
from curvecast.weights import WeightScheme

logger = logging.getLogger(__name__)

DEFAULT_VARIANCE_FLOOR = 1e-4


class InverseVariance(WeightScheme):
    """Weights ``1 / max(s_p ** 2, floor)`` from each size's replicate variance.

    The floor (in percent squared) keeps weights finite when replicates
    coincide. A size with a single replicate has no variance estimate and falls
    back to the floor.
    """

    def __init__(self, floor=DEFAULT_VARIANCE_FLOOR):
        floor = float(floor)
        if not math.isfinite(floor) or floor <= 0:
            raise ContractError(f"Variance floor must be positive, got {floor}.")
        self._floor = floor

    @property
    def floor(self):
        return self._floor

    def size_weights(self, groups, warn=True):
        weights = []
        for group in groups:
            if len(group.replicates) < 2:
                if warn:
                    logger.warning(
                        "Size %d has a single replicate; using the variance "
                        "floor %g for its inverse-variance weight.",
                        group.size,
                        self._floor,
                    )
                variance = self._floor
            else:
                variance = max(group.variance, self._floor)
            weights.append(1.0 / variance)
        return weights

    @property
    def name(self):
        return "inverse-variance"
