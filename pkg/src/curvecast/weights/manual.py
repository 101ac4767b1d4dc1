import math

from curvecast.exceptions import ContractError
from curvecast.weights import WeightScheme


class Manual(WeightScheme):
    """Explicit weights bound to sizes in ascending numeric order.

    ``Manual([1, 1, 1, 1, 100, 150])`` favours the two largest of six sizes,
    whose replicates vary least.
    """

    def __init__(self, values):
        values = tuple(float(value) for value in values)
        if not values:
            raise ContractError("Manual weights need at least one value.")
        bad = [value for value in values if not (math.isfinite(value) and value > 0)]
        if bad:
            raise ContractError(
                f"Manual weights must be positive finite numbers, got {bad[:5]}."
            )
        self._values = values

    @property
    def values(self):
        return self._values

    def size_weights(self, groups, warn=True):
        if len(self._values) != len(groups):
            raise ContractError(
                f"Weight length mismatch: got {len(self._values)} manual weights "
                f"for {len(groups)} training sizes "
                f"({', '.join(str(group.size) for group in groups)})."
            )
        return list(self._values)

    @property
    def name(self):
        return "manual"
