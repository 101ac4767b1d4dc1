from abc import ABC, abstractmethod

from curvecast.exceptions import ContractError


class WeightScheme(ABC):
    """Abstract base class for per-size weighting schemes (the diagonal of W)."""

    @abstractmethod
    def size_weights(self, groups, warn=True):
        """Return one positive weight per group.

        Args:
            groups: Observation groups of a single series, ascending by size.
            warn: Log a warning when a group falls back to a default weight.

        Returns:
            Sequence of floats, same length as groups.
        """

    @property
    @abstractmethod
    def name(self):
        """Display name for this scheme (e.g. 'uniform', 'manual')."""


def get_weight_scheme(spec=None, observations=None, floor=None):
    """Create a weight scheme from a CLI/settings value.

    Reads CURVECAST_WEIGHT_SCHEME from settings when *spec* is not given. With
    neither, the default is InverseVariance when any size has replicates and
    Uniform otherwise.

    Args:
        spec: ``"uniform"``, ``"inverse-variance"`` or a comma-separated list of
            positive numbers (manual weights in ascending-size order).
        observations: The series being fitted; decides the default scheme.
        floor: Variance floor for InverseVariance, overriding
            ``settings.CURVECAST_VARIANCE_FLOOR``.

    Returns:
        A WeightScheme instance.
    """
    from curvecast.utils import get_variance_floor, get_weight_scheme_setting
    from curvecast.weights.inverse_variance import InverseVariance
    from curvecast.weights.manual import Manual
    from curvecast.weights.uniform import Uniform

    if spec is None:
        spec = get_weight_scheme_setting()
    if floor is None:
        floor = get_variance_floor()

    if spec is None:
        if observations is not None and observations.has_replicates:
            return InverseVariance(floor=floor)
        return Uniform()

    if isinstance(spec, (list, tuple)):
        return Manual(spec)

    name = str(spec).strip().lower()
    if name == "uniform":
        return Uniform()
    if name in ("inverse-variance", "inverse_variance", "inversevariance"):
        return InverseVariance(floor=floor)

    try:
        values = [float(value) for value in name.split(",")]
    except ValueError:
        raise ContractError(
            f"Unknown weight scheme: '{spec}'. Supported schemes: 'uniform', "
            "'inverse-variance', or a comma-separated list of weights such as "
            "'1,1,1,1,100,150'."
        ) from None
    return Manual(values)
