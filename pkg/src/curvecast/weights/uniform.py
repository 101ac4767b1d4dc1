from curvecast.weights import WeightScheme


class Uniform(WeightScheme):
    """Every size weighs 1 (ordinary nonlinear least squares)."""

    def size_weights(self, groups, warn=True):
        return [1.0] * len(groups)

    @property
    def name(self):
        return "uniform"
