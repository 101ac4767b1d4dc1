"""
Tests for weight schemes and the scheme factory (curvecast.weights).
"""

import logging

import pytest

from curvecast.exceptions import ContractError
from curvecast.experiments import ObservationGroup, parse_observations
from curvecast.weights import WeightScheme, get_weight_scheme
from curvecast.weights.inverse_variance import DEFAULT_VARIANCE_FLOOR, InverseVariance
from curvecast.weights.manual import Manual
from curvecast.weights.uniform import Uniform

GROUPS = [
    ObservationGroup(5, (60.0, 64.0, 56.0)),
    ObservationGroup(10, (80.0, 80.0)),
    ObservationGroup(20, (90.0,)),
]


class TestGetWeightScheme:
    """Tests for the get_weight_scheme factory."""

    def test_default_without_replicates_is_uniform(self, body_part_average_csv):
        """Means-only data defaults to Uniform."""
        observations = parse_observations(body_part_average_csv.read_text())
        assert isinstance(get_weight_scheme(observations=observations), Uniform)

    def test_default_with_replicates_is_inverse_variance(self):
        """Replicated data defaults to InverseVariance."""
        observations = parse_observations("size,accuracy\n5,50\n5,52\n10,70\n10,71\n")
        scheme = get_weight_scheme(observations=observations)
        assert isinstance(scheme, InverseVariance)
        assert scheme.floor == DEFAULT_VARIANCE_FLOOR

    @pytest.mark.parametrize("spec", ["uniform", "UNIFORM", " uniform "])
    def test_uniform_names(self, spec):
        """'uniform' is case- and whitespace-insensitive."""
        assert isinstance(get_weight_scheme(spec), Uniform)

    @pytest.mark.parametrize("spec", ["inverse-variance", "inverse_variance"])
    def test_inverse_variance_names(self, spec):
        """Both spellings select InverseVariance."""
        assert isinstance(get_weight_scheme(spec), InverseVariance)

    def test_manual_from_string(self):
        """A comma list selects Manual weights."""
        scheme = get_weight_scheme("1,1,1,1,100,150")
        assert isinstance(scheme, Manual)
        assert scheme.values == (1.0, 1.0, 1.0, 1.0, 100.0, 150.0)

    def test_manual_from_list(self):
        """A list selects Manual weights."""
        assert get_weight_scheme([2, 3]).values == (2.0, 3.0)

    def test_unknown_scheme(self):
        """Unknown names raise ContractError listing the options."""
        with pytest.raises(ContractError, match="Unknown weight scheme"):
            get_weight_scheme("bayesian")

    def test_setting_used_when_no_spec(self, settings):
        """CURVECAST_WEIGHT_SCHEME supplies the default."""
        settings.CURVECAST_WEIGHT_SCHEME = "uniform"
        observations = parse_observations("size,accuracy\n5,50\n5,52\n10,70\n10,71\n")
        assert isinstance(get_weight_scheme(observations=observations), Uniform)

    def test_floor_setting(self, settings):
        """CURVECAST_VARIANCE_FLOOR configures InverseVariance."""
        settings.CURVECAST_VARIANCE_FLOOR = 0.5
        assert get_weight_scheme("inverse-variance").floor == 0.5

    def test_floor_argument_overrides_setting(self, settings):
        """An explicit floor wins over the setting."""
        settings.CURVECAST_VARIANCE_FLOOR = 0.5
        assert get_weight_scheme("inverse-variance", floor=2.0).floor == 2.0


class TestSchemes:
    """Tests for the concrete schemes."""

    def test_is_weight_scheme(self):
        """Every scheme implements the WeightScheme interface."""
        for scheme in (Uniform(), Manual([1]), InverseVariance()):
            assert isinstance(scheme, WeightScheme)

    def test_names(self):
        """Schemes report stable display names."""
        assert Uniform().name == "uniform"
        assert Manual([1]).name == "manual"
        assert InverseVariance().name == "inverse-variance"

    def test_uniform(self):
        """Uniform gives one weight of 1 per group."""
        assert list(Uniform().size_weights(GROUPS)) == [1.0, 1.0, 1.0]

    def test_inverse_variance_floors(self, caplog):
        """Zero variance and single replicates use the floor."""
        scheme = InverseVariance(floor=0.25)
        with caplog.at_level(logging.WARNING, logger="curvecast.weights"):
            weights = scheme.size_weights(GROUPS)
        assert weights == pytest.approx([1 / 16, 4.0, 4.0])
        assert "single replicate" in caplog.text

    def test_inverse_variance_quiet(self, caplog):
        """warn=False suppresses the single-replicate warning."""
        with caplog.at_level(logging.WARNING, logger="curvecast.weights"):
            InverseVariance().size_weights(GROUPS, warn=False)
        assert caplog.text == ""

    @pytest.mark.parametrize("floor", [0, -1, float("nan")])
    def test_invalid_floor(self, floor):
        """The variance floor must be positive."""
        with pytest.raises(ContractError):
            InverseVariance(floor=floor)

    @pytest.mark.parametrize("values", [[], [1, 0], [1, -2], [float("inf")]])
    def test_invalid_manual(self, values):
        """Manual weights must be positive and finite."""
        with pytest.raises(ContractError):
            Manual(values)

    def test_manual_length_mismatch(self):
        """Manual weights must match the number of sizes."""
        with pytest.raises(ContractError, match="got 2 manual weights for 3"):
            Manual([1, 2]).size_weights(GROUPS)
