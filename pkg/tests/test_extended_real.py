import math
import pytest

from divbound.backend.utils.errors import DivboundError
from divbound.backend.utils.extended_real import ExtReal, Interval, ext_dot

class TestExtReal:
    """Test suite for extended-real arithmetic."""

    def test_rejects_nan(self):
        with pytest.raises(DivboundError):
            ExtReal(float("nan"))

    def test_opposite_infinities_sum_to_plus_inf(self):
        total = ExtReal.inf() + ExtReal.neg_inf()
        assert total.is_pos_inf

    def test_zero_times_infinity_is_zero(self):
        assert ExtReal(0.0) * ExtReal.inf() == 0.0
        assert ExtReal.neg_inf() * 0 == 0.0

    def test_subtraction_of_minus_inf(self):
        value = ExtReal(1.5) - ExtReal.neg_inf()
        assert value.is_pos_inf

    def test_ordering_and_max(self):
        values = [ExtReal(2.0), ExtReal.inf(), ExtReal(-3.0), ExtReal.neg_inf()]
        assert max(values).is_pos_inf
        assert min(values).is_neg_inf
        assert ExtReal(1.0) < ExtReal.inf()
        assert ExtReal(1.0) <= 1.0

    def test_string_rendering(self):
        assert str(ExtReal.inf()) == "inf"
        assert str(ExtReal.neg_inf()) == "-inf"
        assert float(ExtReal(0.25)) == 0.25

    def test_ext_dot_skips_zero_weights(self):
        assert ext_dot([0.0, 1.0], [math.inf, 2.0]) == 2.0
        assert ext_dot([0.5, 0.5], [math.inf, 1.0]) == math.inf
        assert ext_dot([0.0, 0.0], [math.inf, math.inf]) == 0.0

class TestInterval:
    """Test suite for closed subgradient intervals."""

    def test_reversed_bounds_rejected(self):
        with pytest.raises(DivboundError):
            Interval(2.0, 1.0)

    def test_midpoints(self):
        assert Interval(-1.0, 1.0).midpoint == 0.0
        assert Interval(-math.inf, math.inf).midpoint == 0.0
        assert Interval(1.0, math.inf).midpoint == math.inf
        assert Interval(0.5, 1.5).width == 1.0

    def test_contains_with_tolerance(self):
        box = Interval(0.0, 1.0)
        assert box.contains(1.0)
        assert not box.contains(1.001)
        assert box.contains(1.001, tol=1e-2)
