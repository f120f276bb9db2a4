"""Scaled (mantissa, power-of-two exponent) arithmetic."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invrytov.bessel import ScaledValue

finite_floats = st.floats(min_value=-1e300, max_value=1e300,
                          allow_nan=False, allow_infinity=False)
nonzero_floats = finite_floats.filter(lambda v: abs(v) > 1e-300)
big_exponents = st.integers(min_value=-10**6, max_value=10**6)


class TestNormalization:
    def test_mantissa_in_unit_binade(self):
        for v in (1.0, -1.0, 0.3, -7.25, 1e-200, 1e200):
            s = ScaledValue(v)
            assert 1.0 <= abs(s.mantissa) < 2.0

    def test_zero_is_canonical(self):
        z = ScaledValue.zero()
        assert z.is_zero()
        assert z.mantissa == 0.0 and z.exponent == 0
        assert z.to_float() == 0.0
        assert z.sign == 0
        assert z.log_abs() == -math.inf

    def test_sign(self):
        assert ScaledValue(3.0).sign == 1
        assert ScaledValue(-3.0).sign == -1

    def test_constructor_applies_extra_exponent(self):
        assert ScaledValue(1.5, 4).to_float() == 24.0

    def test_from_float_rejects_non_finite(self):
        with pytest.raises(ValueError):
            ScaledValue.from_float(math.inf)
        with pytest.raises(ValueError):
            ScaledValue.from_float(math.nan)


class TestRoundTrip:
    @given(finite_floats)
    @settings(max_examples=300)
    def test_to_float_is_identity(self, v):
        assert ScaledValue.from_float(v).to_float() == v

    def test_subnormal_round_trip(self):
        v = 5e-324
        assert ScaledValue.from_float(v).to_float() == v

    def test_overflowing_demotion_raises(self):
        with pytest.raises(OverflowError):
            ScaledValue(1.5, 5000).to_float()


class TestMulDiv:
    @given(nonzero_floats, nonzero_floats, big_exponents, big_exponents)
    @settings(max_examples=200)
    def test_product_never_overflows(self, a, b, ea, eb):
        p = ScaledValue(a, ea) * ScaledValue(b, eb)
        assert 1.0 <= abs(p.mantissa) < 2.0
        assert math.isfinite(p.mantissa)

    @given(nonzero_floats, nonzero_floats, big_exponents, big_exponents)
    @settings(max_examples=200)
    def test_mul_div_round_trip(self, a, b, ea, eb):
        x = ScaledValue(a, ea)
        y = ScaledValue(b, eb)
        back = (x * y) / y
        # one rounding each way on the mantissa
        assert back.log_abs() == pytest.approx(x.log_abs(), abs=1e-15)
        assert back.sign == x.sign

    def test_log_abs_tracks_product(self):
        x = ScaledValue(3.0, 100_000)
        y = ScaledValue(7.0, -250_000)
        p = x * y
        assert p.log_abs() == pytest.approx(
            math.log(21.0) + (100_000 - 250_000) * math.log(2.0), rel=1e-14)

    def test_scalar_mul(self):
        assert (ScaledValue(3.0) * 2.0).to_float() == 6.0
        assert (2.0 * ScaledValue(3.0)).to_float() == 6.0

    def test_zero_product(self):
        assert (ScaledValue.zero() * ScaledValue(5.0)).is_zero()

    def test_division_by_zero_raises(self):
        with pytest.raises(ZeroDivisionError):
            ScaledValue(1.0) / ScaledValue.zero()


class TestAddSub:
    @given(nonzero_floats)
    @settings(max_examples=100)
    def test_self_cancellation(self, v):
        s = ScaledValue(v)
        assert (s - s).is_zero()

    def test_plain_sum(self):
        s = ScaledValue(1.5) + ScaledValue(2.5)
        assert s.to_float() == 4.0

    def test_negligible_addend_is_dropped(self):
        big = ScaledValue(1.5, 0)
        tiny = ScaledValue(1.5, -70)
        assert (big + tiny).to_float() == big.to_float()
        assert (tiny + big).to_float() == big.to_float()

    def test_near_addend_is_kept(self):
        big = ScaledValue(1.0, 0)
        small = ScaledValue(1.0, -50)
        assert (big + small).to_float() == 1.0 + 2.0**-50

    def test_add_across_huge_gap_keeps_larger(self):
        big = ScaledValue(1.2, 10**6)
        tiny = ScaledValue(1.9, -10**6)
        s = big + tiny
        assert s.mantissa == big.mantissa and s.exponent == big.exponent

    def test_zero_identity(self):
        v = ScaledValue(3.25)
        assert (v + ScaledValue.zero()).to_float() == 3.25
        assert (ScaledValue.zero() + v).to_float() == 3.25

    def test_neg_abs(self):
        v = ScaledValue(-2.5, 7)
        assert (-v).to_float() == 2.5 * 128.0
        assert abs(v).to_float() == 2.5 * 128.0
        assert abs(v).sign == 1
