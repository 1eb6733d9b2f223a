"""Exactness and parsing tests for the 128-bit fixed-point layer."""

import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from torusres.fixedpoint import (
    BITS,
    HALF,
    MASK,
    MODULUS,
    FixedFraction,
    nearest_int_dist,
    nearest_int_dist_raw,
    parse_real,
    split_real,
)

raws = st.integers(min_value=0, max_value=MASK)


class TestFixedFraction:
    def test_rejects_out_of_range_raw(self):
        with pytest.raises(ValueError):
            FixedFraction(-1)
        with pytest.raises(ValueError):
            FixedFraction(MODULUS)
        with pytest.raises(TypeError):
            FixedFraction(0.5)

    def test_from_float_is_exact_for_dyadics(self):
        assert FixedFraction.from_float(0.0).raw == 0
        assert FixedFraction.from_float(0.5).raw == HALF
        assert FixedFraction.from_float(0.25).raw == MODULUS // 4
        # doubles are dyadic rationals; conversion must round-trip exactly
        assert FixedFraction.from_float(0.1).to_float() == 0.1

    def test_from_float_range_check(self):
        with pytest.raises(ValueError):
            FixedFraction.from_float(1.0)
        with pytest.raises(ValueError):
            FixedFraction.from_float(-0.1)
        with pytest.raises(ValueError):
            FixedFraction.from_float(float("nan"))

    def test_from_fraction_floors_onto_grid(self):
        f = FixedFraction.from_fraction(Fraction(1, 3))
        assert f.raw == (1 << BITS) // 3
        assert f.to_fraction() <= Fraction(1, 3) < f.to_fraction() + Fraction(1, MODULUS)

    def test_wrap_arithmetic(self):
        a = FixedFraction(MASK)
        b = FixedFraction(2)
        assert (a + b).raw == 1
        assert (b - a).raw == 3
        assert FixedFraction(HALF).scaled(3).raw == HALF
        with pytest.raises(ValueError):
            b.scaled(-1)

    def test_hex_round_trip(self):
        f = FixedFraction(0x1234_5678_9ABC_DEF0_0FED_CBA9_8765_4321)
        text = f.hex()
        assert text.startswith("fp:0x") and len(text) == 5 + 32
        n, g = parse_real(text)
        assert n == 0 and g == f
        assert str(f) == text

    @given(raws, raws)
    def test_add_sub_inverse(self, x, y):
        a, b = FixedFraction(x), FixedFraction(y)
        assert (a + b - b) == a
        assert ((a + b).raw - (x + y)) % MODULUS == 0

    @given(raws, st.integers(min_value=0, max_value=10**9))
    def test_scaled_matches_repeated_add(self, x, n):
        assert FixedFraction(x).scaled(n).raw == (x * n) % MODULUS

    @given(st.floats(min_value=0.0, max_value=1.0, exclude_max=True, allow_nan=False))
    def test_from_float_to_fraction_exact(self, value):
        f = FixedFraction.from_float(value)
        exact = Fraction(value)
        # grid floor: within one ulp of the grid below the true value
        assert 0 <= exact - f.to_fraction() < Fraction(1, MODULUS)


class TestNearestIntDist:
    def test_quarter_half_threequarter(self):
        assert nearest_int_dist(FixedFraction.from_float(0.25)) == 0.25
        assert nearest_int_dist(FixedFraction.from_float(0.5)) == 0.5
        assert nearest_int_dist(FixedFraction.from_float(0.75)) == 0.25
        assert nearest_int_dist(FixedFraction(0)) == 0.0

    @given(raws)
    def test_symmetry_and_range(self, x):
        d = nearest_int_dist(FixedFraction(x))
        assert 0.0 <= d <= 0.5
        assert d == nearest_int_dist(FixedFraction((-x) & MASK))

    @given(raws)
    def test_raw_variant_agrees(self, x):
        assert nearest_int_dist_raw(x) == min(x, MODULUS - x) % MODULUS
        assert nearest_int_dist(FixedFraction(x)) == nearest_int_dist_raw(x) / MODULUS


class TestSplitReal:
    def test_positive_and_negative(self):
        assert split_real(2.75) == (2, FixedFraction.from_float(0.75))
        assert split_real(-0.25) == (-1, FixedFraction.from_float(0.75))
        assert split_real(0.0) == (0, FixedFraction(0))
        assert split_real(-3.0) == (-3, FixedFraction(0))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            split_real(float("inf"))
        with pytest.raises(ValueError):
            split_real(float("nan"))

    @given(st.floats(min_value=-1e9, max_value=1e9, allow_nan=False))
    def test_reconstruction_is_exact(self, value):
        # fractional bits below 2**-128 are floored off the grid; doubles
        # of magnitude >= 2**-75 (or exactly 0) always reconstruct exactly
        if value != 0.0 and abs(value) < 1e-18:
            value = 0.0
        n, f = split_real(value)
        assert n + f.to_fraction() == Fraction(value)
        assert 0 <= f.raw < MODULUS

    def test_tiny_fraction_floors_onto_grid(self):
        n, f = split_real(5e-324)
        assert (n, f.raw) == (0, 0)


class TestParseReal:
    def test_decimal_and_rational_forms(self):
        assert parse_real("0.25") == (0, FixedFraction.from_float(0.25))
        assert parse_real("2") == (2, FixedFraction(0))
        assert parse_real("-3/7") == (-1, FixedFraction.from_fraction(Fraction(4, 7)))
        assert parse_real(" 1/2 ") == (0, FixedFraction(HALF))

    def test_sqrt_form_floor_certificate(self):
        for n in (0, 1, 2, 3, 5, 10, 12345):
            whole, frac = parse_real(f"sqrt:{n}")
            assert whole == math.isqrt(n)
            r = (whole << BITS) + frac.raw
            # r is the exact floor of sqrt(n) on the grid: r**2 <= n*2**256 < (r+1)**2
            assert r * r <= n << (2 * BITS) < (r + 1) * (r + 1)

    def test_sqrt_of_perfect_square_is_exact(self):
        whole, frac = parse_real("sqrt:49")
        assert (whole, frac.raw) == (7, 0)

    def test_fp_form(self):
        n, f = parse_real("fp:0x" + "0" * 31 + "1")
        assert n == 0 and f.raw == 1
        with pytest.raises(ValueError):
            parse_real("fp:0x123")  # wrong digit count

    def test_rejects_garbage(self):
        for bad in ("", "abc", "sqrt:-1", "1/0", "0x12"):
            with pytest.raises(ValueError):
                parse_real(bad)
