from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfusion.amplitude import SQRT2, Amplitude, abs2, is_zero

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)
radicands = st.sampled_from([1, 2, 3, 5, 6, 7, 10])


@st.composite
def amplitudes(draw, max_terms=3):
    pairs = draw(st.lists(st.tuples(fractions, radicands), min_size=0, max_size=max_terms))
    return Amplitude.from_radicals(pairs)


def approx(x: Amplitude) -> float:
    return float(x)


@given(amplitudes(), amplitudes(), amplitudes())
def test_ring_laws(x, y, z):
    assert x + y == y + x
    assert x * y == y * x
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x - x == Amplitude(0)


@given(amplitudes())
@settings(max_examples=60)
def test_inverse(x):
    if is_zero(x):
        with pytest.raises(ZeroDivisionError):
            x.inverse()
        return
    assert x * x.inverse() == Amplitude(1)


@given(amplitudes(), amplitudes())
def test_float_image_is_a_homomorphism(x, y):
    # independent oracle: ordinary floating-point arithmetic
    assert math.isclose(approx(x * y), approx(x) * approx(y), rel_tol=1e-9, abs_tol=1e-9)
    assert math.isclose(approx(x + y), approx(x) + approx(y), rel_tol=1e-9, abs_tol=1e-9)


def test_sqrt2_squares_to_two():
    assert SQRT2 * SQRT2 == 2
    assert Amplitude(0, 1) == SQRT2
    assert SQRT2.in_qsqrt2()


def test_inverse_sqrt_values():
    for n in range(1, 30):
        r = Amplitude.sqrt_of(n)
        assert r * r == n
        assert r.inverse() * r.inverse() == Fraction(1, n)


def test_rationalize_in_qsqrt2():
    # 1/(1 + sqrt 2) = sqrt 2 - 1
    assert Amplitude(1, 1).inverse() == Amplitude(-1, 1)
    assert (SQRT2 / 4) * 2 * SQRT2 == 1


def test_sqrt_of_square_extracts_factor():
    assert Amplitude.sqrt_of(8) == 2 * SQRT2
    assert Amplitude.sqrt_of(Fraction(1, 2)) == SQRT2 / 2
    assert Amplitude.sqrt_of(12).radicals == {3: Fraction(2)}


def test_equality_with_plain_numbers():
    assert Amplitude(3) == 3
    assert Amplitude(Fraction(1, 2)) == Fraction(1, 2)
    assert hash(Amplitude(Fraction(1, 2))) == hash(Fraction(1, 2))
    assert Amplitude(1) != SQRT2


def test_mixed_float_arithmetic_falls_back_to_float():
    out = SQRT2 * 0.5
    assert isinstance(out, float)
    assert math.isclose(out, math.sqrt(2) / 2)
    assert isinstance(SQRT2 * 1j, complex)


def test_abs2_is_square_for_reals():
    x = Amplitude(1, -3)
    assert abs2(x) == x * x


def test_rendering():
    assert str(Amplitude(Fraction(1, 2), Fraction(1, 2))) == "1/2 + 1/2·√2"
    assert repr(Amplitude(1)) == "Amplitude(1)"


@given(fractions, fractions)
def test_norm_form_in_qsqrt2(a, b):
    assert Amplitude(a, b) * Amplitude(a, -b) == a * a - 2 * b * b
