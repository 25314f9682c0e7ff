import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from tremorlab.numbers import QuadraticNumber, dump_scalar, exact_sqrt, parse_scalar, sign

fracs = st.fractions(min_value=-50, max_value=50, max_denominator=60)
quads = st.builds(lambda a, b: QuadraticNumber(a, b, 2), fracs, fracs)


def test_sqrt2_squares_to_two():
    r = QuadraticNumber.sqrt(2)
    assert r * r == 2
    assert float(r) == pytest.approx(math.sqrt(2), abs=1e-15)


def test_exact_sqrt_pulls_square_factors():
    assert exact_sqrt(Fraction(9, 4)) == Fraction(3, 2)
    s = exact_sqrt(Fraction(8))
    assert isinstance(s, QuadraticNumber) and s.d == 2 and s * s == 8


def test_scalar_roundtrip():
    for x in (Fraction(3, 7), QuadraticNumber(Fraction(1, 3), Fraction(-2, 5), 2), 0.25):
        assert parse_scalar(dump_scalar(x)) == x


def test_mixing_fields_rejected():
    with pytest.raises(ValueError):
        QuadraticNumber(0, 1, 2) + QuadraticNumber(0, 1, 3)


@given(quads)
def test_sign_agrees_with_float(x):
    f = float(x)
    if abs(f) > 1e-9:
        assert sign(x) == (1 if f > 0 else -1)
    if x.a == 0 and x.b == 0:
        assert sign(x) == 0


@given(quads, quads, quads)
def test_field_laws(x, y, z):
    assert (x + y) * z == x * z + y * z
    if not (x.a == 0 and x.b == 0):
        assert (y / x) * x == y
    assert (x < y) == (float(x) < float(y)) or abs(float(x) - float(y)) < 1e-9
