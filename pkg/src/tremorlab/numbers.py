"""Number types used for holonomies.

Three kinds of scalars flow through the package: ``Fraction`` (exact
rational), ``QuadraticNumber`` (exact element of Q(sqrt d)) and ``float``.
Arithmetic between exact kinds stays exact; anything touching a float
becomes a float.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

TOL = 1e-12


def _squarefree_check(d: int) -> None:
    if d < 2:
        raise ValueError("radicand must be an integer >= 2")
    k = 2
    while k * k <= d:
        if d % (k * k) == 0:
            raise ValueError(f"radicand {d} is not squarefree")
        k += 1


class QuadraticNumber:
    """Exact number ``a + b*sqrt(d)`` with rational ``a``, ``b``."""

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b=0, d: int = 2):
        _squarefree_check(d)
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.d = int(d)

    @classmethod
    def sqrt(cls, d: int) -> "QuadraticNumber":
        return cls(0, 1, d)

    def _coerce(self, other):
        if isinstance(other, QuadraticNumber):
            if other.d != self.d:
                if other.b == 0:
                    return QuadraticNumber(other.a, 0, self.d)
                if self.b == 0:
                    return None
                raise ValueError("cannot mix different quadratic fields")
            return other
        if isinstance(other, (int, Fraction)) or isinstance(other, Rational):
            return QuadraticNumber(other, 0, self.d)
        return None

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, QuadraticNumber):
                return other + self
            return float(self) + other
        return QuadraticNumber(self.a + o.a, self.b + o.b, self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticNumber(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, QuadraticNumber):
                return other * self
            return float(self) * other
        return QuadraticNumber(self.a * o.a + self.d * self.b * o.b,
                               self.a * o.b + self.b * o.a, self.d)

    __rmul__ = __mul__

    def conjugate(self) -> "QuadraticNumber":
        return QuadraticNumber(self.a, -self.b, self.d)

    def norm(self) -> Fraction:
        return self.a * self.a - self.d * self.b * self.b

    def inverse(self) -> "QuadraticNumber":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero quadratic number")
        return QuadraticNumber(self.a / n, -self.b / n, self.d)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, QuadraticNumber):
                return QuadraticNumber(self.a, self.b, other.d) * other.inverse()
            return float(self) / other
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return other / float(self)
        return o * self.inverse()

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # comparison -------------------------------------------------------
    def sign(self) -> int:
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sb == 0:
            return sa
        if sa == 0 or sa == sb:
            return sb
        # opposite signs: compare a^2 with d b^2
        diff = self.a * self.a - self.d * self.b * self.b
        if diff == 0:
            return 0
        return sa if diff > 0 else sb

    def _cmp(self, other) -> int:
        if isinstance(other, float):
            x = float(self)
            return (x > other) - (x < other)
        return (self - other).sign()

    def __eq__(self, other):
        if isinstance(other, (QuadraticNumber, int, Fraction)):
            try:
                return self._cmp(other) == 0
            except ValueError:
                return False
        if isinstance(other, float):
            return float(self) == other
        return NotImplemented

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.d))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __bool__(self):
        return self.sign() != 0

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(self.d)

    def __repr__(self):
        return f"QuadraticNumber({self.a}, {self.b}, {self.d})"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        return f"{self.a}+{self.b}*sqrt({self.d})"


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, QuadraticNumber)) and not isinstance(x, bool)


def to_float(x) -> float:
    return float(x)


def sign(x) -> int:
    if isinstance(x, QuadraticNumber):
        return x.sign()
    return (x > 0) - (x < 0)


def exact_sqrt(x):
    """Square root staying exact when possible.

    Rational perfect squares give a Fraction, other positive rationals give a
    QuadraticNumber; floats and quadratic inputs fall back to float.
    """
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        if x < 0:
            raise ValueError("negative square root")
        num, den = x.numerator, x.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn == num and rd * rd == den:
            return Fraction(rn, rd)
        # sqrt(num/den) = sqrt(num*den)/den, pull square factors out
        m = num * den
        out, k = 1, 2
        while k * k <= m:
            while m % (k * k) == 0:
                m //= k * k
                out *= k
            k += 1
        return QuadraticNumber(0, Fraction(out, den), m)
    if isinstance(x, QuadraticNumber) and x.b == 0:
        return exact_sqrt(x.a)
    return math.sqrt(float(x))


def parse_scalar(value):
    """Parse a scalar from the surface document conventions.

    ``[num, den]`` gives a Fraction, ``{"quad": [[an, ad], [bn, bd], d]}``
    gives a QuadraticNumber, a bare number gives a float.
    """
    if isinstance(value, dict) and "quad" in value:
        (an, ad), (bn, bd), d = value["quad"]
        return QuadraticNumber(Fraction(an, ad), Fraction(bn, bd), d)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return Fraction(int(value[0]), int(value[1]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ValueError(f"unrecognised scalar {value!r}")


def dump_scalar(x):
    if isinstance(x, QuadraticNumber):
        if x.b == 0:
            return [x.a.numerator, x.a.denominator]
        return {"quad": [[x.a.numerator, x.a.denominator],
                         [x.b.numerator, x.b.denominator], x.d]}
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        return [x.numerator, x.denominator]
    return float(x)


def scalar_kind(x) -> str:
    if isinstance(x, QuadraticNumber):
        return "quad"
    if isinstance(x, (int, Fraction)):
        return "rational"
    return "float"
