import math
import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from tremorlab.eigenform_locus import SlitTorusData, slit_construct
from tremorlab.errors import SlitThroughLatticePoint
from tremorlab.numbers import QuadraticNumber
from tremorlab.surface_core import torus_from_lattice

settings.register_profile("repo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

R2 = QuadraticNumber(0, 1, 2)


def sqrt2_torus():
    """Horizontally minimal torus: lattice (1, sqrt2), (1, sqrt2 + 1)."""
    return torus_from_lattice((Fraction(1), R2), (Fraction(1), R2 + 1))


def random_rational_lattice(rng, den=7):
    while True:
        a, b, c, d = (Fraction(rng.randint(-2 * den, 2 * den), den) for _ in range(4))
        det = a * d - b * c
        if det > Fraction(1, 4) and abs(det) < 3:
            return (a, b), (c, d)


def random_slit_pair(rng, normalize=True, horizontal=False, den=7):
    """Exact slit pair with rational lattice and slit."""
    while True:
        u, v = random_rational_lattice(rng, den)
        w = (Fraction(rng.randint(1, 3 * den), 4 * den),
             Fraction(0) if horizontal else Fraction(rng.randint(-den, den), 5 * den))
        try:
            return slit_construct(SlitTorusData((u, v), w, (0, 0), normalize))
        except (SlitThroughLatticePoint, ValueError):
            continue


def irrational_horizontal_pair(rng=None, normalize=False):
    """Exact slit pair on a horizontally minimal quadratic lattice, horizontal slit."""
    rng = rng or random.Random(0)
    k = rng.randint(0, 3)
    u = (Fraction(1), R2 + k)
    v = (Fraction(1), R2 + k + 1)
    w = (Fraction(rng.randint(1, 9), 10), Fraction(0))
    return slit_construct(SlitTorusData((u, v), w, (0, 0), normalize))


@pytest.fixture
def rng():
    return random.Random(12345)


# acceptance lines, printed after the run
ACCEPTANCE = []


def record(number, name, passed, detail):
    ACCEPTANCE.append((number, f"[{'PASS' if passed else 'FAIL'}] criterion {str(number):>4} {name}: {detail}"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE, key=lambda x: x[0]):
            terminalreporter.write_line(line)
