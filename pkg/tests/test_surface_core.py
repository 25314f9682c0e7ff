import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import random_slit_pair, sqrt2_torus
from tremorlab.eigenform_locus import slit_pair
from tremorlab.errors import ClosureViolation, NonConvexFlip, OrientationViolation, SpecFormatError
from tremorlab.linear_action import Mat2, apply_matrix
from tremorlab.numbers import QuadraticNumber
from tremorlab.surface_core import (
    Cochain1,
    HORIZONTAL,
    area,
    build_surface,
    dump_surface_spec,
    enumerate_saddle_connections,
    flip_edge,
    flip_is_convex,
    homology_basis,
    intersection_number,
    normalize_area,
    square_torus,
    standard_symplectic,
    swap_edge_ids,
    torus_from_lattice,
)

F = Fraction


def torus_spec(u, v):
    d = (u[0] + v[0], u[1] + v[1])
    hol = [u, v, (-d[0], -d[1]), d, (-u[0], -u[1]), (-v[0], -v[1])]
    return {
        "format": "tsurf-v1",
        "triangles": [[0, 1, 2], [3, 4, 5]],
        "gluing": [4, 5, 3, 2, 0, 1],
        "holonomy": [[[x.numerator, x.denominator], [y.numerator, y.denominator]] for x, y in hol],
        "vertex_labels": {"p0": [0, 0]},
    }


def test_square_torus_valid():
    q = build_surface(torus_spec((F(1), F(0)), (F(0), F(1))))
    assert q.genus == 1
    assert q.cone_angles() == pytest.approx([2 * math.pi])
    assert q.area() == 1


def test_negative_diagonal_rejected():
    # d = u + v = (1, -1) makes the lower triangle clockwise
    with pytest.raises(OrientationViolation):
        build_surface(torus_spec((F(1), F(0)), (F(0), F(-1))))


def test_broken_closure_rejected():
    doc = torus_spec((F(1), F(0)), (F(0), F(1)))
    doc["holonomy"][0] = [[2, 1], [0, 1]]
    with pytest.raises(ClosureViolation):
        build_surface(doc)


def test_mixed_holonomy_needs_flag():
    doc = torus_spec((F(1), F(0)), (F(0), F(1)))
    doc["holonomy"] = [[x[0] / x[1], y] for x, y in doc["holonomy"]]
    with pytest.raises(SpecFormatError):
        build_surface(doc)
    q = build_surface(doc, allow_mixed=True)
    assert float(q.area()) == pytest.approx(1.0)


def test_spec_roundtrip():
    q = slit_pair()
    q2 = build_surface(dump_surface_spec(q))
    assert q2.hol == q.hol


def test_slit_pair_is_genus_two():
    q = slit_pair()
    assert q.genus == 2
    assert q.cone_angles() == pytest.approx([4 * math.pi, 4 * math.pi])


def test_areas():
    assert area(square_torus()) == 1
    assert area(slit_pair(normalize=False)) == 2
    q = apply_matrix(slit_pair(), Mat2.u(F(7, 3)))
    assert area(q) == 1


def test_normalize_area():
    q2 = slit_pair(normalize=False)
    q1 = normalize_area(q2)
    assert q1.area() == 1
    s = QuadraticNumber(0, F(1, 2), 2)  # 1/sqrt2
    assert all(a[0] * s == b[0] and a[1] * s == b[1] for a, b in zip(q2.hol, q1.hol))
    assert normalize_area(q1).hol == q1.hol


def test_flip_square_diagonal():
    q = square_torus()
    q2, tr = flip_edge(q, 2)
    new = q2.hol[2]
    assert new in ((F(-1), F(1)), (F(1), F(-1)))
    assert q2.area() == 1
    # dy transported: the new diagonal gets the sum of the y-parts it replaces
    dy = tr.cochain(q.hol_y())
    assert dy.values == q2.hol_y().values


def test_flip_twice_restores():
    q = square_torus()
    q2, t1 = flip_edge(q, 2)
    q3, t2 = flip_edge(q2, 2)
    # two flips turn the diagonal half a turn: same geometry, its two ids exchanged
    assert swap_edge_ids(q3, 2).hol == q.hol
    beta = q.hol_x() + q.hol_y().scale(3)
    moved = list(t1.then(t2).cochain(beta).values)
    moved[2], moved[3] = moved[3], moved[2]
    assert moved == list(beta.values)


def test_nonconvex_flip_rejected():
    q = slit_pair(((1, 0), (0, 1)), (F(1, 2), F(0)), normalize=False)
    bad = [e for e in q.tri.edge_reps() if not flip_is_convex(q, e)]
    assert bad
    with pytest.raises(NonConvexFlip):
        flip_edge(q, bad[0])


def lattice_oracle(u, v, L):
    """Primitive lattice vectors of length <= L by brute force."""
    out = set()
    uu, vv = (float(u[0]), float(u[1])), (float(v[0]), float(v[1]))
    det = abs(uu[0] * vv[1] - uu[1] * vv[0])
    n = int(L * max(math.hypot(*uu), math.hypot(*vv)) / det) + 3
    for i in range(-n, n + 1):
        for j in range(-n, n + 1):
            if math.gcd(i, j) != 1:
                continue
            x, y = i * uu[0] + j * vv[0], i * uu[1] + j * vv[1]
            if math.hypot(x, y) <= L + 1e-9:
                out.add((round(x, 9), round(y, 9)))
    return out


def test_square_torus_connections():
    sc = enumerate_saddle_connections(square_torus(), 1.5)
    hols = {(float(s.holonomy[0]), float(s.holonomy[1])) for s in sc}
    assert hols == {(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)}
    assert enumerate_saddle_connections(square_torus(), 0.5) == []


@given(st.integers(0, 10 ** 6), st.floats(1.0, 10.0))
def test_connections_match_lattice_oracle(seed, L):
    rng = random.Random(seed)
    while True:
        a, b, c, d = (F(rng.randint(-9, 9), 6) for _ in range(4))
        if a * d - b * c >= F(1, 2):
            break
    q = torus_from_lattice((a, b), (c, d))
    sc = enumerate_saddle_connections(q, L)
    got = {(round(float(s.holonomy[0]), 9), round(float(s.holonomy[1]), 9)) for s in sc}
    assert got == lattice_oracle((a, b), (c, d), L)
    for s in sc:
        assert s.length == pytest.approx(math.hypot(*map(float, s.holonomy)))
        assert q.hol_of_chain(s.chain) == s.holonomy


def test_horizontal_filter_finds_slit():
    H = F(2, 5)
    q = slit_pair(((1, 0), (F(1, 3), 1)), (H, F(0)), normalize=False)
    sc = enumerate_saddle_connections(q, 1.0, HORIZONTAL)
    slits = [s for s in sc if s.holonomy == (H, 0) and s.start != s.end]
    assert len(slits) == 2


def _det(M):
    M = [[F(x) for x in r] for r in M]
    n, det = len(M), F(1)
    for i in range(n):
        p = next((r for r in range(i, n) if M[r][i] != 0), None)
        if p is None:
            return 0
        if p != i:
            M[i], M[p] = M[p], M[i]
            det = -det
        det *= M[i][i]
        for r in range(i + 1, n):
            f = M[r][i] / M[i][i]
            M[r] = [x - f * y for x, y in zip(M[r], M[i])]
    return det


def test_torus_homology():
    hb = homology_basis(square_torus())
    assert hb.intersection_matrix == [[0, 1], [-1, 0]]
    assert hb.relative_arcs == []


def test_slit_pair_homology():
    q = slit_pair()
    hb = homology_basis(q)
    assert len(hb.absolute_cycles) == 4
    assert hb.intersection_matrix == standard_symplectic(2)
    assert len(hb.relative_arcs) == 1
    # the unreduced matrix is antisymmetric and unimodular
    Q = hb.raw_intersection_matrix
    assert all(Q[i][j] == -Q[j][i] for i in range(4) for j in range(4))
    assert _det(Q) == 1


@given(st.integers(0, 10 ** 6), st.integers(1, 5))
def test_flips_preserve_area_and_pairings(seed, n):
    rng = random.Random(seed)
    q, _ = random_slit_pair(rng)
    hb = homology_basis(q)
    beta = q.hol_y()
    pairs = [beta.evaluate(c) for c in hb.absolute_cycles]
    hols = [q.hol_of_chain(c) for c in hb.absolute_cycles]
    A = q.area()
    chains = list(hb.absolute_cycles)
    for _ in range(n):
        e = rng.choice([e for e in q.tri.edge_reps() if flip_is_convex(q, e)])
        q, tr = flip_edge(q, e)
        beta = tr.cochain(beta)
        chains = [tr.chain(c) for c in chains]
    assert q.area() == A
    assert beta.closure_residual(q.tri) == 0
    assert [beta.evaluate(c) for c in chains] == pairs
    assert [q.hol_of_chain(c) for c in chains] == hols


def test_closure_exact_and_float():
    q = slit_pair()
    assert q.hol_x().closure_residual(q.tri) == 0
    qf = q.as_float()
    assert qf.hol_x().closure_residual(qf.tri) < 1e-12
