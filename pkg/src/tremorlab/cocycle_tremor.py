"""Foliation cocycles with Hahn structure, signed mass, and tremors."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from .errors import (
    AtomicCocycle,
    DegenerateBeyondRepair,
    NonConvexFlip,
    NonHorizontalBoundary,
)
from .numbers import TOL, dump_scalar, is_exact, parse_scalar
from .surface_core import (
    Cochain1,
    TranslationSurface,
    Transport,
    cross,
    flip_edge,
    homology_basis,
)


@dataclass(frozen=True)
class FoliationCocycle:
    """Class plus - minus of two nonnegative transverse cochains.

    Only the constructors in this module produce these; an arbitrary cochain
    is not accepted as a tremor direction.
    """

    plus: Cochain1
    minus: Cochain1
    provenance: Tuple = ("canonical_dy",)
    non_atomic: bool = True

    @property
    def cochain(self) -> Cochain1:
        return self.plus - self.minus

    @property
    def values(self):
        return self.cochain.values

    def scale(self, c) -> "FoliationCocycle":
        if c >= 0:
            return FoliationCocycle(self.plus.scale(c), self.minus.scale(c),
                                    ("combination", ((c, self.provenance),)), self.non_atomic)
        return FoliationCocycle(self.minus.scale(-c), self.plus.scale(-c),
                                ("combination", ((c, self.provenance),)), self.non_atomic)

    def __rmul__(self, c):
        return self.scale(c)

    def __add__(self, other: "FoliationCocycle") -> "FoliationCocycle":
        return FoliationCocycle(self.plus + other.plus, self.minus + other.minus,
                                ("combination", ((1, self.provenance), (1, other.provenance))),
                                self.non_atomic and other.non_atomic)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def transported(self, transport: Transport) -> "FoliationCocycle":
        return FoliationCocycle(transport.cochain(self.plus), transport.cochain(self.minus),
                                self.provenance, self.non_atomic)

    def to_doc(self) -> dict:
        return {
            "provenance": _prov_doc(self.provenance),
            "non_atomic": self.non_atomic,
            "plus": [dump_scalar(v) for v in self.plus.values],
            "minus": [dump_scalar(v) for v in self.minus.values],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "FoliationCocycle":
        return cls(Cochain1([parse_scalar(v) for v in doc["plus"]]),
                   Cochain1([parse_scalar(v) for v in doc["minus"]]),
                   tuple(doc.get("provenance", ("imported",))) if isinstance(
                       doc.get("provenance"), list) else (str(doc.get("provenance")),),
                   bool(doc.get("non_atomic", False)))


def _prov_doc(p):
    if isinstance(p, tuple):
        return [_prov_doc(x) for x in p]
    if isinstance(p, (int, float, str)) or p is None:
        return p
    return str(p)


@dataclass
class MassReport:
    L: object
    L_abs: object
    balanced: bool


# ---------------------------------------------------------------------------
# constructors


def canonical_dy(q: TranslationSurface) -> FoliationCocycle:
    n = q.tri.n_half
    return FoliationCocycle(q.hol_y(), Cochain1.zeros(n), ("canonical_dy",), True)


def _region_triangles(q: TranslationSurface, region) -> frozenset:
    if isinstance(region, str):
        regions = q.meta.get("regions", {})
        if region not in regions:
            raise KeyError(f"surface has no region named {region!r}")
        return frozenset(regions[region])
    return frozenset(int(t) for t in region)


def _is_zero(x) -> bool:
    if is_exact(x):
        return x == 0
    return abs(float(x)) <= TOL


def restriction_dy(q: TranslationSurface, region) -> FoliationCocycle:
    """dy restricted to a union of triangles.

    Edges separating the region from its complement must be horizontal.
    """
    tris = _region_triangles(q, region)
    tri = q.tri
    vals = []
    for h in range(tri.n_half):
        inside = tri.tri_of[h] in tris
        other = tri.tri_of[tri.twin(h)] in tris
        y = q.hol[h][1]
        if inside != other:
            if not _is_zero(y):
                raise NonHorizontalBoundary(f"region boundary edge {h} is not horizontal")
            vals.append(0 * y)
        else:
            vals.append(y if inside else 0 * y)
    name = region if isinstance(region, str) else tuple(sorted(tris))
    return FoliationCocycle(Cochain1(vals), Cochain1.zeros(tri.n_half),
                            ("region_restriction", name), True)


def empirical_cocycle(beta: Cochain1, data=None) -> FoliationCocycle:
    """Wrap a cochain from loop data; flagged as possibly atomic."""
    return FoliationCocycle(beta, Cochain1.zeros(len(beta)), ("empirical", data), False)


def triangle_densities(q: TranslationSurface, beta) -> Optional[List]:
    """Per-triangle density of a cochain relative to dy, or None.

    Returns None when the cochain is not a constant multiple of dy on some
    triangle (for example after flips mixed two regions).
    """
    vals = beta.values if not isinstance(beta, Cochain1) else beta.values
    out = []
    for t in q.tri.triangles:
        dens = None
        for h in t:
            y = q.hol[h][1]
            if _is_zero(y):
                continue
            dens = vals[h] / y
            break
        if dens is None:
            return None
        for h in t:
            want = dens * q.hol[h][1]
            if is_exact(want) and is_exact(vals[h]):
                if want != vals[h]:
                    return None
            elif abs(float(want - vals[h])) > 1e-9 * (1 + abs(float(vals[h]))):
                return None
        out.append(dens)
    return out


def _hahn_from_densities(q: TranslationSurface, dens) -> Tuple[Cochain1, Cochain1]:
    tri = q.tri
    plus, minus = [], []
    for h in range(tri.n_half):
        d = dens[tri.tri_of[h]]
        y = q.hol[h][1]
        if d >= 0:
            plus.append(d * y)
            minus.append(0 * y)
        else:
            plus.append(0 * y)
            minus.append(-d * y)
    return Cochain1(plus), Cochain1(minus)


def combination(q: TranslationSurface, terms: Sequence[Tuple[object, FoliationCocycle]]
                ) -> FoliationCocycle:
    """Linear combination with a minimal Hahn split where one is available.

    If the combined class is a piecewise-constant multiple of dy on the
    current triangulation, plus and minus are the positive and negative parts
    of that density; otherwise they are the formal combination of the parts.
    """
    n = q.tri.n_half
    acc = FoliationCocycle(Cochain1.zeros(n), Cochain1.zeros(n), (), True)
    for c, b in terms:
        acc = acc + b.scale(c)
    prov = ("combination", tuple((c, b.provenance) for c, b in terms))
    dens = triangle_densities(q, acc.cochain)
    if dens is not None and all(b.non_atomic for _, b in terms):
        plus, minus = _hahn_from_densities(q, dens)
        return FoliationCocycle(plus, minus, prov, True)
    return FoliationCocycle(acc.plus, acc.minus, prov, acc.non_atomic)


# ---------------------------------------------------------------------------
# mass


def _as_cochain(beta) -> Cochain1:
    if isinstance(beta, Cochain1):
        return beta
    return beta.cochain


def signed_mass(q: TranslationSurface, beta):
    """Cup product of hol_x with beta on the fundamental class.

    Evaluated by the bilinear relations over a symplectic basis:
    sum_i hol_x(a_i) beta(b_i) - hol_x(b_i) beta(a_i).
    """
    b = _as_cochain(beta)
    hb = homology_basis(q)
    hx = q.hol_x()
    total = 0
    for i in range(hb.genus):
        ai, bi = hb.a(i), hb.b(i)
        total = total + hx.evaluate(ai) * b.evaluate(bi) - hx.evaluate(bi) * b.evaluate(ai)
    return total


def wedge_mass(q: TranslationSurface, beta):
    """Same pairing as a sum of per-triangle wedge products (test oracle)."""
    b = _as_cochain(beta)
    total = 0
    for t in q.tri.triangles:
        e0, e1 = t[0], t[1]
        total = total + (q.hol[e0][0] * b.values[e1] - q.hol[e1][0] * b.values[e0]) / 2
    return total


def total_variation(q: TranslationSurface, beta: FoliationCocycle) -> MassReport:
    Lp = signed_mass(q, beta.plus)
    Lm = signed_mass(q, beta.minus)
    L = Lp - Lm
    return MassReport(L, Lp + Lm, _is_zero(L))


def balance(q: TranslationSurface, beta: FoliationCocycle) -> Tuple[object, FoliationCocycle]:
    """Split off the horocycle part: beta = s * dy + beta0 with L(beta0) = 0."""
    s = signed_mass(q, beta)
    if _is_zero(s):
        return s, beta
    return s, combination(q, [(1, beta), (-s, canonical_dy(q))])


# ---------------------------------------------------------------------------
# tremor


def _shift(q: TranslationSurface, b: Sequence, s) -> TranslationSurface:
    hol = [(v[0] + s * bv, v[1]) for v, bv in zip(q.hol, b)]
    return TranslationSurface(q.tri, hol, meta=q.meta, validate=False)


def _orient_rate(q: TranslationSurface, b: Sequence, t):
    """Orientation cross(e0, e1) of triangle t at shift s is c0 + s * rate."""
    e0, e1 = t[0], t[1]
    c0 = cross(q.hol[e0], q.hol[e1])
    rate = b[e0] * q.hol[e1][1] - b[e1] * q.hol[e0][1]
    return c0, rate


def _first_degeneration(q: TranslationSurface, b):
    best, arg = None, None
    for ti, t in enumerate(q.tri.triangles):
        c0, rate = _orient_rate(q, b, t)
        if rate < 0:
            s = c0 / (-rate)
            if best is None or s < best:
                best, arg = s, ti
    return best, arg


def _positive_interval(c0, rate, lo, hi):
    """Sub-interval of (lo, hi) where c0 + s * rate > 0."""
    if rate == 0:
        return (lo, hi) if c0 > 0 else None
    root = -c0 / rate
    if rate > 0:
        lo = max(lo, root)
    else:
        hi = min(hi, root)
    return (lo, hi) if lo < hi else None


def _flip_window(q: TranslationSurface, b, e, lo, hi):
    tri = q.tri
    et = tri.twin(e)
    if tri.tri_of[e] == tri.tri_of[et]:
        return None
    e1, e2 = tri.next(e), tri.prev(e)
    f1, f2 = tri.next(et), tri.prev(et)
    win = (lo, hi)
    for a, c in ((e2, f1), (f2, e1)):
        c0 = cross(q.hol[a], q.hol[c])
        rate = b[a] * q.hol[c][1] - b[c] * q.hol[a][1]
        win = _positive_interval(c0, rate, win[0], win[1])
        if win is None:
            return None
    return win


def _edge_len2_at(q, b, h, s):
    x = q.hol[h][0] + s * b[h]
    y = q.hol[h][1]
    return float(x * x + y * y)


def tremor(q: TranslationSurface, beta: FoliationCocycle, t=1, max_flips: int = 10000,
           max_depth: int = 40) -> Tuple[TranslationSurface, Transport]:
    """Add t * beta to the horizontal holonomy, keeping vertical holonomy.

    Triangle orientations are linear in the parameter, so the first
    degeneration time is computed directly.  Before it, the longest side of
    the collapsing triangle is flipped at a parameter where both replacement
    triangles are positive, ``beta`` is transported, and the walk continues.
    """
    if not isinstance(beta, FoliationCocycle):
        raise TypeError("tremor needs a FoliationCocycle")
    if not beta.non_atomic:
        raise AtomicCocycle("cocycle may carry atoms; tremor refused")
    if t == 0:
        return q, Transport()
    sign = 1 if t > 0 else -1
    b = list(beta.cochain.values)
    if sign < 0:
        b = [-v for v in b]
    remaining = abs(t)
    cur = q
    transport = Transport()
    flips = 0
    event_flips = 0
    last_event = None
    while True:
        s_star, ti = _first_degeneration(cur, b)
        if s_star is None or s_star > remaining:
            out = _shift(cur, b, remaining)
            out.validate()
            return out, transport
        if last_event is not None and s_star == 0:
            raise DegenerateBeyondRepair("triangle collapses at the current parameter")
        tri = cur.tri
        edges = sorted(tri.triangles[ti], key=lambda h: -_edge_len2_at(cur, b, h, s_star))
        done = False
        for e in edges:
            win = _flip_window(cur, b, e, 0 * s_star, s_star)
            if win is None:
                continue
            s_flip = (win[0] + win[1]) / 2
            moved = _shift(cur, b, s_flip)
            try:
                cur2, tr = flip_edge(moved, e)
            except NonConvexFlip:
                continue
            cur = cur2
            b = list(tr.cochain(Cochain1(b)).values)
            transport = transport.then(tr)
            remaining = remaining - s_flip
            flips += 1
            done = True
            break
        if not done:
            raise DegenerateBeyondRepair(
                f"no convex flip repairs triangle {ti} before it collapses")
        event_flips = event_flips + 1 if last_event == ti else 1
        last_event = ti
        if event_flips > max_depth or flips > max_flips:
            raise DegenerateBeyondRepair("flip budget exhausted")


# ---------------------------------------------------------------------------
# absolute continuity


def rn_bound_estimate(q: TranslationSurface, beta: FoliationCocycle, n: int = 200,
                      seed: int = 0, max_len: Optional[float] = None) -> float:
    """Largest observed |nu(arc)| / dy(arc) over random vertical arcs.

    The cocycle must be a piecewise-constant multiple of dy on the current
    triangulation (region restrictions, dy and their combinations).
    """
    from .foliation_flow import vertical_arc_pieces

    dens = triangle_densities(q, beta.cochain)
    if dens is None:
        raise ValueError("cocycle is not region-based on this triangulation")
    rng = random.Random(seed)
    areas = [float(q.triangle_area(i)) for i in range(len(q.tri.triangles))]
    total = sum(areas)
    L = max_len if max_len is not None else q.diameter_estimate()
    best = 0.0
    for _ in range(n):
        r = rng.random() * total
        ti = 0
        while r > areas[ti] and ti < len(areas) - 1:
            r -= areas[ti]
            ti += 1
        u, v = rng.random(), rng.random()
        if u + v > 1:
            u, v = 1 - u, 1 - v
        V = q.triangle_vertices(ti)
        p = (u * V[1][0] + v * V[2][0], u * V[1][1] + v * V[2][1])
        length = rng.uniform(0.05, 1.0) * L
        pieces = vertical_arc_pieces(q, ti, p, length, direction=rng.choice((1, -1)))
        num = sum(float(dens[pt]) * (s1 - s0) for pt, s0, s1 in pieces)
        den = sum(s1 - s0 for _, s0, s1 in pieces)
        if den > 0:
            best = max(best, abs(num) / den)
    return best
