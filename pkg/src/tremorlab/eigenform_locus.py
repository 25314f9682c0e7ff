"""Two tori glued along a slit, the swap involution, and checkerboards."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .cocycle_tremor import FoliationCocycle, _is_zero, signed_mass
from .errors import (
    AperiodicityUnverified,
    ColoringInconsistent,
    PeriodicHorizontal,
    RationalSlope,
    SearchExhausted,
    SlitThroughLatticePoint,
)
from .numbers import QuadraticNumber, exact_sqrt, is_exact
from .surface_core import (
    Cochain1,
    TranslationSurface,
    Triangulation,
    cross,
    enumerate_saddle_connections,
    vadd,
    vneg,
    vsub,
)

Vec2 = Tuple[object, object]


@dataclass(frozen=True)
class SlitTorusData:
    lattice: Tuple[Vec2, Vec2]
    slit: Vec2
    shears: Tuple[object, object] = (0, 0)
    normalize: bool = True

    def to_doc(self) -> dict:
        from .numbers import dump_scalar

        return {
            "lattice": [[dump_scalar(c) for c in v] for v in self.lattice],
            "slit": [dump_scalar(c) for c in self.slit],
            "shears": [dump_scalar(c) for c in self.shears],
            "normalize": self.normalize,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SlitTorusData":
        from .numbers import parse_scalar

        lat = tuple(tuple(parse_scalar(c) for c in v) for v in doc["lattice"])
        return cls(lat, tuple(parse_scalar(c) for c in doc["slit"]),
                   tuple(parse_scalar(c) for c in doc.get("shears", [[0, 1], [0, 1]])),
                   bool(doc.get("normalize", True)))


@dataclass(frozen=True)
class Involution:
    perm: Tuple[int, ...]

    def __call__(self, h: int) -> int:
        return self.perm[h]

    def compose(self, other: "Involution") -> "Involution":
        return Involution(tuple(self.perm[other.perm[h]] for h in range(len(self.perm))))

    def is_identity(self) -> bool:
        return all(h == p for h, p in enumerate(self.perm))

    def preserves_holonomy(self, q: TranslationSurface, tol: float = 1e-12) -> bool:
        for h, p in enumerate(self.perm):
            a, b = q.hol[h], q.hol[p]
            if abs(float(a[0] - b[0])) > tol or abs(float(a[1] - b[1])) > tol:
                return False
        return True

    def pullback(self, beta: Cochain1) -> Cochain1:
        return Cochain1([beta.values[self.perm[h]] for h in range(len(self.perm))])


# ---------------------------------------------------------------------------
# lattice helpers


def _coords(u, v, w):
    """Real coordinates (a, b) with w = a u + b v."""
    det = cross(u, v)
    return cross(w, v) / det, cross(u, w) / det


def _floor(x) -> int:
    if isinstance(x, QuadraticNumber):
        f = math.floor(float(x))
        # guard against float rounding near integers
        while QuadraticNumber(f + 1, 0, x.d) <= x:
            f += 1
        while QuadraticNumber(f, 0, x.d) > x:
            f -= 1
        return f
    return math.floor(x)


def _ceil(x) -> int:
    return -_floor(-x)


def _slit_hits_lattice(a, b) -> bool:
    """Does lambda * (a, b) hit Z^2 \\ {0} for some lambda in (0, 1]?"""
    if is_exact(a) and is_exact(b):
        if isinstance(a, QuadraticNumber) or isinstance(b, QuadraticNumber):
            # lambda a and lambda b integers with (a, b) not a rational direction
            ra = a if not isinstance(a, QuadraticNumber) else (a.a if a.b == 0 else None)
            rb = b if not isinstance(b, QuadraticNumber) else (b.a if b.b == 0 else None)
            if ra is None or rb is None:
                # irrational coordinate: only possible if the other is zero and the
                # irrational one has |value| >= 1 ... but lambda*irrational integer
                # needs lambda irrational too; check direction rationality
                if a == 0:
                    return abs(b) >= 1
                if b == 0:
                    return abs(a) >= 1
                ratio = a / b if not isinstance(a / b, float) else None
                if isinstance(ratio, QuadraticNumber) and ratio.b != 0:
                    return False
                if ratio is None:
                    return False
                r = Fraction(ratio.a if isinstance(ratio, QuadraticNumber) else ratio)
                # direction (p, q) primitive integer; first lattice point is at (p, q)
                p, qq = r.numerator, r.denominator
                return abs(b) >= qq if b != 0 else abs(a) >= abs(p)
            a, b = Fraction(ra), Fraction(rb)
        a, b = Fraction(a), Fraction(b)
        if a == 0 and b == 0:
            return True
        # smallest lambda making both integer: lambda = 1/g where (a,b) = g*(p,q)
        if a == 0:
            return abs(b) >= 1
        if b == 0:
            return abs(a) >= 1
        r = a / b
        p, qq = abs(r.numerator), r.denominator
        # primitive vector along (a, b) is (p, qq) up to sign; lattice hit iff |b| >= qq
        return abs(b) >= qq
    fa, fb = float(a), float(b)
    if abs(fa) < 1e-12 and abs(fb) < 1e-12:
        return True
    # search primitive integer vectors (p, q) parallel to (a, b) with |(p, q)| <= |(a, b)|
    n = math.hypot(fa, fb)
    bound = int(math.floor(n + 1e-12))
    for p in range(-bound, bound + 1):
        for qq in range(-bound, bound + 1):
            if (p or qq) and math.gcd(p, qq) == 1 and math.hypot(p, qq) <= n * (1 + 1e-12):
                if abs(p * fb - qq * fa) < 1e-12 * max(1.0, n) and p * fa + qq * fb > 0:
                    return True
    return False


def _fan_basis(u, v, w):
    """Lattice basis (e1, e2) with w = s e1 + t e2 and s, t in (0, 1)."""
    a, b = _coords(u, v, w)
    best = None
    H = 1
    while best is None:
        for m in range(-H, H + 1):
            for n in range(-H, H + 1):
                if max(abs(m), abs(n)) != H and H > 1:
                    continue
                if (m, n) == (0, 0) or math.gcd(m, n) != 1:
                    continue
                val = m * b - n * a  # det(e1, w) / covolume
                if val > 0 and val < 1:
                    best = (m, n, val)
                    break
            if best:
                break
        H += 1
        if H > 1000:
            raise SlitThroughLatticePoint("no fan basis found for the slit")
    m, n, tcoef = best
    # e2 = p u + r v with m r - n p = 1
    g, x, y = _egcd(m, n)  # m x + n y = 1
    p, r = -y, x
    e1 = vadd((m * u[0], m * u[1]), (n * v[0], n * v[1]))
    e2 = vadd((p * u[0], p * u[1]), (r * v[0], r * v[1]))
    # w = s e1 + t e2
    s = cross(w, e2) / cross(e1, e2)
    k = _ceil(s / tcoef) - 1
    e2 = vadd(e2, (k * e1[0], k * e1[1]))
    return e1, e2


def _egcd(a, b):
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, x, y = _egcd(b, a % b)
    return g, y, x - (a // b) * y


# ---------------------------------------------------------------------------
# slit construction


SLIT_A, SLIT_B = "A", "B"


def _shear(v, s):
    return (v[0] + s * v[1], v[1])


def slit_construct(data: SlitTorusData) -> Tuple[TranslationSurface, Involution]:
    """Two copies of R^2/lattice cut along the slit from 0 to w and cross-glued.

    Each torus is fanned from w into four triangles over a fundamental
    parallelogram containing w, so the slit is an edge.  Half-edges 0..11
    belong to torus A, 12..23 to torus B; the involution swaps them.
    """
    u, v = data.lattice
    if cross(u, v) < 0:
        u, v = v, u
    w = data.slit
    a, b = _coords(u, v, w)
    if _slit_hits_lattice(a, b):
        raise SlitThroughLatticePoint("slit passes through a lattice point")
    s1, s2 = data.shears
    if (s1 != 0 or s2 != 0) and not _is_zero(w[1]):
        raise ValueError("shears need a horizontal slit")
    e1, e2 = _fan_basis(u, v, w)
    P1, P2, P3 = e1, vadd(e1, e2), e2
    one = [
        P1, vsub(w, P1), vneg(w),                 # T0: 0 -> e1 -> w
        e2, vsub(w, P2), vsub(P1, w),             # T1: e1 -> e1+e2 -> w
        vneg(e1), vsub(w, P3), vsub(P2, w),       # T2: e1+e2 -> e2 -> w
        vneg(e2), w, vsub(P3, w),                 # T3: e2 -> 0 -> w
    ]
    inner = {1: 5, 5: 1, 4: 8, 8: 4, 7: 11, 11: 7, 0: 6, 6: 0, 3: 9, 9: 3}
    gluing = [0] * 24
    for off in (0, 12):
        for h, g in inner.items():
            gluing[h + off] = g + off
    # slit sides: 10 (0 -> w) and 2 (w -> 0) are cross-glued between copies
    gluing[10], gluing[14] = 14, 10
    gluing[2], gluing[22] = 22, 2
    triangles = [(3 * i + off, 3 * i + 1 + off, 3 * i + 2 + off) for off in (0, 12) for i in range(4)]
    hol = [_shear(x, s1) for x in one] + [_shear(x, s2) for x in one]
    scale = None
    if data.normalize:
        total = 2 * cross(u, v)
        r = exact_sqrt(total) if is_exact(total) else math.sqrt(float(total))
        scale = 1 / r if not isinstance(r, float) else 1.0 / r
        try:
            hol = [(scale * x[0], scale * x[1]) for x in hol]
        except ValueError:
            scale = 1.0 / float(r)
            hol = [(scale * float(x[0]), scale * float(x[1])) for x in hol]
    tri = Triangulation(triangles, gluing, {"p0": (1, 0), "p1": (1, 2)})
    slit_vec = w if scale is None else (scale * w[0], scale * w[1])
    meta = {"regions": {SLIT_A: (0, 1, 2, 3), SLIT_B: (4, 5, 6, 7)},
            "slit": slit_vec, "slit_edges": (10, 14), "data": data}
    q = TranslationSurface(tri, hol, meta=meta)
    inv = Involution(tuple((h + 12) % 24 for h in range(24)))
    return q, inv


def slit_pair(lattice=((1, 0), (0, 1)), slit=(Fraction(1, 2), Fraction(3, 10)), shears=(0, 0),
              normalize: bool = True) -> TranslationSurface:
    lat = tuple(tuple(Fraction(c) if isinstance(c, int) else c for c in v) for v in lattice)
    return slit_construct(SlitTorusData(lat, slit, shears, normalize))[0]


def project_to_torus(q: TranslationSurface, inv: Involution) -> TranslationSurface:
    """Quotient by the involution: one triangle from each swapped pair."""
    tri = q.tri
    reps = []
    seen = set()
    for ti, t in enumerate(tri.triangles):
        if ti in seen:
            continue
        tj = tri.tri_of[inv(t[0])]
        seen.update((ti, tj))
        reps.append(ti)
    keep = [h for ti in reps for h in tri.triangles[ti]]
    idx = {h: i for i, h in enumerate(keep)}
    gluing = []
    for h in keep:
        g = tri.twin(h)
        gluing.append(idx[g] if g in idx else idx[inv(g)])
    triangles = [tuple(idx[h] for h in tri.triangles[ti]) for ti in reps]
    first = idx.get(tri.label_half_edge[tri.labels[0]])
    if first is None:
        first = idx[inv(tri.label_half_edge[tri.labels[0]])]
    probe = Triangulation(triangles, gluing, {"x": (0, first)} if False else None)
    labels = {"p0": (0, first)}
    k = 1
    for orb in probe.orbits:
        if first not in orb:
            labels[f"p{k}"] = (0, orb[0])
            k += 1
    qt = TranslationSurface(Triangulation(triangles, gluing, labels), [q.hol[h] for h in keep])
    return qt


def torus_lattice(qt: TranslationSurface) -> Tuple[Vec2, Vec2]:
    from .surface_core import homology_basis

    hb = homology_basis(qt)
    return qt.hol_of_chain(hb.a(0)), qt.hol_of_chain(hb.b(0))


def same_lattice(b1, b2, tol: float = 1e-9) -> bool:
    """Do two bases span the same planar lattice?"""
    (u1, v1), (u2, v2) = b1, b2
    det = float(cross(u1, v1))
    if abs(abs(det) - abs(float(cross(u2, v2)))) > tol * max(1.0, abs(det)):
        return False
    for w in (u2, v2):
        a, b = _coords(tuple(map(float, u1)), tuple(map(float, v1)), tuple(map(float, w)))
        if abs(a - round(a)) > tol or abs(b - round(b)) > tol:
            return False
    return True


def p_projections(q: TranslationSurface, inv: Involution, beta) -> Tuple[Cochain1, Cochain1]:
    b = beta.cochain if isinstance(beta, FoliationCocycle) else beta
    ib = inv.pullback(b)
    half = Fraction(1, 2) if all(is_exact(x) for x in b.values) else 0.5
    plus = Cochain1([half * (x + y) for x, y in zip(b.values, ib.values)])
    minus = Cochain1([half * (x - y) for x, y in zip(b.values, ib.values)])
    return plus, minus


@dataclass
class AperiodicityCertificate:
    cutoff: float
    horizontal_connections: int
    slit_only: bool


def aperiodicity_certificate(q: TranslationSurface, factor: float = 20.0) -> AperiodicityCertificate:
    cutoff = factor * q.diameter_estimate()
    hs = enumerate_saddle_connections(q, cutoff, direction_filter="horizontal")
    slit = q.meta.get("slit")
    slit_only = True
    for sc in hs:
        if slit is None:
            slit_only = False
            break
        hx = float(sc.holonomy[0])
        if abs(abs(hx) - abs(float(slit[0]))) > 1e-9 or abs(float(sc.holonomy[1])) > 1e-9:
            slit_only = False
            break
    if not slit_only:
        raise AperiodicityUnverified(
            f"horizontal saddle connection other than the slit within {cutoff:.3g}")
    return AperiodicityCertificate(cutoff, len(hs), True)


def balanced_is_antiinvariant_check(q: TranslationSurface, inv: Involution, beta) -> bool:
    """Is 'L(beta) = 0' equivalent to 'beta is anti-invariant' for this beta?"""
    aperiodicity_certificate(q)
    L = signed_mass(q, beta)
    b = beta.cochain if isinstance(beta, FoliationCocycle) else beta
    _, minus = p_projections(q, inv, b)
    anti = minus.max_abs_diff(b) <= 1e-12
    return _is_zero(L) == anti


def _horizontally_periodic(u, v) -> bool:
    if _is_zero(u[1]) or _is_zero(v[1]):
        return True
    r = u[1] / v[1]
    if is_exact(r):
        return not (isinstance(r, QuadraticNumber) and r.b != 0)
    f = Fraction(float(r)).limit_denominator(10 ** 6)
    return abs(float(r) - float(f)) < 1e-12 * max(1.0, abs(float(r)))


def nonergodic_family(lattice, slit, a, normalize: bool = True) -> TranslationSurface:
    """Slit pair with shears (0, 2a): the second torus sheared by u_{2a}."""
    u, v = lattice
    if not _is_zero(slit[1]):
        raise ValueError("slit must be horizontal")
    if _horizontally_periodic(u, v):
        raise PeriodicHorizontal("lattice contains a horizontal vector")
    return slit_construct(SlitTorusData(tuple(lattice), slit, (0 * a, 2 * a), normalize))[0]


# ---------------------------------------------------------------------------
# checkerboards


@dataclass
class CheckerboardResult:
    m: int
    n: int
    k: int
    sigma2: Tuple[float, float]
    imbalance: float
    theta: float
    x: float
    alpha: float
    c: float
    eta: float

    @property
    def mn(self) -> Tuple[int, int]:
        return (self.m, self.n)

    def to_doc(self) -> dict:
        return asdict(self)


def _check_irrational(alpha) -> float:
    if isinstance(alpha, (int, Fraction)) or (isinstance(alpha, QuadraticNumber) and alpha.b == 0):
        raise RationalSlope(f"slope {alpha} is rational")
    a = float(alpha)
    f = Fraction(a).limit_denominator(10 ** 6)
    if abs(a - float(f)) < 1e-14 * max(1.0, abs(a)):
        raise RationalSlope(f"slope {a} looks rational ({f})")
    return a


def checkerboard_search(x: float, alpha, c: float, eta: float, H: Optional[float] = None,
                        search_bound: int = 1000, enforce_direction: bool = False
                        ) -> CheckerboardResult:
    """Find coprime (m, n) with x(m alpha - n) within eta of 1 - c, then an even k.

    Candidates are scanned by height max(|m|, |n|), then |m|, m, n.  With a
    target length H the even k puts |k(m, n) + (x, x alpha)| in (H, (1+eta)H);
    without one, k = 2.
    """
    a = _check_irrational(alpha)
    if not 0 < c < 1:
        raise ValueError("target imbalance must lie in (0, 1)")
    if not x > 0:
        raise ValueError("x must be positive")
    target = 1 - c
    v1 = (x, x * a)
    for height in range(1, search_bound + 1):
        cands = []
        for m in range(-height, height + 1):
            for n in range(-height, height + 1):
                if max(abs(m), abs(n)) != height or math.gcd(m, n) != 1:
                    continue
                cands.append((abs(m), m, n))
        cands.sort(key=lambda z: (z[0], -z[1], z[2]))
        for _, m, n in cands:
            val = x * (m * a - n)
            if abs(val - target) >= eta:
                continue
            k = _choose_k(m, n, v1, H, eta)
            if k is None:
                continue
            s2 = (k * m + v1[0], k * n + v1[1])
            theta = math.atan2(s2[1], s2[0]) - math.atan2(v1[1], v1[0])
            theta = (theta + math.pi) % (2 * math.pi) - math.pi
            if enforce_direction and abs(theta) >= eta:
                continue
            return CheckerboardResult(m, n, k, s2, 1 - val, theta, x, a, c, eta)
    raise SearchExhausted(f"no (m, n) with height <= {search_bound}")


def _choose_k(m, n, v1, H, eta) -> Optional[int]:
    if H is None:
        return 2
    k = 2
    while True:
        L = math.hypot(k * m + v1[0], k * n + v1[1])
        if L > H:
            return k if L < (1 + eta) * H else None
        k += 2
        if k > 10 ** 7:
            return None


def strip_area(m: int, n: int, k: int, x: float, alpha: float) -> float:
    return abs((m + x / k) * (x * alpha / k) - (x / k) * (n + x * alpha / k))


def _unfold(P, V) -> List[Tuple[Tuple[float, float], Tuple[float, float]]]:
    """Pieces of the segment P -> P+V on R^2/Z^2, each inside [0,1]^2."""
    ts = {0.0, 1.0}
    for axis in (0, 1):
        a, d = P[axis], V[axis]
        if d == 0:
            continue
        lo, hi = sorted((a, a + d))
        for z in range(math.ceil(lo), math.floor(hi) + 1):
            t = (z - a) / d
            if 0 < t < 1:
                ts.add(t)
    ts = sorted(ts)
    out = []
    for t0, t1 in zip(ts, ts[1:]):
        if t1 - t0 < 1e-15:
            continue
        tm = (t0 + t1) / 2
        cx = math.floor(P[0] + tm * V[0])
        cy = math.floor(P[1] + tm * V[1])
        p0 = (P[0] + t0 * V[0] - cx, P[1] + t0 * V[1] - cy)
        p1 = (P[0] + t1 * V[0] - cx, P[1] + t1 * V[1] - cy)
        out.append((_snap_unit(p0), _snap_unit(p1)))
    return out


def _snap_unit(p, tol: float = 1e-9):
    """Put coordinates that round-off pushed off the square's sides back on them."""
    return tuple(0.0 if abs(c) < tol else 1.0 if abs(c - 1) < tol else c for c in p)


def _seg_cross(p, q, a, b) -> bool:
    def orient(o, s, t):
        return (s[0] - o[0]) * (t[1] - o[1]) - (s[1] - o[1]) * (t[0] - o[0])

    d1, d2 = orient(a, b, p), orient(a, b, q)
    d3, d4 = orient(p, q, a), orient(p, q, b)
    return (d1 > 0) != (d2 > 0) and (d3 > 0) != (d4 > 0)


@dataclass
class CheckerboardReport:
    homologous_mod2: bool
    coloring_consistent: bool
    area_difference: float
    formula_imbalance: float
    area_matches: bool
    strip_area: float
    face_areas: List[float]
    strips_match: bool

    @property
    def passed(self) -> bool:
        return self.homologous_mod2 and self.coloring_consistent and self.area_matches \
            and self.strips_match

    def raise_if_inconsistent(self):
        if not self.coloring_consistent:
            raise ColoringInconsistent("complement of the two slits has no proper 2-coloring")

    def to_doc(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def checkerboard_verify(result: CheckerboardResult, tol: float = 1e-8) -> CheckerboardReport:
    """Polygonize the unit torus cut along both slits and check the coloring.

    (a) the closed curve sigma1 - sigma2 = -k(m, n) vanishes mod 2;
    (b) crossing parity from a base face gives a coloring that agrees across
        the identified sides of the square;
    (c) the color-area difference equals 1 - x(m alpha - n);
    (d) the torus faces are k - 1 strips of the closed-form strip area plus
        one complementary face.
    """
    from shapely.geometry import LineString, Point
    from shapely.ops import polygonize, unary_union
    from shapely.strtree import STRtree

    m, n, k, x, a = result.m, result.n, result.k, result.x, result.alpha
    v1 = (x, x * a)
    v2 = (k * m + x, k * n + x * a)
    p1, p2 = _unfold((0.0, 0.0), v1), _unfold((0.0, 0.0), v2)
    # both slits end at the same torus point; make the float end points agree
    end = p1[-1][1]
    if math.dist(p2[-1][1], end) > 1e-7:
        raise ColoringInconsistent("slit end points do not coincide on the torus")
    p2[-1] = (p2[-1][0], end)
    pieces = p1 + p2
    border = [((0, 0), (1, 0)), ((1, 0), (1, 1)), ((1, 1), (0, 1)), ((0, 1), (0, 0))]
    lines = [LineString(p) for p in pieces] + [LineString(p) for p in border]
    faces = list(polygonize(unary_union(lines)))
    sigma = unary_union([LineString(p) for p in pieces])

    reps = [f.representative_point() for f in faces]
    base = (reps[0].x, reps[0].y)

    def parity(pt) -> int:
        c = 0
        for p0, p1 in pieces:
            if _seg_cross(base, pt, p0, p1):
                c += 1
        return c % 2

    color = [parity((r.x, r.y)) for r in reps]

    tree = STRtree(faces)

    def face_at(pt) -> Optional[int]:
        P = Point(pt)
        for i in tree.query(P):
            if faces[int(i)].contains(P):
                return int(i)
        return None

    # glue faces across the square's sides
    parent = list(range(len(faces)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    consistent = True
    eps = 1e-9
    for i, f in enumerate(faces):
        coords = list(f.exterior.coords)
        for p0, p1 in zip(coords, coords[1:]):
            mid = ((p0[0] + p1[0]) / 2, (p0[1] + p1[1]) / 2)
            if sigma.distance(Point(mid)) < 1e-10:
                continue
            if abs(p0[0]) < 1e-12 and abs(p1[0]) < 1e-12:
                other = (1 - eps, mid[1])
            elif abs(p0[0] - 1) < 1e-12 and abs(p1[0] - 1) < 1e-12:
                other = (eps, mid[1])
            elif abs(p0[1]) < 1e-12 and abs(p1[1]) < 1e-12:
                other = (mid[0], 1 - eps)
            elif abs(p0[1] - 1) < 1e-12 and abs(p1[1] - 1) < 1e-12:
                other = (mid[0], eps)
            else:
                continue
            j = face_at(other)
            if j is None:
                continue
            if color[i] != color[j]:
                consistent = False
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj

    torus_faces: Dict[int, float] = {}
    torus_color: Dict[int, int] = {}
    for i, f in enumerate(faces):
        r = find(i)
        torus_faces[r] = torus_faces.get(r, 0.0) + f.area
        torus_color[r] = color[i]
    areas = sorted(torus_faces.values())
    black = sum(f.area for f, c in zip(faces, color) if c == 1)
    white = sum(f.area for f, c in zip(faces, color) if c == 0)
    diff = abs(black - white)
    formula = 1 - x * (m * a - n)
    A = strip_area(m, n, k, x, a)
    strips_ok = (len(areas) == k
                 and all(abs(ar - A) < tol for ar in areas[:-1] if k > 1)
                 and abs(areas[-1] - (1 - (k - 1) * A)) < tol) if consistent else False
    if consistent and len(areas) == k and k > 1 and A > 1 - (k - 1) * A:
        # the complementary face may be the smallest one
        small = sorted(areas)
        strips_ok = sum(abs(ar - A) < tol for ar in small) >= k - 1 and \
            any(abs(ar - (1 - (k - 1) * A)) < tol for ar in small)
    return CheckerboardReport(
        homologous_mod2=(k * m) % 2 == 0 and (k * n) % 2 == 0,
        coloring_consistent=consistent,
        area_difference=diff,
        formula_imbalance=formula,
        area_matches=consistent and abs(diff - abs(formula)) < tol,
        strip_area=A,
        face_areas=areas,
        strips_match=strips_ok,
    )
