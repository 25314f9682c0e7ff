"""Straight-line flow, first-return maps to vertical arcs, and loop cones.

Tracing always runs in binary floats.  A trajectory is followed triangle by
triangle; a point is a pair ``(triangle, (x, y))`` in that triangle's local
frame, whose first corner sits at the origin.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import networkx as nx

from .errors import (
    NonTransverseCrossing,
    NumericError,
    ProngHitsSingularity,
    StartAtSingularity,
    TrajectoryTerminated,
    UncoveredLeaf,
)
from .numbers import is_exact, sign
from .surface_core import Cochain1, Transport, TranslationSurface, cross, flip_edge, flip_is_convex

DELTA_HIT = 1e-10
PERIOD_TOL = 1e-9

Point = Tuple[int, Tuple[float, float]]


def _dir(theta: float) -> Tuple[float, float]:
    c, s = math.cos(theta), math.sin(theta)
    # keep axis directions exact
    if abs(c) < 1e-15:
        c = 0.0
    if abs(s) < 1e-15:
        s = 0.0
    return (c, s)


# ---------------------------------------------------------------------------
# tracing core


@dataclass
class _End:
    kind: str            # "ran" | "singularity" | "periodic" | "arc"
    time: float
    triangle: int
    point: Tuple[float, float]
    label: Optional[str] = None
    arc: Optional[int] = None
    s: Optional[float] = None


@dataclass(frozen=True)
class _Piece:
    arc: int
    x: float
    y_lo: float
    y_hi: float
    y_at0: float   # local y where the arc parameter equals s_base
    s_base: float
    orient: int    # +1 if s grows with y


def _corner_dirs(q: TranslationSurface, h: int):
    fh = q.float_hol
    return fh[h], (-fh[q.tri.prev(h)][0], -fh[q.tri.prev(h)][1])


def corners_in_direction(q: TranslationSurface, label: str, theta: float) -> List[Tuple[int, int]]:
    """Corners ``(triangle, position)`` at a singularity whose half-open
    angular sector contains the direction ``theta``."""
    d = _dir(theta)
    out = []
    for h in q.tri.orbits[q.tri.vertex_index[label]]:
        a, b = _corner_dirs(q, h)
        if cross(a, d) >= 0 and cross(d, b) > 0 and (a[0] * d[0] + a[1] * d[1] > 0 or cross(a, d) > 0):
            out.append((q.tri.tri_of[h], q.tri.pos_of[h]))
    return out


def _trace(q: TranslationSurface, ti: int, p, d, T: float, *, corner: Optional[int] = None,
           pieces: Optional[Dict[int, List[_Piece]]] = None, skip: float = 1e-12,
           detect_period: bool = False,
           on_segment: Optional[Callable] = None,
           on_cross: Optional[Callable] = None,
           transverse: bool = False) -> _End:
    tri = q.tri
    t = 0.0
    p = (float(p[0]), float(p[1]))
    start_ti, start_p = ti, p
    first = True
    while True:
        V = q.triangle_vertices(ti)
        best, bi = math.inf, None
        for i in range(3):
            if first and corner is not None and i != (corner + 1) % 3:
                continue
            A, B = V[i], V[(i + 1) % 3]
            E = (B[0] - A[0], B[1] - A[1])
            r = E[0] * d[1] - E[1] * d[0]
            if r >= -1e-15 * math.hypot(*E):
                continue
            c = E[0] * (p[1] - A[1]) - E[1] * (p[0] - A[0])
            s = max(c, 0.0) / (-r)
            if s < best:
                best, bi = s, i
        if bi is None:
            raise NumericError(f"no exit from triangle {ti}")

        stop = min(best, T - t)
        event = None
        if pieces and ti in pieces and d[0] != 0.0:
            for pc in pieces[ti]:
                u = (pc.x - p[0]) / d[0]
                if u < -1e-13 or u > stop + 1e-13 or t + u <= skip:
                    continue
                y = p[1] + u * d[1]
                if y < pc.y_lo - 1e-12 or y > pc.y_hi + 1e-12:
                    continue
                if event is None or u < event[1]:
                    s_val = pc.s_base + pc.orient * (y - pc.y_at0)
                    event = ("arc", max(u, 0.0), pc.arc, s_val)
        if detect_period and not first and ti == start_ti:
            w = (start_p[0] - p[0], start_p[1] - p[1])
            along = w[0] * d[0] + w[1] * d[1]
            perp = abs(d[0] * w[1] - d[1] * w[0])
            if perp < PERIOD_TOL and -PERIOD_TOL <= along <= stop + PERIOD_TOL:
                if event is None or along < event[1]:
                    event = ("periodic", max(along, 0.0), None, None)
        if event is not None:
            u = event[1]
            end = (p[0] + u * d[0], p[1] + u * d[1])
            if on_segment:
                on_segment(ti, p, end, t, t + u)
            return _End(event[0], t + u, ti, end, arc=event[2], s=event[3])
        if T - t <= best:
            u = T - t
            end = (p[0] + u * d[0], p[1] + u * d[1])
            if on_segment:
                on_segment(ti, p, end, t, T)
            return _End("ran", T, ti, end)

        A, B = V[bi], V[(bi + 1) % 3]
        E = (B[0] - A[0], B[1] - A[1])
        X = (p[0] + best * d[0], p[1] + best * d[1])
        EL2 = E[0] * E[0] + E[1] * E[1]
        lam = ((X[0] - A[0]) * E[0] + (X[1] - A[1]) * E[1]) / EL2
        EL = math.sqrt(EL2)
        h = tri.triangles[ti][bi]
        if on_segment:
            on_segment(ti, p, X, t, t + best)
        if lam * EL < DELTA_HIT or (1 - lam) * EL < DELTA_HIT:
            if transverse:
                raise NonTransverseCrossing(f"path meets a vertex of triangle {ti}")
            v = tri.vertex_of[h] if lam * EL < DELTA_HIT else tri.end_vertex(h)
            return _End("singularity", t + best, ti, X, label=tri.label_of_vertex[v])
        if on_cross:
            on_cross(h, t + best)
        g = tri.twin(h)
        tj, k = tri.tri_of[g], tri.pos_of[g]
        W = q.triangle_vertices(tj)
        W0, W1 = W[k], W[(k + 1) % 3]
        mu = 1.0 - lam
        p = (W0[0] + mu * (W1[0] - W0[0]), W0[1] + mu * (W1[1] - W0[1]))
        ti = tj
        t += best
        first = False


def _check_start(q: TranslationSurface, ti: int, p):
    for v in q.triangle_vertices(ti):
        if math.hypot(p[0] - v[0], p[1] - v[1]) < DELTA_HIT:
            raise StartAtSingularity("start point is a singularity")


# ---------------------------------------------------------------------------
# flow


@dataclass(frozen=True)
class Crossing:
    time: float
    triangle: int
    x: float
    y: float


@dataclass
class FlowResult:
    kind: str                      # "periodic" | "singularity" | "ran"
    time: float
    end: Point
    singularity: Optional[str] = None
    trace: List[Crossing] = field(default_factory=list)

    @property
    def period(self) -> Optional[float]:
        return self.time if self.kind == "periodic" else None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "triangle", "x", "y"])
        for c in self.trace:
            w.writerow([repr(c.time), c.triangle, repr(c.x), repr(c.y)])
        return buf.getvalue()


def flow(q: TranslationSurface, p: Point, theta: float, T: float,
         detect_period: bool = True) -> FlowResult:
    """Unit-speed straight-line flow in direction ``theta`` for time ``T``."""
    ti, xy = p
    xy = (float(xy[0]), float(xy[1]))
    _check_start(q, ti, xy)
    trace = [Crossing(0.0, ti, xy[0], xy[1])]

    def seg(tj, a, b, t0, t1):
        if t0 > 0 and (not trace or trace[-1].time != t0):
            trace.append(Crossing(t0, tj, a[0], a[1]))

    end = _trace(q, ti, xy, _dir(theta), float(T), detect_period=detect_period, on_segment=seg)
    return FlowResult(end.kind, end.time, (end.triangle, end.point), end.label, trace)


def point_at(q: TranslationSurface, xy, base: int = 0) -> Point:
    """Surface point reached by developing the plane from ``base``.

    The plane coordinates are those of the base triangle's frame.  The point
    is found by flowing in a straight line from the base triangle's centroid.
    """
    V = q.triangle_vertices(base)
    c = (sum(v[0] for v in V) / 3, sum(v[1] for v in V) / 3)
    w = (float(xy[0]) - c[0], float(xy[1]) - c[1])
    L = math.hypot(*w)
    if L == 0:
        return (base, c)
    end = _trace(q, base, c, (w[0] / L, w[1] / L), L)
    if end.kind != "ran":
        raise NumericError("developing segment meets a singularity")
    return (end.triangle, end.point)


def triangle_offsets(q: TranslationSurface) -> List[Tuple[float, float]]:
    """Plane position of each triangle's first corner, developed from triangle 0."""
    if "offsets" in q._cache:
        return q._cache["offsets"]
    tri = q.tri
    off: List[Optional[Tuple[float, float]]] = [None] * len(tri.triangles)
    off[0] = (0.0, 0.0)
    stack = [0]
    while stack:
        ti = stack.pop()
        V = q.triangle_vertices(ti)
        for k, h in enumerate(tri.triangles[ti]):
            g = tri.twin(h)
            tj, kj = tri.tri_of[g], tri.pos_of[g]
            if off[tj] is not None:
                continue
            W = q.triangle_vertices(tj)
            # start of g is the end of h
            A = V[(k + 1) % 3]
            off[tj] = (off[ti][0] + A[0] - W[kj][0], off[ti][1] + A[1] - W[kj][1])
            stack.append(tj)
    q._cache["offsets"] = off
    return off


# ---------------------------------------------------------------------------
# Birkhoff averages


class Region:
    """Indicator of a set, integrated exactly along straight segments."""

    def measure(self, q, ti, a, b) -> float:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class Everywhere(Region):
    def measure(self, q, ti, a, b) -> float:
        return math.hypot(b[0] - a[0], b[1] - a[1])


@dataclass(frozen=True)
class TriangleSetRegion(Region):
    triangles: frozenset

    @classmethod
    def of(cls, q: TranslationSurface, region) -> "TriangleSetRegion":
        if isinstance(region, str):
            region = q.meta["regions"][region]
        return cls(frozenset(region))

    def measure(self, q, ti, a, b) -> float:
        return math.hypot(b[0] - a[0], b[1] - a[1]) if ti in self.triangles else 0.0


@dataclass(frozen=True)
class Complement(Region):
    inner: Region

    def measure(self, q, ti, a, b) -> float:
        return math.hypot(b[0] - a[0], b[1] - a[1]) - self.inner.measure(q, ti, a, b)


def _band_cdf(beta: float, lo: float, hi: float) -> float:
    f = math.floor(beta)
    return f * (hi - lo) + min(max(beta - f - lo, 0.0), hi - lo)


@dataclass(frozen=True)
class LatticeBand(Region):
    """Band ``lo <= b mod 1 < hi`` where a point is ``a u + b v`` in the plane.

    The band is parallel to ``u``; it is well defined on the torus R^2 / (Z u + Z v).
    """

    u: Tuple[float, float]
    v: Tuple[float, float]
    lo: float
    hi: float

    def coord(self, P) -> float:
        return cross(self.u, P) / cross(self.u, self.v)

    def measure(self, q, ti, a, b) -> float:
        off = triangle_offsets(q)[ti]
        P0 = (off[0] + a[0], off[1] + a[1])
        P1 = (off[0] + b[0], off[1] + b[1])
        L = math.hypot(P1[0] - P0[0], P1[1] - P0[1])
        b0, b1 = self.coord(P0), self.coord(P1)
        if abs(b1 - b0) < 1e-15:
            f = b0 - math.floor(b0)
            return L if self.lo <= f < self.hi else 0.0
        return L * abs(_band_cdf(b1, self.lo, self.hi) - _band_cdf(b0, self.lo, self.hi)) / abs(b1 - b0)


def birkhoff_average(q: TranslationSurface, p: Point, theta: float, T: float,
                     f: Region = Everywhere()) -> float:
    """(1/T) times the time the trajectory spends in the region."""
    if isinstance(f, Everywhere):
        _check_start(q, p[0], p[1])
        return 1.0
    if isinstance(f, Complement):
        return 1.0 - birkhoff_average(q, p, theta, T, f.inner)
    ti, xy = p
    _check_start(q, ti, xy)
    acc = [0.0]

    def seg(tj, a, b, t0, t1):
        acc[0] += f.measure(q, tj, a, b)

    end = _trace(q, ti, xy, _dir(theta), float(T), on_segment=seg)
    if end.kind == "singularity":
        raise TrajectoryTerminated(f"trajectory hit {end.label} at time {end.time}")
    return acc[0] / float(T)


def band_average_closed_form(band: LatticeBand, P, theta: float, T: float) -> float:
    """Birkhoff average of a lattice band along a straight line in the plane."""
    d = _dir(theta)
    b0 = band.coord(P)
    b1 = band.coord((P[0] + T * d[0], P[1] + T * d[1]))
    if abs(b1 - b0) < 1e-15:
        f = b0 - math.floor(b0)
        return 1.0 if band.lo <= f < band.hi else 0.0
    return abs(_band_cdf(b1, band.lo, band.hi) - _band_cdf(b0, band.lo, band.hi)) / abs(b1 - b0)


# ---------------------------------------------------------------------------
# vertical arcs


@dataclass(frozen=True)
class ArcPiece:
    triangle: int
    s0: float
    s1: float
    x: float
    y0: float   # local y at s0


def _vertical_pieces(q: TranslationSurface, ti: int, p, length: float, direction: int,
                     corner: Optional[int] = None) -> Tuple[List[ArcPiece], _End]:
    d = (0.0, 1.0 if direction > 0 else -1.0)
    out: List[ArcPiece] = []

    def seg(tj, a, b, t0, t1):
        if t1 > t0:
            out.append(ArcPiece(tj, t0, t1, a[0], a[1]))

    end = _trace(q, ti, p, d, float(length), corner=corner, on_segment=seg)
    return out, end


def vertical_arc_pieces(q: TranslationSurface, ti: int, p, length: float,
                        direction: int = 1) -> List[Tuple[int, float, float]]:
    """Triangles met by a vertical segment, with the arc-length interval in each.

    The segment stops early if it reaches a singularity.
    """
    pieces, _ = _vertical_pieces(q, ti, p, length, direction)
    return [(pc.triangle, pc.s0, pc.s1) for pc in pieces]


@dataclass
class Arc:
    """Vertical arc, parameterized by vertical distance from its start."""

    pieces: List[ArcPiece]
    direction: int
    length: float
    base: Optional[str] = None   # singularity at s = 0, if any
    mark: float = 0.0
    tip: Optional[str] = None    # singularity at s = length, if any

    def point(self, s: float) -> Point:
        for pc in self.pieces:
            if pc.s0 - 1e-12 <= s <= pc.s1 + 1e-12:
                return (pc.triangle, (pc.x, pc.y0 + self.direction * (s - pc.s0)))
        raise ValueError(f"parameter {s} outside the arc")


@dataclass
class TransverseSystem:
    arcs: List[Arc]
    L_cert: float = 0.0
    certified: bool = False

    @property
    def total_length(self) -> float:
        return sum(a.length for a in self.arcs)

    def piece_index(self) -> Dict[int, List[_Piece]]:
        idx: Dict[int, List[_Piece]] = {}
        for j, arc in enumerate(self.arcs):
            for pc in arc.pieces:
                y_end = pc.y0 + arc.direction * (pc.s1 - pc.s0)
                idx.setdefault(pc.triangle, []).append(
                    _Piece(j, pc.x, min(pc.y0, y_end), max(pc.y0, y_end), pc.y0, pc.s0, arc.direction))
        return idx


def vertical_arc(q: TranslationSurface, start: Point, length: float, direction: int = 1) -> Arc:
    ti, p = start
    _check_start(q, ti, p)
    pieces, end = _vertical_pieces(q, ti, p, length, direction)
    if end.kind == "singularity":
        raise ProngHitsSingularity(f"vertical arc meets {end.label} at {end.time}")
    return Arc(pieces, 1 if direction > 0 else -1, float(length), mark=float(length) / 2)


def prong(q: TranslationSurface, label: str, corner: Tuple[int, int], length: float) -> Arc:
    """Downward vertical arc issuing from a singularity through a given corner."""
    ti, k = corner
    V = q.triangle_vertices(ti)
    pieces, end = _vertical_pieces(q, ti, V[k], length, -1, corner=k)
    tip = None
    if end.kind == "singularity":
        if end.time < length - 1e-9:
            raise ProngHitsSingularity(
                f"prong from {label} meets {end.label} at length {end.time:.6g}")
        tip = end.label   # the endpoint itself is singular, which an arc may touch
    return Arc(pieces, -1, float(length), base=label, mark=float(length) / 2, tip=tip)


def _separatrices(q: TranslationSurface):
    """Corners carrying the rightward and leftward horizontal separatrices."""
    out = []
    for lab in q.tri.labels:
        for theta in (0.0, math.pi):
            for c in corners_in_direction(q, lab, theta):
                out.append((lab, theta, c))
    return out


def _separatrix_hits(q: TranslationSurface, system: TransverseSystem, L: float):
    idx = system.piece_index()
    res = []
    for lab, theta, (ti, k) in _separatrices(q):
        V = q.triangle_vertices(ti)
        end = _trace(q, ti, V[k], _dir(theta), L, corner=k, pieces=idx)
        res.append((lab, theta, (ti, k), end))
    return res


def default_L_cert(q: TranslationSurface, system: TransverseSystem) -> float:
    return 10.0 * float(q.area()) / system.total_length


def certify(q: TranslationSurface, system: TransverseSystem, max_doublings: int = 10
            ) -> TransverseSystem:
    """Every horizontal separatrix meets an arc (or a singularity) before L_cert."""
    L = default_L_cert(q, system)
    for _ in range(max_doublings + 1):
        hits = _separatrix_hits(q, system, L)
        if all(end.kind in ("arc", "singularity") for *_, end in hits):
            system.L_cert = L
            system.certified = True
            return system
        L *= 2
    raise UncoveredLeaf(f"a horizontal separatrix misses the arcs up to length {L / 2:.6g}")


def prong_system(q: TranslationSurface, t: float) -> TransverseSystem:
    """Downward prongs at the first singularity, trimmed at the last first hit.

    Each prong starts with length e^{-t}; the common length is then cut to
    the largest arc parameter at which some horizontal separatrix first meets
    the prongs.  Separatrices that meet the prongs only at their base
    singularity are ignored.
    """
    label = q.tri.labels[0]
    full = math.exp(-t)
    corners = corners_in_direction(q, label, -math.pi / 2)
    arcs = [prong(q, label, c, full) for c in corners]
    system = TransverseSystem(arcs)
    L = default_L_cert(q, system)
    eps = 0.0
    hit_any = False
    for *_, end in _separatrix_hits(q, system, L * 2 ** 10):
        if end.kind == "arc":
            hit_any = True
            eps = max(eps, end.s)
    if not hit_any or eps <= 0:
        eps = full
    eps = min(full, eps)
    arcs = [prong(q, label, c, eps) for c in corners]
    return TransverseSystem(arcs)


# ---------------------------------------------------------------------------
# first return


@dataclass
class IETData:
    starts: List[float]
    lengths: List[float]
    permutation: List[int]
    translations: List[float]
    source_arcs: List[int]
    target_arcs: List[int]
    return_times: List[float]
    return_words: List[Tuple[int, ...]]
    return_holonomies: List[Tuple[float, float]]
    arc_offsets: List[float]
    total_length: float

    @property
    def n(self) -> int:
        return len(self.lengths)

    def __call__(self, x: float) -> float:
        for a, L, tr in zip(self.starts, self.lengths, self.translations):
            if a <= x < a + L:
                return x + tr
        raise ValueError("point outside the domain")

    def is_rotation(self) -> bool:
        n = self.n
        return all(self.permutation[i] == (i + self.permutation[0]) % n for i in range(n))

    def to_doc(self) -> dict:
        return {
            "lengths": self.lengths,
            "starts": self.starts,
            "permutation": self.permutation,
            "translations": self.translations,
            "source_arcs": self.source_arcs,
            "target_arcs": self.target_arcs,
            "return_times": self.return_times,
            "return_words": [list(w) for w in self.return_words],
            "return_holonomies": [list(h) for h in self.return_holonomies],
            "total_length": self.total_length,
        }


def _merge(vals: List[float], tol: float = 1e-11) -> List[float]:
    out: List[float] = []
    for v in sorted(vals):
        if not out or v - out[-1] > tol:
            out.append(v)
    return out


def first_return(q: TranslationSurface, system: TransverseSystem) -> IETData:
    """First-return map of the rightward horizontal flow to the arcs.

    Cut points come from the backward horizontal separatrices and from the
    backward flow of the free arc endpoints.  Coverage is checked twice:
    every separatrix must end on an arc or a singularity within L_cert, and
    the return towers must fill the whole area.
    """
    if not system.certified:
        certify(q, system)
    L = system.L_cert
    idx = system.piece_index()
    arcs = system.arcs
    offsets = []
    acc = 0.0
    for a in arcs:
        offsets.append(acc)
        acc += a.length
    total = acc

    cuts: Dict[int, List[float]] = {j: [0.0, a.length] for j, a in enumerate(arcs)}
    for lab, theta, (ti, k), end in _separatrix_hits(q, system, L):
        if theta == math.pi and end.kind == "arc":
            cuts[end.arc].append(end.s)
    for j, a in enumerate(arcs):
        ends = [s for s, sing in ((0.0, a.base), (a.length, a.tip)) if sing is None]
        for s in ends:
            ti, p = a.point(s)
            end = _trace(q, ti, p, (-1.0, 0.0), L, pieces=idx)
            if end.kind == "arc":
                cuts[end.arc].append(end.s)
            elif end.kind == "ran":
                raise UncoveredLeaf("backward flow from an arc endpoint misses the arcs")

    starts, lengths, src, tgt, times, words, hols, trans = [], [], [], [], [], [], [], []
    for j, a in enumerate(arcs):
        pts = _merge([min(max(c, 0.0), a.length) for c in cuts[j]])
        for s0, s1 in zip(pts, pts[1:]):
            mid = (s0 + s1) / 2
            ti, p = a.point(mid)
            word: List[int] = [ti]

            def on_cross(h, t, word=word):
                word.append(q.tri.tri_of[q.tri.twin(h)])

            end = _trace(q, ti, p, (1.0, 0.0), L, pieces=idx, on_cross=on_cross)
            if end.kind != "arc":
                raise UncoveredLeaf(f"leaf from arc {j} at {mid:.6g} does not return ({end.kind})")
            k = end.arc
            starts.append(offsets[j] + s0)
            lengths.append(s1 - s0)
            src.append(j)
            tgt.append(k)
            times.append(end.time)
            words.append(tuple(word))
            trans.append(offsets[k] + end.s - (offsets[j] + mid))
            dy = a.direction * (mid - a.mark) - arcs[k].direction * (end.s - arcs[k].mark)
            hols.append((end.time, dy))

    tower = sum(w * t for w, t in zip(lengths, times))
    area = float(q.area())
    if abs(tower - area) > 1e-9 * max(1.0, area) + 1e-7 * area:
        raise UncoveredLeaf(f"return towers cover area {tower:.12g} of {area:.12g}")
    images = sorted(range(len(starts)), key=lambda i: starts[i] + trans[i])
    perm = [0] * len(starts)
    for rank, i in enumerate(images):
        perm[i] = rank
    return IETData(starts, lengths, perm, trans, src, tgt, times, words, hols, offsets, total)


# ---------------------------------------------------------------------------
# loops and their dual cocycles


@dataclass(frozen=True)
class AlmostHorizontalLoop:
    segments: Tuple[int, ...]     # IET interval ids, in order
    arcs: Tuple[int, ...]         # arc visited at the start of each segment

    @property
    def reduced(self) -> bool:
        return len(set(self.arcs)) == len(self.arcs)


def almost_horizontal_loops(q: TranslationSurface, system: TransverseSystem,
                            iet: Optional[IETData] = None) -> List[AlmostHorizontalLoop]:
    """Reduced loops: simple cycles of the arc graph, one choice per parallel segment."""
    if iet is None:
        iet = first_return(q, system)
    classes: Dict[Tuple[int, int, Tuple[int, ...]], int] = {}
    for i in range(iet.n):
        key = (iet.source_arcs[i], iet.target_arcs[i], iet.return_words[i])
        classes.setdefault(key, i)
    G = nx.DiGraph()
    G.add_nodes_from(range(len(system.arcs)))
    parallel: Dict[Tuple[int, int], List[int]] = {}
    for (a, b, _), i in classes.items():
        G.add_edge(a, b)
        parallel.setdefault((a, b), []).append(i)
    loops = []
    for cyc in sorted(nx.simple_cycles(G), key=lambda c: (len(c), c)):
        hops = [(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc))]
        for choice in itertools.product(*(sorted(parallel[h]) for h in hops)):
            loops.append(AlmostHorizontalLoop(tuple(choice), tuple(cyc)))
    return loops


def _vertical_move(q, pt: Point, ds: float, arc: Arc, on_cross):
    """Move along an arc by ``ds`` in its parameter."""
    if abs(ds) < 1e-15:
        return pt
    d = (0.0, float(arc.direction) * (1 if ds > 0 else -1))
    end = _trace(q, pt[0], pt[1], d, abs(ds), on_cross=on_cross, transverse=True)
    return (end.triangle, end.point)


def loop_cocycle(q: TranslationSurface, system: TransverseSystem, iet: IETData,
                 loop: AlmostHorizontalLoop) -> Cochain1:
    """Signed crossing counts of the loop with every half-edge.

    ``beta(h)`` is +1 each time the loop crosses ``h`` from its left side (the
    triangle it bounds) to its right side, and -1 for the opposite crossing,
    so ``beta(twin h) = -beta(h)``.  Each segment runs from the marked point
    of its source arc up or down to the interval midpoint, horizontally to
    the target arc, and then along that arc to its marked point.
    """
    n = q.tri.n_half
    vals = [0] * n

    def on_cross(h, t):
        vals[h] += 1
        vals[q.tri.twin(h)] -= 1

    arcs = system.arcs
    for i in loop.segments:
        j, k = iet.source_arcs[i], iet.target_arcs[i]
        mid = iet.starts[i] - iet.arc_offsets[j] + iet.lengths[i] / 2
        a = arcs[j]
        pt = a.point(a.mark)
        pt = _vertical_move(q, pt, mid - a.mark, a, on_cross)
        end = _trace(q, pt[0], pt[1], (1.0, 0.0), iet.return_times[i], on_cross=on_cross,
                     transverse=True)
        s_land = mid + iet.translations[i] - (iet.arc_offsets[k] - iet.arc_offsets[j])
        _vertical_move(q, (end.triangle, end.point), arcs[k].mark - s_land, arcs[k], on_cross)
    beta = Cochain1(vals)
    if not beta.is_closed(q.tri):
        raise NonTransverseCrossing("crossing counts are not closed; perturb the marked points")
    return beta


def loop_crossings(q: TranslationSurface, system: TransverseSystem, iet: IETData,
                   loop: AlmostHorizontalLoop) -> List[int]:
    """Half-edges crossed by the loop, in order."""
    seq: List[int] = []
    arcs = system.arcs

    def on_cross(h, t):
        seq.append(h)

    for i in loop.segments:
        j, k = iet.source_arcs[i], iet.target_arcs[i]
        mid = iet.starts[i] - iet.arc_offsets[j] + iet.lengths[i] / 2
        a = arcs[j]
        pt = _vertical_move(q, a.point(a.mark), mid - a.mark, a, on_cross)
        end = _trace(q, pt[0], pt[1], (1.0, 0.0), iet.return_times[i], on_cross=on_cross,
                     transverse=True)
        s_land = mid + iet.translations[i] - (iet.arc_offsets[k] - iet.arc_offsets[j])
        _vertical_move(q, (end.triangle, end.point), arcs[k].mark - s_land, arcs[k], on_cross)
    return seq


def crossings_to_chain(q: TranslationSurface, crossings: Sequence[int]) -> Dict[int, int]:
    """Edge path homotopic (in the closed surface) to a closed curve.

    Each crossing of ``h`` is replaced by the endpoint of ``h`` on the
    traveller's left, which is the end of ``h``; consecutive such vertices
    lie in a common triangle and are joined by one of its sides.
    """
    tri = q.tri
    chain: Dict[int, int] = {}
    n = len(crossings)
    for i in range(n):
        h, g = crossings[i], crossings[(i + 1) % n]
        # the curve crosses the triangle entered through twin(h) and leaves through g
        t = tri.triangles[tri.tri_of[g]]
        a = tri.pos_of[tri.twin(h)]
        b = (tri.pos_of[g] + 1) % 3
        if a == b:
            continue
        if b == (a + 1) % 3:
            chain[t[a]] = chain.get(t[a], 0) + 1
        else:
            chain[t[b]] = chain.get(t[b], 0) - 1
    return {h: c for h, c in chain.items() if c}


def cone_generators(q: TranslationSurface, system: TransverseSystem,
                    iet: Optional[IETData] = None) -> List[Cochain1]:
    if iet is None:
        iet = first_return(q, system)
    out: List[Cochain1] = []
    seen = set()
    for loop in almost_horizontal_loops(q, system, iet):
        b = loop_cocycle(q, system, iet, loop)
        key = tuple(b.values)
        if key not in seen:
            seen.add(key)
            out.append(b)
    return out


def without_vertical_edges(q: TranslationSurface, max_flips: int = 20
                           ) -> Tuple[TranslationSurface, Transport]:
    """Flip vertical edges away so prongs cross edges transversally."""
    tr = Transport()
    for _ in range(max_flips):
        vertical = [e for e in q.tri.edge_reps() if sign(q.hol[e][0]) == 0]
        if not vertical:
            return q, tr
        e = next((e for e in vertical if flip_is_convex(q, e)), None)
        if e is None:
            break
        q, step = flip_edge(q, e)
        tr = tr.then(step)
    raise NonTransverseCrossing("could not remove vertical edges by flips")


def pull_back(beta: Cochain1, q: TranslationSurface, tr: Transport) -> Cochain1:
    """A closed cochain on the flipped surface, read on the edges of ``q``."""
    return Cochain1([beta.evaluate(tr.chain({h: 1})) for h in range(q.tri.n_half)])


def cone_at_depth(q: TranslationSurface, t: float) -> List[Cochain1]:
    """Generators of the loop cone for prongs of length e^-t, as cochains on ``q``.

    Prongs running along a vertical edge have their crossing points on that
    edge, so the loops are built on a flipped triangulation and pulled back.
    """
    q2, tr = without_vertical_edges(q)
    system = certify(q2, prong_system(q2, t))
    gens = cone_generators(q2, system)
    if not tr.n_flips:
        return gens
    out, seen = [], set()
    for g in gens:
        b = pull_back(g, q, tr)
        if tuple(b.values) not in seen:
            seen.add(tuple(b.values))
            out.append(b)
    return out


# ---------------------------------------------------------------------------
# cone membership


def _exact_feasible(A: List[List[object]], b: List[object]) -> bool:
    """Phase-one simplex with Bland's rule: is A c = b, c >= 0 solvable?

    Entries may be Fractions or QuadraticNumbers; all pivots are exact.
    """
    m, n = len(A), len(A[0]) if A else 0
    rows = []
    for i in range(m):
        r = [A[i][j] for j in range(n)]
        rhs = b[i]
        if sign(rhs) < 0:
            r = [-x for x in r]
            rhs = -rhs
        rows.append(r + [1 if k == i else 0 for k in range(m)] + [rhs])
    basis = [n + i for i in range(m)]
    width = n + m
    # objective: minimise the sum of artificials; reduced costs
    def reduced_cost(j):
        c = 1 if j >= n else 0
        return c - sum((1 if basis[i] >= n else 0) * rows[i][j] for i in range(m))

    for _ in range(10000):
        enter = None
        for j in range(width):
            if j in basis:
                continue
            if sign(reduced_cost(j)) < 0:
                enter = j
                break
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            a = rows[i][enter]
            if sign(a) > 0:
                ratio = rows[i][-1] / a
                if best is None or sign(ratio - best) < 0 or (sign(ratio - best) == 0 and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            break
        piv = rows[leave][enter]
        rows[leave] = [x / piv for x in rows[leave]]
        for i in range(m):
            if i != leave and sign(rows[i][enter]) != 0:
                f = rows[i][enter]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[leave])]
        basis[leave] = enter
    objective = sum(rows[i][-1] for i in range(m) if basis[i] >= n)
    return sign(objective) == 0


def _float_feasible(A, b, tol: float = 1e-9) -> bool:
    import numpy as np
    from scipy.optimize import linprog

    A = np.array([[float(x) for x in r] for r in A])
    b = np.array([float(x) for x in b])
    res = linprog(np.zeros(A.shape[1]), A_eq=A, b_eq=b, bounds=[(0, None)] * A.shape[1],
                  method="highs")
    if res.status != 0:
        return False
    return float(np.max(np.abs(A @ res.x - b))) <= tol * max(1.0, float(np.max(np.abs(b))))


def cone_contains(generators: Sequence[Cochain1], beta, edges: Optional[Sequence[int]] = None,
                  exact: Optional[bool] = None) -> bool:
    """Is ``beta`` a nonnegative combination of the generators?

    Exact when every value is a Fraction, an integer or a QuadraticNumber;
    otherwise a linear program with tolerance 1e-9 decides.
    """
    b = beta.cochain if hasattr(beta, "cochain") else beta
    if not generators:
        return all(sign(x) == 0 for x in b.values)
    n_half = len(b.values)
    if edges is None:
        edges = list(range(n_half))
    A = [[g.values[h] for g in generators] for h in edges]
    rhs = [b.values[h] for h in edges]
    if exact is None:
        exact = all(is_exact(x) for x in rhs)
    if exact:
        A = [[Fraction(x) if isinstance(x, int) else x for x in r] for r in A]
        rhs = [Fraction(x) if isinstance(x, int) else x for x in rhs]
        return _exact_feasible(A, rhs)
    return _float_feasible(A, rhs)
