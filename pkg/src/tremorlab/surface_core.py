"""Triangulated translation surfaces in period coordinates.

A surface is a set of counterclockwise triangles whose sides are directed
half-edges.  ``gluing`` pairs every half-edge with its reversal on the
neighbouring triangle.  Every vertex is a marked point (a labelled
singularity of some order r >= 0), so edge holonomies are honest relative
periods and closed edge-cochains are relative cohomology classes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import (
    ClosureViolation,
    ConeAngleMismatch,
    Disconnected,
    NonConvexFlip,
    OrientationViolation,
    SpecFormatError,
)
from .numbers import TOL, dump_scalar, is_exact, parse_scalar, scalar_kind

Vec2 = Tuple[object, object]
Chain = Dict[int, int]

CONE_ANGLE_TOL = 1e-9


def cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


def vadd(u, v):
    return (u[0] + v[0], u[1] + v[1])


def vsub(u, v):
    return (u[0] - v[0], u[1] - v[1])


def vneg(u):
    return (-u[0], -u[1])


def vscale(c, u):
    return (c * u[0], c * u[1])


def vfloat(u):
    return (float(u[0]), float(u[1]))


def norm(u) -> float:
    return math.hypot(float(u[0]), float(u[1]))


# ---------------------------------------------------------------------------
# combinatorics


class Triangulation:
    """Combinatorial triangulation with labelled vertices.

    ``vertex_labels`` maps a label to ``(order, half_edge)`` where the
    half-edge starts at the labelled vertex.  Label order matters: the first
    label is "the first singularity".
    """

    def __init__(self, triangles, gluing, vertex_labels=None):
        self.triangles = tuple(tuple(int(h) for h in t) for t in triangles)
        self.gluing = tuple(int(g) for g in gluing)
        n = len(self.gluing)
        self.n_half = n
        self.tri_of = [-1] * n
        self.pos_of = [-1] * n
        for ti, t in enumerate(self.triangles):
            if len(t) != 3:
                raise SpecFormatError(f"triangle {ti} does not have 3 sides")
            for k, h in enumerate(t):
                if not 0 <= h < n:
                    raise SpecFormatError(f"half-edge id {h} out of range")
                if self.tri_of[h] != -1:
                    raise SpecFormatError(f"half-edge {h} used twice")
                self.tri_of[h] = ti
                self.pos_of[h] = k
        if -1 in self.tri_of:
            raise SpecFormatError("some half-edge belongs to no triangle")
        for h, g in enumerate(self.gluing):
            if not 0 <= g < n or g == h or self.gluing[g] != h:
                raise SpecFormatError("gluing is not a fixed-point-free involution")

        self._check_connected()

        # vertex orbits: outgoing half-edges around each vertex, ccw order
        self.vertex_of = [-1] * n
        self.orbits: List[List[int]] = []
        for h in range(n):
            if self.vertex_of[h] != -1:
                continue
            orbit = []
            x = h
            while self.vertex_of[x] == -1:
                self.vertex_of[x] = len(self.orbits)
                orbit.append(x)
                x = self.ccw_next(x)
            if x != h:
                raise SpecFormatError("vertex link is not a circle")
            self.orbits.append(orbit)

        labels = dict(vertex_labels or {})
        if not labels:
            labels = {f"p{i}": (0, orb[0]) for i, orb in enumerate(self.orbits)}
        self.labels: List[str] = []
        self.orders: List[int] = [0] * len(self.orbits)
        self.label_of_vertex: List[Optional[str]] = [None] * len(self.orbits)
        for name, val in labels.items():
            if isinstance(val, Mapping):
                order, he = int(val["order"]), int(val["half_edge"])
            else:
                order, he = int(val[0]), int(val[1])
            if not 0 <= he < n:
                raise SpecFormatError(f"label {name}: bad half-edge")
            v = self.vertex_of[he]
            if self.label_of_vertex[v] is not None:
                raise SpecFormatError(f"vertex labelled twice ({name})")
            self.label_of_vertex[v] = str(name)
            self.orders[v] = order
            self.labels.append(str(name))
        if any(lab is None for lab in self.label_of_vertex):
            raise SpecFormatError("every vertex orbit must be labelled")
        self.vertex_index = {lab: v for v, lab in enumerate(self.label_of_vertex)}
        self.label_half_edge = {lab: self.orbits[self.vertex_index[lab]][0]
                                for lab in self.labels}
        for name, val in labels.items():
            he = int(val["half_edge"] if isinstance(val, Mapping) else val[1])
            self.label_half_edge[str(name)] = he

        V, E, F = len(self.orbits), n // 2, len(self.triangles)
        chi = V - E + F
        if chi % 2:
            raise SpecFormatError("odd Euler characteristic")
        self.genus = (2 - chi) // 2
        if sum(self.orders) != 2 * self.genus - 2:
            raise ConeAngleMismatch(
                f"orders sum to {sum(self.orders)}, expected {2 * self.genus - 2}")
        self._homology = None

    # navigation -------------------------------------------------------
    def twin(self, h: int) -> int:
        return self.gluing[h]

    def next(self, h: int) -> int:
        t = self.triangles[self.tri_of[h]]
        return t[(self.pos_of[h] + 1) % 3]

    def prev(self, h: int) -> int:
        t = self.triangles[self.tri_of[h]]
        return t[(self.pos_of[h] + 2) % 3]

    def ccw_next(self, h: int) -> int:
        """Next outgoing half-edge counterclockwise around the start vertex."""
        return self.gluing[self.prev(h)]

    def end_vertex(self, h: int) -> int:
        return self.vertex_of[self.gluing[h]]

    @property
    def n_edges(self) -> int:
        return self.n_half // 2

    def edge_reps(self) -> List[int]:
        """One half-edge per undirected edge (the smaller id)."""
        return [h for h in range(self.n_half) if h < self.gluing[h]]

    def _check_connected(self):
        F = len(self.triangles)
        seen = {0}
        stack = [0]
        while stack:
            t = stack.pop()
            for h in self.triangles[t]:
                u = self.tri_of[self.gluing[h]]
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        if len(seen) != F:
            raise Disconnected(f"{F - len(seen)} triangles unreachable")

    def to_labels_doc(self):
        return {lab: {"order": self.orders[self.vertex_index[lab]],
                      "half_edge": self.label_half_edge[lab]} for lab in self.labels}

    def same_combinatorics(self, other: "Triangulation") -> bool:
        return self.triangles == other.triangles and self.gluing == other.gluing


# ---------------------------------------------------------------------------
# cochains and chains


class Cochain1:
    """Real 1-cochain on directed half-edges, antisymmetric under reversal."""

    __slots__ = ("values",)

    def __init__(self, values: Sequence):
        self.values = tuple(values)

    @classmethod
    def zeros(cls, n: int) -> "Cochain1":
        return cls((0,) * n)

    @classmethod
    def from_edges(cls, tri: Triangulation, edge_values: Mapping[int, object]) -> "Cochain1":
        vals = [0] * tri.n_half
        for h, v in edge_values.items():
            vals[h] = v
            vals[tri.twin(h)] = -v
        return cls(vals)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, h):
        return self.values[h]

    def __add__(self, other):
        return Cochain1([a + b for a, b in zip(self.values, other.values)])

    def __sub__(self, other):
        return Cochain1([a - b for a, b in zip(self.values, other.values)])

    def __neg__(self):
        return Cochain1([-a for a in self.values])

    def scale(self, c) -> "Cochain1":
        return Cochain1([c * a for a in self.values])

    def __rmul__(self, c):
        return self.scale(c)

    def evaluate(self, chain) -> object:
        total = 0
        for h, c in _chain_items(chain):
            total = total + c * self.values[h]
        return total

    def max_abs_diff(self, other) -> float:
        return max((abs(float(a - b)) for a, b in zip(self.values, other.values)),
                   default=0.0)

    def closure_residual(self, tri: Triangulation) -> float:
        res = 0.0
        for t in tri.triangles:
            s = self.values[t[0]] + self.values[t[1]] + self.values[t[2]]
            res = max(res, abs(float(s)))
        for h in range(tri.n_half):
            res = max(res, abs(float(self.values[h] + self.values[tri.twin(h)])))
        return res

    def is_closed(self, tri: Triangulation, tol: float = 1e-9) -> bool:
        return self.closure_residual(tri) <= tol

    def as_float(self) -> "Cochain1":
        return Cochain1([float(v) for v in self.values])

    def __repr__(self):
        return f"Cochain1({list(self.values)!r})"


def _chain_items(chain):
    if isinstance(chain, Mapping):
        return chain.items()
    return ((h, 1) for h in chain)


def chain_from_path(path: Iterable[int]) -> Chain:
    out: Chain = {}
    for h in path:
        out[h] = out.get(h, 0) + 1
    return out


def chain_add(a: Mapping[int, int], b: Mapping[int, int], cb: int = 1) -> Chain:
    out = dict(a)
    for h, c in b.items():
        out[h] = out.get(h, 0) + cb * c
    return {h: c for h, c in out.items() if c}


def chain_scale(a: Mapping[int, int], c: int) -> Chain:
    return {h: c * v for h, v in a.items() if c * v}


def normalize_chain(tri: Triangulation, chain) -> Chain:
    """Rewrite a chain on edge representatives only (h < twin(h))."""
    out: Chain = {}
    for h, c in _chain_items(chain):
        g = tri.twin(h)
        if h < g:
            out[h] = out.get(h, 0) + c
        else:
            out[g] = out.get(g, 0) - c
    return {h: c for h, c in out.items() if c}


def chain_boundary(tri: Triangulation, chain) -> Dict[int, int]:
    bd: Dict[int, int] = {}
    for h, c in _chain_items(chain):
        s, e = tri.vertex_of[h], tri.end_vertex(h)
        bd[e] = bd.get(e, 0) + c
        bd[s] = bd.get(s, 0) - c
    return {v: c for v, c in bd.items() if c}


# ---------------------------------------------------------------------------
# surfaces


class TranslationSurface:
    """Validated triangulated translation surface (immutable)."""

    def __init__(self, tri: Triangulation, hol: Sequence[Vec2], *, validate: bool = True,
                 meta: Optional[dict] = None):
        self.tri = tri
        # chart-dependent annotations such as named triangle regions
        self.meta = dict(meta or {})
        self.hol: Tuple[Vec2, ...] = tuple((h[0], h[1]) for h in hol)
        if len(self.hol) != tri.n_half:
            raise SpecFormatError("holonomy table has wrong length")
        self.exact = all(is_exact(c) for v in self.hol for c in v)
        self._float_hol = None
        self._cache: Dict = {}
        if validate:
            self.validate()

    # validation -------------------------------------------------------
    def validate(self) -> None:
        tri = self.tri
        fh = self.float_hol
        scale = max((math.hypot(*v) for v in fh), default=1.0) or 1.0
        tol = 0.0 if self.exact else TOL * scale
        for h in range(tri.n_half):
            g = tri.twin(h)
            a, b = self.hol[h], self.hol[g]
            if self.exact:
                bad = a[0] + b[0] != 0 or a[1] + b[1] != 0
            else:
                bad = (abs(float(a[0] + b[0])) > tol or abs(float(a[1] + b[1])) > tol)
            if bad:
                raise ClosureViolation(f"half-edges {h},{g} are not reversals")
        for ti, t in enumerate(tri.triangles):
            sx = self.hol[t[0]][0] + self.hol[t[1]][0] + self.hol[t[2]][0]
            sy = self.hol[t[0]][1] + self.hol[t[1]][1] + self.hol[t[2]][1]
            if self.exact:
                bad = sx != 0 or sy != 0
            else:
                bad = abs(float(sx)) > tol or abs(float(sy)) > tol
            if bad:
                raise ClosureViolation(f"triangle {ti} does not close")
            c = cross(self.hol[t[0]], self.hol[t[1]])
            if not c > 0:
                raise OrientationViolation(f"triangle {ti} is not positively oriented")
        angles = self.cone_angles()
        for v, ang in enumerate(angles):
            want = 2 * math.pi * (tri.orders[v] + 1)
            if abs(ang - want) > CONE_ANGLE_TOL:
                raise ConeAngleMismatch(
                    f"vertex {tri.label_of_vertex[v]}: angle {ang:.12g}, expected {want:.12g}")

    # geometry ---------------------------------------------------------
    @property
    def float_hol(self) -> List[Tuple[float, float]]:
        if self._float_hol is None:
            self._float_hol = [vfloat(v) for v in self.hol]
        return self._float_hol

    def corner_angle(self, h: int) -> float:
        """Angle of the triangle corner at the start of half-edge ``h``."""
        fh = self.float_hol
        u = fh[h]
        w = vneg(fh[self.tri.prev(h)])
        return math.atan2(cross(u, w), u[0] * w[0] + u[1] * w[1])

    def cone_angles(self) -> List[float]:
        return [sum(self.corner_angle(h) for h in orb) for orb in self.tri.orbits]

    def triangle_area(self, ti: int):
        t = self.tri.triangles[ti]
        return cross(self.hol[t[0]], self.hol[t[1]]) / 2

    def area(self):
        total = 0
        for ti in range(len(self.tri.triangles)):
            total = total + self.triangle_area(ti)
        return total

    @property
    def genus(self) -> int:
        return self.tri.genus

    def triangle_vertices(self, ti: int) -> Tuple[Tuple[float, float], ...]:
        """Float positions of the triangle corners in its local frame."""
        key = ("tv", ti)
        if key not in self._cache:
            t = self.tri.triangles[ti]
            fh = self.float_hol
            v1 = fh[t[0]]
            v2 = vadd(v1, fh[t[1]])
            self._cache[key] = ((0.0, 0.0), v1, v2)
        return self._cache[key]

    def diameter_estimate(self) -> float:
        return max(math.hypot(*v) for v in self.float_hol)

    def hol_of_chain(self, chain) -> Vec2:
        x, y = 0, 0
        for h, c in _chain_items(chain):
            x = x + c * self.hol[h][0]
            y = y + c * self.hol[h][1]
        return (x, y)

    def hol_x(self) -> Cochain1:
        return Cochain1([v[0] for v in self.hol])

    def hol_y(self) -> Cochain1:
        return Cochain1([v[1] for v in self.hol])

    def as_float(self) -> "TranslationSurface":
        if not self.exact:
            return self
        return TranslationSurface(self.tri, self.float_hol, validate=False, meta=self.meta)

    def with_hol(self, hol: Sequence[Vec2], validate: bool = True) -> "TranslationSurface":
        return TranslationSurface(self.tri, hol, validate=validate, meta=self.meta)

    def max_hol_diff(self, other: "TranslationSurface") -> float:
        if not self.tri.same_combinatorics(other.tri):
            raise ValueError("surfaces are on different triangulations")
        return max(max(abs(float(a[0] - b[0])), abs(float(a[1] - b[1])))
                   for a, b in zip(self.hol, other.hol))

    def systole_estimate(self, L_max: Optional[float] = None) -> float:
        L = L_max or self.diameter_estimate()
        sc = enumerate_saddle_connections(self, L)
        return min((s.length for s in sc), default=float("inf"))

    def __repr__(self):
        return (f"TranslationSurface(genus={self.genus}, triangles={len(self.tri.triangles)}, "
                f"exact={self.exact})")


def area(q: TranslationSurface):
    return q.area()


def normalize_area(q: TranslationSurface) -> TranslationSurface:
    """Rescale so that the area is one."""
    from .numbers import exact_sqrt

    A = q.area()
    if A == 1:
        return q
    if q.exact:
        r = exact_sqrt(A)
        if isinstance(r, float):
            s = 1.0 / r
        else:
            s = 1 / r
            try:
                hol = [(s * v[0], s * v[1]) for v in q.hol]
                return TranslationSurface(q.tri, hol, meta=q.meta)
            except ValueError:
                s = 1.0 / float(r)
    else:
        s = 1.0 / math.sqrt(float(A))
    hol = [(s * float(v[0]), s * float(v[1])) for v in q.hol]
    return TranslationSurface(q.tri, hol, meta=q.meta)


# ---------------------------------------------------------------------------
# surface documents


def load_surface_spec(doc, allow_mixed: bool = False) -> TranslationSurface:
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    if doc.get("format") != "tsurf-v1":
        raise SpecFormatError("format must be 'tsurf-v1'")
    try:
        triangles = doc["triangles"]
        gluing = doc["gluing"]
        raw = doc["holonomy"]
    except KeyError as exc:
        raise SpecFormatError(f"missing field {exc}") from None
    labels = doc.get("vertex_labels")
    hol = []
    kinds = set()
    for entry in raw:
        if len(entry) != 2:
            raise SpecFormatError("each holonomy entry needs two components")
        x, y = parse_scalar(entry[0]), parse_scalar(entry[1])
        kinds.add("float" if scalar_kind(x) == "float" else "exact")
        kinds.add("float" if scalar_kind(y) == "float" else "exact")
        hol.append((x, y))
    if len(kinds) > 1:
        if not allow_mixed:
            raise SpecFormatError("mixed exact and float holonomies (use allow_mixed)")
        hol = [vfloat(v) for v in hol]
    tri = Triangulation(triangles, gluing, labels)
    return TranslationSurface(tri, hol)


def build_surface(spec, allow_mixed: bool = False) -> TranslationSurface:
    """Build and validate a surface from a surface document."""
    return load_surface_spec(spec, allow_mixed=allow_mixed)


def dump_surface_spec(q: TranslationSurface, extra: Optional[dict] = None) -> dict:
    doc = {
        "format": "tsurf-v1",
        "triangles": [list(t) for t in q.tri.triangles],
        "gluing": list(q.tri.gluing),
        "holonomy": [[dump_scalar(v[0]), dump_scalar(v[1])] for v in q.hol],
        "vertex_labels": q.tri.to_labels_doc(),
    }
    if extra:
        doc.update(extra)
    return doc


# ---------------------------------------------------------------------------
# builders


def torus_from_lattice(u: Vec2, v: Vec2, label: str = "p0") -> TranslationSurface:
    """Torus R^2 / (Zu + Zv) with one marked point, split along u + v.

    Half-edges: 0 = u, 1 = v, 2 = -(u+v) form the lower triangle,
    3 = u+v, 4 = -u, 5 = -v the upper one.
    """
    if not cross(u, v) > 0:
        raise OrientationViolation("lattice basis must be positively oriented")
    d = vadd(u, v)
    hol = [u, v, vneg(d), d, vneg(u), vneg(v)]
    tri = Triangulation([(0, 1, 2), (3, 4, 5)], [4, 5, 3, 2, 0, 1], {label: (0, 0)})
    q = TranslationSurface(tri, hol)
    q._cache["torus_lattice"] = (u, v)
    return q


def square_torus() -> TranslationSurface:
    return torus_from_lattice((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)))


# ---------------------------------------------------------------------------
# flips


@dataclass(frozen=True)
class FlipStep:
    e: int
    e_twin: int
    e1: int
    e2: int
    f1: int
    f2: int


@dataclass(frozen=True)
class Transport:
    """Composite cochain/chain transport through a sequence of edge flips."""

    steps: Tuple[FlipStep, ...] = ()
    swaps: Tuple[Tuple[int, int, int], ...] = field(default=())

    def then(self, other: "Transport") -> "Transport":
        return Transport(self.steps + other.steps, self.swaps + other.swaps)

    def cochain(self, beta: Cochain1) -> Cochain1:
        vals = list(beta.values)
        for st in self.steps:
            new = -(vals[st.e2] + vals[st.f1])
            vals[st.e] = new
            vals[st.e_twin] = -new
        return Cochain1(vals)

    def __call__(self, beta):
        from .cocycle_tremor import FoliationCocycle

        if isinstance(beta, FoliationCocycle):
            return beta.transported(self)
        return self.cochain(beta)

    def chain(self, chain) -> Chain:
        out = dict(_chain_items(chain))
        for st in self.steps:
            ce = out.pop(st.e, 0) - out.pop(st.e_twin, 0)
            if ce:
                # old e = -(e1 + e2)
                out[st.e1] = out.get(st.e1, 0) - ce
                out[st.e2] = out.get(st.e2, 0) - ce
        return {h: c for h, c in out.items() if c}

    @property
    def n_flips(self) -> int:
        return len(self.steps)


def _flip_data(tri: Triangulation, e: int):
    et = tri.twin(e)
    if tri.tri_of[e] == tri.tri_of[et]:
        raise NonConvexFlip("edge bounds the same triangle on both sides")
    e1, e2 = tri.next(e), tri.prev(e)
    f1, f2 = tri.next(et), tri.prev(et)
    return et, e1, e2, f1, f2


def flip_is_convex(q: TranslationSurface, e: int) -> bool:
    tri = q.tri
    try:
        et, e1, e2, f1, f2 = _flip_data(tri, e)
    except NonConvexFlip:
        return False
    x = vneg(vadd(q.hol[e2], q.hol[f1]))  # new e, from S to R
    return cross(q.hol[e2], q.hol[f1]) > 0 and cross(q.hol[f2], q.hol[e1]) > 0 and \
        cross(q.hol[f1], x) > 0 and cross(q.hol[e1], vneg(x)) > 0


def flip_edge(q: TranslationSurface, e: int) -> Tuple[TranslationSurface, Transport]:
    """Flip the diagonal ``e`` of the quadrilateral formed by its two triangles.

    Triangles (e, e1, e2) and (e', f1, f2) become (e2, f1, e) and (f2, e1, e');
    the new ``e`` runs between the two far corners with holonomy
    -(hol(e2) + hol(f1)).
    """
    tri = q.tri
    et, e1, e2, f1, f2 = _flip_data(tri, e)
    if not flip_is_convex(q, e):
        raise NonConvexFlip(f"quadrilateral around edge {e} is not strictly convex")
    ti, tj = tri.tri_of[e], tri.tri_of[et]
    triangles = list(tri.triangles)
    triangles[ti] = (e2, f1, e)
    triangles[tj] = (f2, e1, et)
    labels = {}
    for lab in tri.labels:
        he = tri.label_half_edge[lab]
        if he == e:
            he = f1
        elif he == et:
            he = e1
        labels[lab] = (tri.orders[tri.vertex_index[lab]], he)
    new_tri = Triangulation(triangles, tri.gluing, labels)
    hol = list(q.hol)
    x = vneg(vadd(q.hol[e2], q.hol[f1]))
    hol[e] = x
    hol[et] = vneg(x)
    meta = {k: v for k, v in q.meta.items() if k != "regions"}
    q2 = TranslationSurface(new_tri, hol, meta=meta)
    return q2, Transport((FlipStep(e, et, e1, e2, f1, f2),))


def swap_edge_ids(q: TranslationSurface, e: int) -> TranslationSurface:
    """Exchange the ids of ``e`` and its twin (a pure relabelling)."""
    tri = q.tri
    et = tri.twin(e)
    m = {e: et, et: e}
    triangles = [tuple(m.get(h, h) for h in t) for t in tri.triangles]
    labels = {}
    for lab in tri.labels:
        he = tri.label_half_edge[lab]
        if he in m:
            he = tri.ccw_next(he)
            if he in m:
                he = tri.ccw_next(he)
        labels[lab] = (tri.orders[tri.vertex_index[lab]], m.get(he, he))
    new_tri = Triangulation(triangles, tri.gluing, labels)
    hol = list(q.hol)
    hol[e], hol[et] = q.hol[et], q.hol[e]
    return TranslationSurface(new_tri, hol, meta=q.meta)


# ---------------------------------------------------------------------------
# saddle connections


@dataclass(frozen=True)
class SaddleConnection:
    start: str
    end: str
    holonomy: Vec2
    length: float
    chain: Tuple[int, ...]
    path: Tuple[Tuple[int, int], ...]
    start_half_edge: int

    @property
    def direction(self) -> float:
        return math.atan2(float(self.holonomy[1]), float(self.holonomy[0]))


HORIZONTAL = "horizontal"
VERTICAL = "vertical"


def _windows(direction_filter, tol=1e-9):
    if direction_filter is None:
        return None
    if direction_filter == HORIZONTAL:
        return [(-tol, tol), (math.pi - tol, math.pi + tol)]
    if direction_filter == VERTICAL:
        return [(math.pi / 2 - tol, math.pi / 2 + tol), (-math.pi / 2 - tol, -math.pi / 2 + tol)]
    if isinstance(direction_filter[0], (int, float)):
        return [tuple(direction_filter)]
    return [tuple(w) for w in direction_filter]


def _angle_in(windows, ang) -> bool:
    for lo, hi in windows:
        for k in (-2, -1, 0, 1, 2):
            if lo <= ang + 2 * math.pi * k <= hi:
                return True
    return False


def _wedge_meets(windows, dlo, dhi) -> bool:
    a = math.atan2(dlo[1], dlo[0])
    b = math.atan2(dhi[1], dhi[0])
    while b < a:
        b += 2 * math.pi
    for lo, hi in windows:
        for k in (-2, -1, 0, 1, 2):
            s = 2 * math.pi * k
            if lo + s <= b and hi + s >= a:
                return True
    return False


def _seg_dist(p, q) -> float:
    dx, dy = q[0] - p[0], q[1] - p[1]
    L2 = dx * dx + dy * dy
    if L2 == 0:
        return math.hypot(*p)
    t = -(p[0] * dx + p[1] * dy) / L2
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] + t * dx, p[1] + t * dy)


def _strict_ccw(u, v) -> bool:
    c = cross(u, v)
    return c > 1e-11 * math.hypot(*u) * math.hypot(*v)


def enumerate_saddle_connections(q: TranslationSurface, L_max: float,
                                 direction_filter=None) -> List[SaddleConnection]:
    """All oriented saddle connections of length at most ``L_max``.

    Every corner of every triangle owns the half-open wedge of directions
    from its first side (inclusive) to its second (exclusive); rays in the
    wedge are unfolded across the triangles they cross and split at every
    vertex that appears strictly inside.  Each developed vertex carries the
    edge path along the strip boundary, which is homotopic to the
    connection, so cochains can be evaluated on it.

    ``direction_filter`` is ``None``, ``"horizontal"``, ``"vertical"``, an
    angle window ``(lo, hi)`` in radians or a list of windows.
    """
    key = ("sc", float(L_max), str(direction_filter))
    if key in q._cache:
        return q._cache[key]
    tri = q.tri
    fh = q.float_hol
    L = float(L_max)
    windows = _windows(direction_filter)
    out: List[SaddleConnection] = []

    def record(vertex_start, chain, path, h0, vec):
        ln = math.hypot(*vec)
        if ln > L * (1 + 1e-12):
            return
        if windows is not None and not _angle_in(windows, math.atan2(vec[1], vec[0])):
            return
        holv = q.hol_of_chain(chain_from_path(chain))
        end_v = tri.end_vertex(chain[-1])
        out.append(SaddleConnection(
            start=tri.label_of_vertex[vertex_start],
            end=tri.label_of_vertex[end_v],
            holonomy=holv, length=norm(holv), chain=tuple(chain),
            path=tuple(path), start_half_edge=h0))

    for h in range(tri.n_half):
        v0 = tri.vertex_of[h]
        ti = tri.tri_of[h]
        A = fh[h]
        p = tri.prev(h)
        B = vneg(fh[p])
        record(v0, (h,), ((ti, -1),), h, A)
        if windows is not None and not _wedge_meets(windows, A, B):
            continue
        g = tri.next(h)
        stack = [(g, A, (h,), B, (tri.twin(p),), A, B, ((ti, g),))]
        while stack:
            g, Plo, clo, Phi, chi, dlo, dhi, path = stack.pop()
            if _seg_dist(Plo, Phi) > L:
                continue
            gt = tri.twin(g)
            n_ = tri.next(gt)
            pr = tri.prev(gt)
            tj = tri.tri_of[gt]
            C = vadd(Plo, fh[n_])
            cC = clo + (n_,)
            inside_lo = _strict_ccw(dlo, C)
            inside_hi = _strict_ccw(C, dhi)
            if inside_lo and inside_hi:
                record(v0, cC, path + ((tj, -1),), h, C)
                if windows is None or _wedge_meets(windows, dlo, C):
                    stack.append((n_, Plo, clo, C, cC, dlo, C, path + ((tj, n_),)))
                if windows is None or _wedge_meets(windows, C, dhi):
                    stack.append((pr, C, cC, Phi, chi, C, dhi, path + ((tj, pr),)))
            elif not inside_lo:
                stack.append((pr, C, cC, Phi, chi, dlo, dhi, path + ((tj, pr),)))
            else:
                stack.append((n_, Plo, clo, C, cC, dlo, dhi, path + ((tj, n_),)))
    out.sort(key=lambda s: (s.length, s.direction))
    q._cache[key] = out
    return out


# ---------------------------------------------------------------------------
# homology


@dataclass
class HomologyBasis:
    absolute_cycles: List[Chain]
    relative_arcs: List[Chain]
    intersection_matrix: List[List[int]]
    raw_cycles: List[Chain]
    raw_intersection_matrix: List[List[int]]

    @property
    def genus(self) -> int:
        return len(self.absolute_cycles) // 2

    def a(self, i: int) -> Chain:
        return self.absolute_cycles[2 * i]

    def b(self, i: int) -> Chain:
        return self.absolute_cycles[2 * i + 1]


def _free_reduce(walk: List[int], tri: Triangulation) -> List[int]:
    out: List[int] = []
    for h in walk:
        if out and out[-1] == tri.twin(h):
            out.pop()
        else:
            out.append(h)
    while len(out) >= 2 and out[0] == tri.twin(out[-1]):
        out = out[1:-1]
    return out


def intersection_number(tri: Triangulation, a, b_walk: Sequence[int]) -> int:
    """Algebraic intersection a . b of a closed chain with a closed walk.

    The walk is pushed slightly to its left; near each vertex where it turns
    from ``h_in`` to ``h_out`` it sweeps clockwise across the outgoing edges
    strictly between ``h_out`` and the reversal of ``h_in``.
    """
    coef = [0] * tri.n_half
    for h, c in _chain_items(a):
        coef[h] += c
        coef[tri.twin(h)] -= c
    walk = list(b_walk)
    n = len(walk)
    total = 0
    for i in range(n):
        h_in, h_out = walk[i], walk[(i + 1) % n]
        stop = tri.twin(h_in)
        if h_out == stop:
            # backtracking would sweep the whole link; walks are reduced first
            raise ValueError("walk backtracks")
        o = tri.ccw_next(h_out)
        guard = 0
        while o != stop:
            total -= coef[o]
            o = tri.ccw_next(o)
            guard += 1
            if guard > tri.n_half:
                raise ValueError("walk is not a closed edge path")
    return total


def _tree_paths(tri: Triangulation):
    """BFS spanning tree of the 1-skeleton; path (half-edges) from root to v."""
    V = len(tri.orbits)
    path = {0: []}
    tree_edges = set()
    frontier = [0]
    while frontier:
        nxt = []
        for v in frontier:
            for h in tri.orbits[v]:
                w = tri.end_vertex(h)
                if w not in path:
                    path[w] = path[v] + [h]
                    tree_edges.add(min(h, tri.twin(h)))
                    nxt.append(w)
        frontier = nxt
    assert len(path) == V
    return path, tree_edges


def _cotree(tri: Triangulation, tree_edges):
    F = len(tri.triangles)
    seen = {0}
    cotree = set()
    frontier = [0]
    while frontier:
        nxt = []
        for t in frontier:
            for h in tri.triangles[t]:
                e = min(h, tri.twin(h))
                if e in tree_edges:
                    continue
                u = tri.tri_of[tri.twin(h)]
                if u not in seen:
                    seen.add(u)
                    cotree.add(e)
                    nxt.append(u)
        frontier = nxt
    assert len(seen) == F
    return cotree


def _ext_gcd_combo(vals: List[int]) -> Tuple[int, List[int]]:
    """g = gcd(vals) and integer x with sum x_i vals_i = g."""
    g, x = 0, [0] * len(vals)
    for i, v in enumerate(vals):
        if v == 0:
            continue
        if g == 0:
            g = abs(v)
            x = [0] * len(vals)
            x[i] = 1 if v > 0 else -1
            continue
        # extended Euclid on (g, v)
        a, b = g, v
        s0, s1, t0, t1 = 1, 0, 0, 1
        while b:
            qq = a // b
            a, b = b, a - qq * b
            s0, s1 = s1, s0 - qq * s1
            t0, t1 = t1, t0 - qq * t1
        if a < 0:
            a, s0, t0 = -a, -s0, -t0
        x = [s0 * xi for xi in x]
        x[i] += t0
        g = a
    return g, x


def _hnf_rows(rows: List[List[int]]) -> List[List[int]]:
    """Integer row reduction; returns a basis of the row lattice."""
    rows = [list(r) for r in rows if any(r)]
    if not rows:
        return []
    ncol = len(rows[0])
    basis = []
    col = 0
    while rows and col < ncol:
        nz = [r for r in rows if r[col] != 0]
        if not nz:
            col += 1
            continue
        while True:
            nz = [r for r in rows if r[col] != 0]
            if len(nz) <= 1:
                break
            piv = min(nz, key=lambda r: abs(r[col]))
            for r in nz:
                if r is piv:
                    continue
                qq = r[col] // piv[col]
                for k in range(ncol):
                    r[k] -= qq * piv[k]
            rows = [r for r in rows if any(r)]
        piv = [r for r in rows if r[col] != 0][0]
        basis.append(piv)
        rows = [r for r in rows if r is not piv]
        col += 1
    return basis


def _symplectic_reduce(Q: List[List[int]]) -> List[List[int]]:
    """Integer change of basis bringing an antisymmetric unimodular form to
    the standard shape with a_i . b_i = 1.  Returns the new basis vectors as
    coordinate rows in the old basis, ordered a_1, b_1, a_2, b_2, ..."""
    n = len(Q)

    def form(u, v):
        return sum(u[i] * Q[i][j] * v[j] for i in range(n) for j in range(n) if u[i] and v[j])

    V = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    out = []
    while V:
        a = V[0]
        rest = V[1:]
        vals = [form(a, u) for u in rest]
        g, x = _ext_gcd_combo(vals)
        if g != 1:
            raise ValueError("intersection form is not unimodular")
        b = [sum(x[j] * rest[j][k] for j in range(len(rest))) for k in range(n)]
        out.extend([a, b])
        proj = []
        for u in rest:
            ub, ua = form(u, b), form(u, a)
            proj.append([u[k] - ub * a[k] + ua * b[k] for k in range(n)])
        V = _hnf_rows(proj)
    return out


def homology_basis(q) -> HomologyBasis:
    """Symplectic basis of H_1(S) plus arcs joining the marked points.

    Cycles come from a tree/cotree decomposition; their intersection matrix
    is computed combinatorially and reduced to the standard symplectic form.
    The basis depends only on the triangulation and is cached there.
    """
    tri = q.tri if isinstance(q, TranslationSurface) else q
    if tri._homology is not None:
        return tri._homology
    path, tree_edges = _tree_paths(tri)
    cotree = _cotree(tri, tree_edges)
    leftover = [e for e in tri.edge_reps() if e not in tree_edges and e not in cotree]
    assert len(leftover) == 2 * tri.genus
    walks = []
    for e in leftover:
        u, w = tri.vertex_of[e], tri.end_vertex(e)
        walk = path[u] + [e] + [tri.twin(h) for h in reversed(path[w])]
        walks.append(_free_reduce(walk, tri))
    raw = [chain_from_path(w) for w in walks]
    n = len(walks)
    Q = [[intersection_number(tri, raw[i], walks[j]) for j in range(n)] for i in range(n)]
    if n:
        coords = _symplectic_reduce(Q)
    else:
        coords = []
    cycles = []
    for row in coords:
        ch: Chain = {}
        for j, c in enumerate(row):
            if c:
                ch = chain_add(ch, raw[j], c)
        cycles.append(ch)
    reduced = [[sum(coords[i][k] * Q[k][l] * coords[j][l]
                    for k in range(n) for l in range(n)) for j in range(n)] for i in range(n)]
    arcs = [chain_from_path(path[v]) for v in range(1, len(tri.orbits))]
    hb = HomologyBasis(cycles, arcs, reduced, raw, Q)
    tri._homology = hb
    return hb


def standard_symplectic(g: int) -> List[List[int]]:
    n = 2 * g
    J = [[0] * n for _ in range(n)]
    for i in range(g):
        J[2 * i][2 * i + 1] = 1
        J[2 * i + 1][2 * i] = -1
    return J
