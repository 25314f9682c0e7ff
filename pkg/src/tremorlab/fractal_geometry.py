"""Thin parts of convex bodies, covering numbers and box-counting dimension."""

from __future__ import annotations

import io
import csv
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import ChartEscape, Degenerate, InsufficientData


def thin_constant(d: int) -> float:
    """c = 1 / (2^(d+2) d)."""
    return 1.0 / (2 ** (d + 2) * d)


def thin_bound_constant(d: int) -> float:
    """C = 6 C' with C' = 3^(d-1) (d-1) / (2^(d-1) - 1)."""
    return 6.0 * 3 ** (d - 1) * (d - 1) / (2 ** (d - 1) - 1)


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


# ---------------------------------------------------------------------------
# convex bodies


class ConvexBody:
    """Convex hull of finitely many points, stored by its facet inequalities."""

    def __init__(self, vertices):
        pts = np.asarray(vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < pts.shape[1] + 1:
            raise Degenerate("need at least d + 1 points")
        self.d = pts.shape[1]
        try:
            hull = ConvexHull(pts)
        except QhullError as ex:
            raise Degenerate(f"points do not span R^{self.d}") from ex
        self.vertices = pts[hull.vertices]
        self._hull = hull
        eq = hull.equations
        self.normals = eq[:, :-1]
        self.offsets = eq[:, -1]          # normals . x + offsets <= 0 inside
        self.volume = float(hull.volume)
        self.lo = self.vertices.min(axis=0)
        self.hi = self.vertices.max(axis=0)
        self._inradius: Optional[Tuple[float, np.ndarray]] = None
        if self.volume <= 0:
            raise Degenerate("zero volume")

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(max(np.linalg.norm(a - b) for a, b in combinations(v, 2)))

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.all(x @ self.normals.T + self.offsets <= tol, axis=1)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform points by rejection from the bounding box."""
        out = []
        got = 0
        box = float(np.prod(self.hi - self.lo))
        rate = max(self.volume / box, 1e-6)
        while got < n:
            m = int(1.2 * (n - got) / rate) + 16
            cand = rng.uniform(self.lo, self.hi, size=(m, self.d))
            keep = cand[self.contains(cand)]
            out.append(keep)
            got += len(keep)
        return np.concatenate(out)[:n]

    def ridges(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """Faces of dimension d - 2 as segments (vertices in the plane)."""
        h = self._hull
        if self.d == 2:
            return [(h.points[i], h.points[i]) for i in h.vertices]
        if self.d != 3:
            raise NotImplementedError("ridges are implemented for d = 2, 3")
        out = {}
        for s, simplex in enumerate(h.simplices):
            for j, nb in enumerate(h.neighbors[s]):
                if np.allclose(h.equations[s], h.equations[nb], atol=1e-12):
                    continue
                key = tuple(sorted(int(v) for k, v in enumerate(simplex) if k != j))
                out[key] = (h.points[key[0]], h.points[key[1]])
        return list(out.values())

    def incenter(self) -> Tuple[float, np.ndarray]:
        if self._inradius is None:
            self._inradius = _inradius_lp(self)
        return self._inradius


def _inradius_lp(K: ConvexBody) -> Tuple[float, np.ndarray]:
    # maximise r subject to n_i . x + r |n_i| <= -b_i (normals are unit length)
    d = K.d
    norms = np.linalg.norm(K.normals, axis=1)
    A = np.hstack([K.normals, norms[:, None]])
    b = -K.offsets
    c = np.zeros(d + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * d + [(0, None)], method="highs")
    if res.status != 0:
        raise Degenerate("inradius program failed")
    r = float(res.x[-1])
    if r <= 1e-14:
        raise Degenerate("inradius is zero")
    return r, res.x[:-1]


def inradius(K: ConvexBody) -> float:
    """Radius of the largest inscribed ball."""
    return K.incenter()[0]


def regular_polygon(n: int, radius: float = 1.0) -> ConvexBody:
    a = 2 * math.pi * np.arange(n) / n
    return ConvexBody(np.c_[radius * np.cos(a), radius * np.sin(a)])


def box(*sides: float) -> ConvexBody:
    d = len(sides)
    corners = np.array(list(np.ndindex(*(2,) * d)), dtype=float) * np.array(sides)
    return ConvexBody(corners)


def random_polytope(d: int, rng: np.random.Generator, min_points: int = 3, max_points: int = 30,
                    fatness: float = 0.05) -> ConvexBody:
    """Hull of 3 to 30 uniform points in the unit box, kept if inradius >= 0.05 diameter."""
    for _ in range(10000):
        m = int(rng.integers(max(min_points, d + 1), max_points + 1))
        pts = rng.uniform(0, 1, size=(m, d))
        try:
            K = ConvexBody(pts)
            if inradius(K) >= fatness * K.diameter:
                return K
        except Degenerate:
            continue
    raise Degenerate("rejection sampling of polytopes did not terminate")


# ---------------------------------------------------------------------------
# thin parts


@dataclass
class ThinEstimate:
    fraction: float
    sigma: float
    eps: float
    n_outer: int
    n_inner: int
    seed: int
    threshold: float


def _ball_points(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1)[:, None]
    r = rng.uniform(0, 1, n) ** (1.0 / d)
    return g * r[:, None]


def eps_thin_estimate(K: ConvexBody, eps: float, n_outer: int = 2000, n_inner: int = 512,
                      seed: int = 0, c: Optional[float] = None, relative: bool = False,
                      margin: float = 2.0) -> ThinEstimate:
    """Monte-Carlo estimate of the volume fraction of the eps-thin part.

    A point x of K is thin when |B(x, eps R) cap K| <= c (eps R)^d (or, with
    ``relative=True``, < c |B(x, eps R)|).  The ball mass is estimated from
    ``n_inner`` uniform points; a point whose estimate lies within ``margin``
    standard errors of the threshold is counted as thin.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    d = K.d
    R = inradius(K)
    r = eps * R
    vb = unit_ball_volume(d) * r ** d
    if relative:
        thr_frac = c
    else:
        thr_frac = (thin_constant(d) if c is None else c) * r ** d / vb
    xs = K.sample(n_outer, rng)
    offs = _ball_points(d, n_inner, rng) * r
    thin = 0
    for x in xs:
        f = float(np.mean(K.contains(x + offs)))
        se = math.sqrt(max(f * (1 - f), 1.0 / n_inner) / n_inner)
        if f - margin * se <= thr_frac:
            thin += 1
    p = thin / n_outer
    sigma = math.sqrt(max(p * (1 - p), 0.0) / n_outer)
    return ThinEstimate(p, sigma, eps, n_outer, n_inner, seed, thr_frac)


def eps_thin_fraction(K: ConvexBody, eps: float, n_outer: int = 2000, n_inner: int = 512,
                      seed: int = 0) -> float:
    return eps_thin_estimate(K, eps, n_outer, n_inner, seed).fraction


def thin_points(K: ConvexBody, eps: float, c_bar: float, per_ball: float = 40.0,
                n_inner: int = 512, seed: int = 0) -> np.ndarray:
    """Sample the relative thin set {x : |B(x, eps R) cap K| < c_bar |B(x, eps R)|}.

    A point with at most one facet plane inside its ball keeps at least half
    of the ball, so for c_bar < 1/2 the thin set lies within eps R of the
    faces of dimension d - 2.  Candidates are drawn in balls of radius
    2 eps R around those faces, about ``per_ball`` per eps R of face length,
    and classified by Monte-Carlo.  The sample is dense in the thin set but
    not uniform, which is all a covering count needs.
    """
    if c_bar >= 0.5:
        raise ValueError("c_bar must be below 1/2")
    rng = np.random.default_rng(seed)
    d = K.d
    r = eps * inradius(K)
    cands = []
    for a, b in K.ridges():
        m = int(per_ball * (np.linalg.norm(b - a) / r + 1))
        base = a + rng.uniform(0, 1, (m, 1)) * (b - a)
        cands.append(base + _ball_points(d, m, rng) * 2 * r)
    X = np.concatenate(cands)
    X = X[K.contains(X)]
    dist = -(X @ K.normals.T + K.offsets)
    X = X[np.partition(dist, 1, axis=1)[:, 1] < r]
    offs = _ball_points(d, n_inner, rng) * r
    keep = [x for x in X if np.mean(K.contains(x + offs)) < c_bar]
    return np.array(keep).reshape(-1, d)


@dataclass
class ThinCover:
    eps: float
    points: int
    count: int
    bound_constant: float    # count / (|K| eps^(2-d) R^-d)


def thin_cover_counts(K: ConvexBody, eps_grid: Sequence[float], c_bar: float, seed: int = 0,
                      per_ball: float = 40.0, n_inner: int = 512) -> List[ThinCover]:
    d = K.d
    R = inradius(K)
    out = []
    for i, e in enumerate(eps_grid):
        P = thin_points(K, e, c_bar, per_ball=per_ball, n_inner=n_inner, seed=seed + i)
        N = covering_number(P, e * R, method="net") if len(P) else 0
        out.append(ThinCover(e, len(P), N, N / (K.volume * e ** (2 - d) * R ** (-d))))
    return out


# ---------------------------------------------------------------------------
# covering numbers


def _disk_candidates(P: np.ndarray, R: float) -> np.ndarray:
    cands = [p for p in P]
    for a, b in combinations(range(len(P)), 2):
        u = P[b] - P[a]
        dist = float(np.linalg.norm(u))
        if dist == 0 or dist > 2 * R * (1 + 1e-12):
            continue
        m = (P[a] + P[b]) / 2
        cands.append(m)
        if P.shape[1] == 2:
            h = math.sqrt(max(R * R - dist * dist / 4, 0.0))
            n = np.array([-u[1], u[0]]) / dist
            cands.append(m + h * n)
            cands.append(m - h * n)
    return np.array(cands)


def _exact_cover(P: np.ndarray, R: float) -> int:
    cands = _disk_candidates(P, R)
    masks = set()
    for c in cands:
        inside = np.linalg.norm(P - c, axis=1) <= R * (1 + 1e-9)
        masks.add(sum(1 << int(i) for i in np.flatnonzero(inside)))
    # drop masks contained in another one
    masks = sorted(masks, key=lambda m: -bin(m).count("1"))
    kept: List[int] = []
    for m in masks:
        if not any(m | k == k for k in kept):
            kept.append(m)
    full = (1 << len(P)) - 1
    best = [len(P)]

    def search(covered: int, used: int) -> None:
        if covered == full:
            best[0] = min(best[0], used)
            return
        if used + 1 >= best[0]:
            return
        low = (~covered & full) & -(~covered & full)   # lowest uncovered point
        for m in kept:
            if m & low:
                search(covered | m, used + 1)

    search(0, 0)
    return best[0]


def _line_coordinates(P: np.ndarray, tol: float = 1e-12) -> Optional[np.ndarray]:
    """Positions along a line if the points are collinear, else None."""
    if P.shape[1] == 1:
        return P[:, 0]
    X = P - P.mean(axis=0)
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    if len(s) > 1 and s[1] > tol * max(1.0, s[0]):
        return None
    return X @ vt[0]


def _interval_cover(x: np.ndarray, R: float) -> int:
    """Optimal count on a line: each interval starts at the first uncovered point."""
    x = np.sort(x)
    count, i = 0, 0
    while i < len(x):
        count += 1
        i = int(np.searchsorted(x, x[i] + 2 * R * (1 + 1e-12), side="right"))
    return count


def _greedy_max_cover(P: np.ndarray, R: float) -> int:
    tree = cKDTree(P)
    nbrs = [set(x) for x in tree.query_ball_point(P, R)]
    uncovered = set(range(len(P)))
    count = 0
    while uncovered:
        best = max(uncovered, key=lambda i: len(nbrs[i] & uncovered))
        # a center anywhere on the sample: pick the one covering most
        cand = max(range(len(P)), key=lambda i: len(nbrs[i] & uncovered)) if len(P) <= 400 else best
        uncovered -= nbrs[cand]
        count += 1
    return count


def _greedy_net(P: np.ndarray, R: float) -> int:
    tree = cKDTree(P)
    covered = np.zeros(len(P), dtype=bool)
    count = 0
    for i in range(len(P)):
        if covered[i]:
            continue
        count += 1
        covered[tree.query_ball_point(P[i], R)] = True
    return count


def covering_number(points, R: float, method: str = "auto") -> int:
    """Upper bound for the number of radius-R balls needed to cover the points.

    Collinear sets are covered exactly by sweeping intervals of length 2R.
    Up to 20 points in the plane the count is exact: optimal disks can be
    moved to pass through two points or to be centered on one.
    Up to 400 points a max-coverage greedy over sample-centered balls is
    used, beyond that a greedy R-net.  Greedy counts lie between N(A, R)
    and N(A, R/2).
    """
    P = np.unique(np.atleast_2d(np.asarray(points, dtype=float)), axis=0)
    if len(P) == 0:
        return 0
    if R <= 0:
        return len(P)
    if method == "auto":
        line = _line_coordinates(P)
        if line is not None:
            return _interval_cover(line, R)
        if len(P) <= 20 and P.shape[1] <= 2:
            method = "exact"
        elif len(P) <= 3000:
            method = "greedy"
        else:
            method = "net"
    if method == "exact":
        return _exact_cover(P, R)
    if method == "greedy":
        return _greedy_max_cover(P, R)
    return _greedy_net(P, R)


# ---------------------------------------------------------------------------
# box dimension


@dataclass
class CoverReport:
    radii: List[float]
    counts: List[int]
    slope: float
    ci: Tuple[float, float]
    stderr: float
    raw_counts: List[int] = field(default_factory=list)
    seed: Optional[int] = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["R", "N", "logN"])
        for R, N in zip(self.radii, self.counts):
            w.writerow([repr(R), N, repr(math.log(N))])
        buf.write(f"# slope={self.slope:.6f} ci=[{self.ci[0]:.6f},{self.ci[1]:.6f}]"
                  f" seed={self.seed}\n")
        return buf.getvalue()


def grid_count(points, R: float) -> int:
    """Number of cells of the grid R Z^d that contain a point."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    return int(len(np.unique(np.floor(P / R).astype(np.int64), axis=0)))


def box_dim_estimate(points, R_grid: Sequence[float], confidence: float = 0.95,
                     min_points: int = 1000, seed: Optional[int] = None,
                     count: str = "grid") -> CoverReport:
    """Least-squares slope of log N(R) against log(1/R).

    ``count="grid"`` counts occupied cells of side R (classical box counting),
    ``count="cover"`` uses greedy ball covers.  Both are within constant
    factors of the covering number, so the slope estimates the same
    dimension; grid counts have the smaller boundary term.  Counts are made
    nonincreasing in R by a running maximum from the largest radius down;
    the raw counts are kept in the report.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    radii = sorted(float(r) for r in R_grid)
    if len(P) < min_points:
        raise InsufficientData(f"need at least {min_points} points, got {len(P)}")
    if len(radii) < 4 or radii[-1] / radii[0] < 10 * (1 - 1e-12):
        raise InsufficientData("need at least 4 radii spanning a decade")
    radii = radii[::-1]  # largest first
    if count == "grid":
        raw = [grid_count(P, R) for R in radii]
    elif count == "cover":
        raw = [covering_number(P, R, method="net") for R in radii]
    else:
        raise ValueError(f"unknown count {count!r}")
    counts = []
    for c in raw:
        counts.append(max(c, counts[-1]) if counts else c)
    x = np.log(1 / np.array(radii))
    y = np.log(np.array(counts, dtype=float))
    if np.ptp(y) == 0:
        return CoverReport(radii, counts, 0.0, (0.0, 0.0), 0.0, raw, seed)
    fit = stats.linregress(x, y)
    tq = stats.t.ppf(0.5 + confidence / 2, len(x) - 2)
    half = tq * fit.stderr
    return CoverReport(radii, counts, float(fit.slope), (float(fit.slope - half), float(fit.slope + half)),
                       float(fit.stderr), raw, seed)


class BoxDimensionEstimator:
    """Estimator-style wrapper: ``fit(points)`` then read ``dimension_``."""

    def __init__(self, radii: Sequence[float] = (0.1, 0.05, 0.02, 0.01), confidence: float = 0.95,
                 min_points: int = 1000, count: str = "grid"):
        self.radii = radii
        self.confidence = confidence
        self.min_points = min_points
        self.count = count

    def get_params(self, deep: bool = True) -> dict:
        return {"radii": self.radii, "confidence": self.confidence, "min_points": self.min_points,
                "count": self.count}

    def set_params(self, **params) -> "BoxDimensionEstimator":
        for k, v in params.items():
            if k not in self.get_params():
                raise ValueError(f"unknown parameter {k}")
            setattr(self, k, v)
        return self

    def fit(self, X, y=None) -> "BoxDimensionEstimator":
        self.report_ = box_dim_estimate(X, self.radii, self.confidence, self.min_points,
                                        count=self.count)
        self.dimension_ = self.report_.slope
        self.ci_ = self.report_.ci
        return self

    def score(self, X, y=None) -> float:
        other = box_dim_estimate(X, self.radii, self.confidence, self.min_points, count=self.count)
        return -abs(other.slope - self.dimension_)


# ---------------------------------------------------------------------------
# calibration clouds


def unit_square_cloud(n: int, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0, 1, size=(n, 2))


def cantor_cloud(depth: int = 12, n: Optional[int] = None, seed: int = 0) -> np.ndarray:
    """Left endpoints of the middle-thirds construction at the given depth,
    or ``n`` random points of that level if ``n`` is given."""
    if n is None:
        digits = np.array(list(np.ndindex(*(2,) * depth)), dtype=float) * 2
    else:
        digits = np.random.default_rng(seed).integers(0, 2, size=(n, depth)).astype(float) * 2
    x = digits @ (3.0 ** -np.arange(1, depth + 1))
    return x[:, None]


# ---------------------------------------------------------------------------
# tremor clouds


@dataclass
class TremorSample:
    points: np.ndarray
    shears: np.ndarray            # tremor parameter b of each point (0 when a = 0)
    masses: np.ndarray            # |L| of the balanced cocycle used
    escaped: int
    seed: int
    a: float


BASE_LATTICE = ((1.0, math.sqrt(2) - 1.0), (0.3, 1.0 + math.sqrt(3) / 10))
BASE_SLIT = (0.37, 0.0)


def _cloud_point(u, v, w, b):
    """Edge holonomies of a slit pair after a balanced tremor along the slit direction.

    The pair is rotated so that the slit is horizontal, torus A is sheared
    by u_b and torus B by u_{-b} (the tremor by b (r_A - r_B) at time 1, of
    total variation |b|), and the result is rotated back.
    """
    from .eigenform_locus import SlitTorusData, slit_construct

    q, _ = slit_construct(SlitTorusData((u, v), w, (0.0, 0.0), normalize=True))
    if b == 0:
        return np.array([c for h in q.tri.edge_reps() for c in q.float_hol[h]])
    phi = math.atan2(w[1], w[0])
    c, s = math.cos(phi), math.sin(phi)
    out = []
    A = set(h for ti in q.meta["regions"]["A"] for h in q.tri.triangles[ti])
    for h in q.tri.edge_reps():
        x, y = q.float_hol[h]
        xr, yr = c * x + s * y, -s * x + c * y
        xr += (b if h in A else -b) * yr
        out.extend((c * xr - s * yr, s * xr + c * yr))
    return np.array(out)


def sample_tremor_set(a: float, n: int, seed: int = 0, spread: float = 0.05,
                      base_lattice=BASE_LATTICE, base_slit=BASE_SLIT) -> TremorSample:
    """Points of the tremor set of total variation at most ``a`` near a base chart.

    Each point is a slit pair with all six lattice and slit coordinates
    perturbed uniformly by at most ``spread`` (area normalized, so the a = 0
    cloud fills a 5-dimensional piece of the locus), followed by a balanced
    tremor b (r_A - r_B) with |b| <= a along the slit direction.  Samples
    whose fan triangulation changes combinatorics are dropped and counted.
    """
    if a < 0:
        raise ValueError("a must be nonnegative")
    rng = np.random.default_rng(seed)
    pts, shears = [], []
    escaped = 0
    ref_shape = None
    while len(pts) < n:
        du = rng.uniform(-spread, spread, 6)
        u = (base_lattice[0][0] + du[0], base_lattice[0][1] + du[1])
        v = (base_lattice[1][0] + du[2], base_lattice[1][1] + du[3])
        w = (base_slit[0] + du[4], base_slit[1] + du[5])
        b = float(rng.uniform(-a, a)) if a > 0 else 0.0
        try:
            x = _cloud_point(u, v, w, b)
        except Exception:
            escaped += 1
            continue
        if ref_shape is None:
            ref_shape = x.shape
        if x.shape != ref_shape or not np.all(np.isfinite(x)):
            escaped += 1
            continue
        pts.append(x)
        shears.append(b)
    if escaped > n:
        raise ChartEscape(f"{escaped} samples left the chart")
    sh = np.array(shears)
    return TremorSample(np.array(pts), sh, np.abs(sh), escaped, seed, a)
