"""SL(2,R) action in period coordinates and the sup-norm Finsler metric."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from .errors import OrientationViolation
from .numbers import TOL, is_exact
from .surface_core import (
    Cochain1,
    SaddleConnection,
    TranslationSurface,
    enumerate_saddle_connections,
)


@dataclass(frozen=True)
class Mat2:
    a: object
    b: object
    c: object
    d: object

    def __post_init__(self):
        det = self.det
        if not det > 0:
            raise OrientationViolation("matrix must have positive determinant")
        if is_exact(det):
            if det != 1:
                raise ValueError(f"determinant {det} is not 1")
        elif abs(float(det) - 1.0) > 1e-9:
            raise ValueError(f"determinant {float(det)} is not 1")

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(self.a * other.a + self.b * other.c, self.a * other.b + self.b * other.d,
                    self.c * other.a + self.d * other.c, self.c * other.b + self.d * other.d)

    def apply(self, v):
        return (self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1])

    def inverse(self) -> "Mat2":
        return Mat2(self.d, -self.b, -self.c, self.a)

    def op_norm(self) -> float:
        a, b, c, d = (float(x) for x in (self.a, self.b, self.c, self.d))
        s = a * a + b * b + c * c + d * d
        det = a * d - b * c
        return math.sqrt((s + math.sqrt(max(s * s - 4 * det * det, 0.0))) / 2)

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1, 0, 0, 1)

    @classmethod
    def u(cls, s) -> "Mat2":
        """Horocycle element [[1, s], [0, 1]]."""
        return cls(1, s, 0, 1)

    @classmethod
    def g(cls, t: float) -> "Mat2":
        """Geodesic element diag(e^t, e^-t)."""
        return cls(math.exp(t), 0.0, 0.0, math.exp(-t))

    @classmethod
    def g_tilde(cls, t: float) -> "Mat2":
        return cls.g(-t)

    @classmethod
    def r(cls, theta: float) -> "Mat2":
        c, s = math.cos(theta), math.sin(theta)
        return cls(c, -s, s, c)

    @classmethod
    def diag(cls, a) -> "Mat2":
        return cls(a, 0, 0, 1 / a)


def apply_matrix(q: TranslationSurface, g: Mat2) -> TranslationSurface:
    """Post-compose every chart with ``g``."""
    hol = [g.apply(v) for v in q.hol]
    return TranslationSurface(q.tri, hol, meta=q.meta)


def horocycle_factor(s: float) -> float:
    """||u_s|| * ||u_s^-1|| in operator norm."""
    s = float(s)
    return 1 + (s * s + abs(s) * math.sqrt(s * s + 4)) / 2


def geodesic_factor(t: float) -> float:
    return math.exp(2 * abs(float(t)))


# ---------------------------------------------------------------------------
# sup norm


def _pair(beta):
    if isinstance(beta, Cochain1):
        return beta, None
    if hasattr(beta, "cochain"):
        return beta.cochain, None
    bx, by = beta
    return bx, by


def _ratio(bx, by, sc_chain, hol) -> float:
    vx = float(sum(bx.values[h] for h in sc_chain))
    if by is None:
        num = abs(vx)
    else:
        num = math.hypot(vx, float(sum(by.values[h] for h in sc_chain)))
    return num / math.hypot(float(hol[0]), float(hol[1]))


def default_L_max(q: TranslationSurface) -> float:
    return 5 * q.diameter_estimate()


def sup_norm(q: TranslationSurface, beta, L_max: Optional[float] = None
             ) -> Tuple[float, Optional[SaddleConnection]]:
    """Truncated sup-norm of a cochain.

    ``beta`` is a single cochain (an x-direction tangent vector) or a pair
    ``(beta_x, beta_y)``.  The value is the largest ratio |beta(s)| / len(s)
    over saddle connections s of length at most ``L_max``; it can only grow
    as ``L_max`` grows, so it is a lower bound for the full supremum.
    """
    L = default_L_max(q) if L_max is None else L_max
    bx, by = _pair(beta)
    best, arg = 0.0, None
    for sc in enumerate_saddle_connections(q, L):
        r = _ratio(bx, by, sc.chain, sc.holonomy)
        if r > best:
            best, arg = r, sc
    return best, arg


def dist_upper(path: Callable[[float], Tuple[TranslationSurface, object]], n_steps: int = 32,
               L_max: Optional[float] = None) -> float:
    """Midpoint Riemann sum of the sup-norm speed along a path.

    ``path(tau)`` returns ``(surface, tangent)`` for tau in [0, 1], where
    ``tangent`` is the derivative in period coordinates (a cochain for a
    purely horizontal motion, or a pair of cochains).
    """
    total = 0.0
    for i in range(n_steps):
        tau = (i + 0.5) / n_steps
        q, tangent = path(tau)
        val, _ = sup_norm(q, tangent, L_max)
        total += val
    return total / n_steps


def linear_path(q0: TranslationSurface, q1: TranslationSurface):
    """Straight segment in period coordinates between surfaces on one chart."""
    if not q0.tri.same_combinatorics(q1.tri):
        raise ValueError("surfaces must share a triangulation")
    dx = Cochain1([float(b[0]) - float(a[0]) for a, b in zip(q0.hol, q1.hol)])
    dy = Cochain1([float(b[1]) - float(a[1]) for a, b in zip(q0.hol, q1.hol)])
    h0 = q0.float_hol

    def path(tau):
        hol = [(a[0] + tau * ex, a[1] + tau * ey) for a, ex, ey in zip(h0, dx.values, dy.values)]
        return TranslationSurface(q0.tri, hol), (dx, dy)

    return path


@dataclass
class DeviationRow:
    kind: str
    value: float
    lhs: float
    rhs: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-9) + 1e-12


@dataclass
class DeviationReport:
    rows: List[DeviationRow]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def violations(self) -> List[DeviationRow]:
        return [r for r in self.rows if not r.passed]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s_or_t", "lhs", "rhs", "pass"])
        for r in self.rows:
            w.writerow([f"{r.kind}={r.value:g}", repr(r.lhs), repr(r.rhs), r.passed])
        return buf.getvalue()


def _moved_ratio(g: Mat2, dx, dy, chain, hol) -> float:
    vx = sum(dx.values[h] for h in chain)
    vy = sum(dy.values[h] for h in chain)
    w = g.apply((vx, vy))
    hv = g.apply((float(hol[0]), float(hol[1])))
    return math.hypot(*w) / math.hypot(*hv)


def deviation_check(q0: TranslationSurface, q1: TranslationSurface,
                    s_grid: Sequence[float] = (), t_grid: Sequence[float] = (),
                    n_steps: int = 8, L_max: Optional[float] = None) -> DeviationReport:
    """Check the horocycle and geodesic deviation bounds on a grid.

    Distances are Riemann sums along the straight chart path from q0 to q1
    and its images.  The saddle-connection family at each path point is
    enumerated once on the base path and reused on every moved path, so the
    truncation is the same on both sides of each inequality.
    """
    path = linear_path(q0, q1)
    families = []
    for i in range(n_steps):
        tau = (i + 0.5) / n_steps
        q, (dx, dy) = path(tau)
        L = default_L_max(q) if L_max is None else L_max
        fam = []
        for sc in enumerate_saddle_connections(q, L):
            hol = (sum(q.float_hol[h][0] for h in sc.chain), sum(q.float_hol[h][1] for h in sc.chain))
            fam.append((sc.chain, hol))
        families.append((fam, dx, dy))

    def dist(g: Mat2) -> float:
        total = 0.0
        for fam, dx, dy in families:
            best = 0.0
            for chain, hol in fam:
                r = _moved_ratio(g, dx, dy, chain, hol)
                if r > best:
                    best = r
            total += best
        return total / n_steps

    base = dist(Mat2.identity())
    rows = []
    for s in s_grid:
        rows.append(DeviationRow("s", float(s), dist(Mat2.u(float(s))), horocycle_factor(s) * base))
    for t in t_grid:
        rows.append(DeviationRow("t", float(t), dist(Mat2.g(float(t))), geodesic_factor(t) * base))
    return DeviationReport(rows)
