"""Exact rational plane geometry: types and pure predicates.

Everything here is host arithmetic over :class:`fractions.Fraction`; no
simulator cores are involved.  The machine-level pipeline charges its memory
traffic separately and calls these kernels for the mathematics, so every
geometric decision is exact and bit-reproducible — there are no epsilon
tolerances anywhere.

Conventions: a half-plane ``(a, b, c)`` admits the points with
``a*x + b*y <= c``; hull chains are counterclockwise and strictly convex
(no repeated or collinear vertices) after :func:`canonical_chain`.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from pemlab.machine import MachineFault

__all__ = [
    "GeometryError",
    "HalfPlane",
    "HullChain",
    "Point2",
    "Sector",
    "angle_key",
    "canonical_chain",
    "ccw_between",
    "clip_chain",
    "convex_hull_points",
    "cross",
    "dominates",
    "feasible",
    "frac",
    "halfplane",
    "intersect_halfplanes",
    "intersect_halfplanes_ordered",
    "line_intersect",
    "point2",
    "translate_plane",
    "unbounded_directions",
]


class GeometryError(MachineFault):
    """A geometric precondition does not hold (unbounded, infeasible, ...)."""


def frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


class Point2(NamedTuple):
    """A point; compares lexicographically like the tuple it is."""

    x: Fraction
    y: Fraction


class HalfPlane(NamedTuple):
    """The constraint ``a*x + b*y <= c`` with ``(a, b) != (0, 0)``."""

    a: Fraction
    b: Fraction
    c: Fraction


class Sector(NamedTuple):
    """An angular wedge at ``apex`` from ``ray_lo`` to ``ray_hi`` (ccw)."""

    apex: Point2
    ray_lo: Point2
    ray_hi: Point2
    index: int


def point2(x, y) -> Point2:
    return Point2(frac(x), frac(y))


def halfplane(a, b, c) -> HalfPlane:
    a, b, c = frac(a), frac(b), frac(c)
    if a == 0 and b == 0:
        raise GeometryError("half-plane normal must be nonzero")
    return HalfPlane(a, b, c)


def cross(o: Point2, p: Point2, q: Point2) -> Fraction:
    """Signed area of the turn o->p->q; positive means counterclockwise."""
    return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])


def dominates(p, q) -> bool:
    """Strict dominance: both coordinates strictly larger."""
    return p[0] > q[0] and p[1] > q[1]


def line_intersect(h: HalfPlane, g: HalfPlane) -> Point2 | None:
    """Intersection point of the two boundary lines, or None if parallel."""
    det = h.a * g.b - g.a * h.b
    if det == 0:
        return None
    x = (h.c * g.b - g.c * h.b) / det
    y = (h.a * g.c - g.a * h.c) / det
    return Point2(x, y)


def feasible(pt, planes, strict: bool = False) -> bool:
    x, y = pt[0], pt[1]
    if strict:
        return all(h.a * x + h.b * y < h.c for h in planes)
    return all(h.a * x + h.b * y <= h.c for h in planes)


def translate_plane(h: HalfPlane, origin: Point2) -> HalfPlane:
    """Rewrite ``h`` in coordinates centered at ``origin``."""
    return HalfPlane(h.a, h.b, h.c - h.a * origin[0] - h.b * origin[1])


def angle_key(v) -> tuple:
    """Sort key ordering nonzero vectors counterclockwise from (1, 0).

    Exact: four angular classes (east axis, upper half, west axis, lower
    half); within an open half-plane the counterclockwise angle increases
    with -x/y, so the key is a pair of rationals with no magnitude limits.
    """
    x, y = v[0], v[1]
    if x == 0 and y == 0:
        raise GeometryError("zero direction has no angle")
    if y == 0:
        return (0 if x > 0 else 2, Fraction(0))
    return (1 if y > 0 else 3, -Fraction(x) / y)


def ccw_between(lo: Point2, hi: Point2, v) -> bool:
    """Is direction ``v`` in the half-open wedge [lo, hi) going ccw?"""
    klo, kv, khi = angle_key(lo), angle_key(v), angle_key(hi)
    if klo == khi:
        return kv == klo
    if klo < khi:
        return klo <= kv < khi
    return kv >= klo or kv < khi


def unbounded_directions(planes) -> bool:
    """True when the intersection admits an unbounded (recession) direction.

    The intersection is bounded iff the constraint normals positively span
    the plane: every counterclockwise gap between consecutive normal
    directions must be strictly less than pi.  A gap of pi or more leaves a
    direction d with n . d <= 0 for every normal n, along which feasible
    points can escape to infinity.
    """
    seen = {}
    for h in planes:
        seen.setdefault(angle_key((h.a, h.b)), (h.a, h.b))
    vecs = [v for _, v in sorted(seen.items())]
    m = len(vecs)
    if m < 3:
        return True
    for i in range(m):
        u = vecs[i]
        w = vecs[(i + 1) % m]
        # ccw gap from u to w is < pi iff w lies strictly left of u
        if u[0] * w[1] - u[1] * w[0] <= 0:
            return True
    return False


def canonical_chain(vertices) -> tuple:
    """Rotate/clean a ccw vertex cycle: dedupe, drop collinear, start at the
    lexicographically smallest vertex."""
    pts = [Point2(frac(p[0]), frac(p[1])) for p in vertices]
    out = []
    for p in pts:
        if not out or out[-1] != p:
            out.append(p)
    if len(out) > 1 and out[0] == out[-1]:
        out.pop()
    changed = True
    while changed and len(out) > 2:
        changed = False
        keep = []
        m = len(out)
        for i in range(m):
            if cross(out[i - 1], out[i], out[(i + 1) % m]) != 0:
                keep.append(out[i])
            else:
                changed = True
        out = keep
    if not out:
        return tuple()
    start = min(range(len(out)), key=lambda i: out[i])
    return tuple(out[start:] + out[:start])


def clip_chain(vertices, h: HalfPlane) -> list:
    """Clip a convex ccw vertex cycle by one half-plane, exactly.

    One Sutherland-Hodgman step keeping points with ``a*x + b*y <= c``;
    boundary points count as inside.  The output cycle may contain
    duplicate or collinear points (clean with :func:`canonical_chain`);
    it is empty when nothing survives.
    """
    pts = [Point2(frac(p[0]), frac(p[1])) for p in vertices]
    k = len(pts)
    out: list = []
    for i in range(k):
        p, q = pts[i], pts[(i + 1) % k]
        fp = h.a * p.x + h.b * p.y - h.c
        fq = h.a * q.x + h.b * q.y - h.c
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            t = fp / (fp - fq)
            out.append(Point2(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)))
    return out


def convex_hull_points(pts) -> tuple:
    """Strictly convex ccw hull of a point set (monotone chain, exact).

    Collinear boundary points are dropped; the chain starts at the
    lexicographically smallest vertex.  Degenerate inputs yield chains of
    one or two vertices.
    """
    uniq = sorted(set(Point2(frac(p[0]), frac(p[1])) for p in pts))
    if len(uniq) <= 2:
        return tuple(uniq)

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(uniq)
    upper = half(reversed(uniq))
    if len(lower) == 2 and len(upper) == 2:
        return tuple(lower)  # all points collinear
    return tuple(lower[:-1] + upper[:-1])


def intersect_halfplanes(planes) -> tuple:
    """Vertices (ccw, strictly convex) of a bounded half-plane intersection.

    Clips by brute force: every pairwise boundary intersection that
    satisfies all constraints is a candidate, and the region is the convex
    hull of the candidates.  Raises when the region is unbounded, empty, or
    has no interior (fewer than three hull vertices).
    """
    planes = [halfplane(*h) for h in planes]
    if unbounded_directions(planes):
        raise GeometryError("half-plane intersection is unbounded")
    cand = set()
    m = len(planes)
    for i in range(m):
        for j in range(i + 1, m):
            pt = line_intersect(planes[i], planes[j])
            if pt is not None and feasible(pt, planes):
                cand.add(pt)
    if not cand:
        raise GeometryError("half-plane intersection is empty")
    chain = convex_hull_points(cand)
    if len(chain) < 3:
        raise GeometryError("half-plane intersection has no interior")
    return chain


def _tighter(h: HalfPlane, g: HalfPlane) -> bool:
    """For same-direction constraints: is ``h`` at least as restrictive?

    With proportional normals the comparison is c_h/|n_h| <= c_g/|n_g|;
    any shared nonzero component works as the positive scale.
    """
    sh, sg = (abs(h.a), abs(g.a)) if h.a != 0 else (abs(h.b), abs(g.b))
    return h.c * sg <= g.c * sh


def _vertex(h1: HalfPlane, h2: HalfPlane) -> Point2:
    pt = line_intersect(h1, h2)
    if pt is None:
        raise GeometryError("adjacent boundary constraints are parallel")
    return pt


def _violates(h1: HalfPlane, h2: HalfPlane, h: HalfPlane) -> bool:
    pt = _vertex(h1, h2)
    return h.a * pt.x + h.b * pt.y > h.c


def intersect_halfplanes_ordered(planes) -> tuple:
    """Deque half-plane intersection: ccw vertices in O(m log m).

    Constraints are sorted by boundary direction and swept once, keeping the
    active envelope in a deque.  Four axis-aligned box constraints are mixed
    in so that no two angularly adjacent constraints are exactly opposite
    (an axis direction always separates a direction from its antipode),
    which guarantees every needed vertex exists.  If a box constraint
    survives to the final envelope the box was too small and the sweep
    repeats with the width squared; the loop terminates because the region
    is bounded.  Raises when the region is unbounded or has no interior.
    """
    planes = [halfplane(*h) for h in planes]
    if unbounded_directions(planes):
        raise GeometryError("half-plane intersection is unbounded")
    width = Fraction(2) ** 20
    while True:
        box = (
            HalfPlane(frac(1), frac(0), width),
            HalfPlane(frac(-1), frac(0), width),
            HalfPlane(frac(0), frac(1), width),
            HalfPlane(frac(0), frac(-1), width),
        )
        best: dict = {}
        for h in list(planes) + list(box):
            k = angle_key((-h.b, h.a))
            g = best.get(k)
            if g is None or _tighter(h, g):
                best[k] = h
        dq: deque = deque()
        for k in sorted(best):
            h = best[k]
            while len(dq) >= 2 and _violates(dq[-2], dq[-1], h):
                dq.pop()
            while len(dq) >= 2 and _violates(dq[0], dq[1], h):
                dq.popleft()
            dq.append(h)
        while len(dq) >= 3 and _violates(dq[-2], dq[-1], dq[0]):
            dq.pop()
        while len(dq) >= 3 and _violates(dq[0], dq[1], dq[-1]):
            dq.popleft()
        if len(dq) < 3:
            raise GeometryError("half-plane intersection has no interior")
        boxset = set(box) - set(planes)
        if any(h in boxset for h in dq):
            width = width * width
            continue
        verts = [_vertex(dq[i - 1], dq[i]) for i in range(len(dq))]
        chain = canonical_chain(verts)
        if len(chain) < 3:
            raise GeometryError("half-plane intersection has no interior")
        return chain


@dataclass(frozen=True)
class HullChain:
    """A counterclockwise, strictly convex, closed vertex cycle."""

    vertices: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", tuple(
            Point2(frac(p[0]), frac(p[1])) for p in self.vertices
        ))

    def is_convex_ccw(self) -> bool:
        v = self.vertices
        m = len(v)
        if m < 3:
            return m > 0
        return all(cross(v[i - 1], v[i], v[(i + 1) % m]) > 0 for i in range(m))

    def canonical(self) -> "HullChain":
        return HullChain(canonical_chain(self.vertices))
