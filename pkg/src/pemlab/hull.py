"""Parallel 2-D half-plane intersection and convex hulls on the cache machine.

The driver :func:`hull_main` intersects ``m`` half-planes whose common
interior contains a known point.  After translating that point to the
origin, each round samples a few planes, brute-forces their intersection
into a small polygon, polls random planes to estimate how the rest spread
over the polygon's angular sectors, and accepts a sample whose estimated
spread is balanced.  Every plane is then routed to the sectors whose
triangle (origin, two adjacent sample vertices) it can actually cut, the
per-sector groups are pruned by an exact dominance rule, and the sectors
recurse independently.  The final chain is stitched per sector and is exact:
all geometry runs over :mod:`fractions` rationals via :mod:`pemlab.geometry`
kernels, with no epsilon anywhere.

Machine conventions: a half-plane ``a*x + b*y <= c`` is one memory word,
stored as the tuple ``(a, b, c)``; points are ``(x, y)`` words.  Cores are
charged for every pass over plane or point data; the small per-round
summaries that drive control flow (sample chains, bucket sizes, slab
tables) are treated as host metadata, exactly like splitter keys in the
partition routines.  Sector sub-problems execute one after another on the
same physical cores; the ledger's critical path treats phase-sequential
siblings the same as concurrent ones.

Sector routing rests on three exact facts.  First, a plane with dual point
``u = (a/c, b/c)`` can remove area from the triangle of sector ``j`` iff
``u . P >= 1`` for one of the sector's sample vertices ``P``, because the
origin always satisfies ``u . O = 0 < 1``.  The flagged vertices of a
convex chain form one circular arc, so each plane maps to one circular
sector interval.  Second, inside the wedge of sector ``j`` every point is
``alpha * P_j + beta * P_{j+1}`` with nonnegative coefficients, so a plane
whose two vertex products ``(s1, s2)`` are componentwise dominated (both
at least as large, one strictly) by another plane's is redundant there and
can be dropped.  Third, each sub-problem keeps the full sample, so it stays
bounded with the origin strictly interior, and clipping its result to the
sector wedge reproduces the true intersection inside that wedge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count

from pemlab.geometry import (
    GeometryError,
    HalfPlane,
    HullChain,
    Point2,
    canonical_chain,
    clip_chain,
    cross,
    frac,
    intersect_halfplanes,
    intersect_halfplanes_ordered,
    unbounded_directions,
)
from pemlab.machine import MachineFault, MemRegion
from pemlab.merge import BucketedRun, merge_bucketed
from pemlab.partition import PartitionTask, partition_main, partition_seq
from pemlab.primitives import (
    KeySeq,
    chunk_bounds,
    compact,
    sample_k_of_n_seq,
    spaced_slots,
)
from pemlab.primitives import _reduce as _reduce_words
from pemlab.sorting import SortPlan, sample_sort

__all__ = [
    "Arrangement",
    "HullPlan",
    "HullStats",
    "convex_hull_2d",
    "dualize",
    "dualize_vertices",
    "expand_by_sector",
    "filter_all",
    "filter_sector",
    "find_sectors",
    "halfplane_brute",
    "hull_main",
    "locate_points",
    "maxima_par",
    "maxima_seq",
    "polling_sample",
    "preprocess_arrangement",
    "split_upper_lower",
]


# --------------------------------------------------------------------------
# plans, statistics, context


@dataclass(frozen=True)
class HullPlan:
    """Tuning knobs for the sampling round.

    ``eps_inv`` is the inverse of the sampling exponent: candidate samples
    hold ``ceil(m**(1/eps_inv))`` planes plus the four dual-extreme planes,
    and an accepted round must keep every sector group within
    ``2 * m**(1 - 1/eps_inv) * log2(m)``.  ``expansion`` bounds the total
    number of plane copies per round at ``expansion * m``.  ``poll_floor``
    keeps the poll meaningful at small sizes where ``m / log(m)**4``
    collapses to nothing.
    """

    eps_inv: int = 32
    expansion: int = 4
    candidates: int | None = None
    poll_floor: int = 16
    repolls: int = 1
    base_floor: int = 32
    depth_cap: int = 12
    sort: SortPlan = field(default_factory=SortPlan)

    def __post_init__(self) -> None:
        if self.eps_inv < 2:
            raise MachineFault("eps_inv must be at least 2")
        if self.expansion < 2:
            raise MachineFault("expansion budget must be at least 2")

    def sample_size(self, m: int) -> int:
        return max(1, math.ceil(m ** (1.0 / self.eps_inv)))

    def candidate_count(self, m: int) -> int:
        if self.candidates is not None:
            return self.candidates
        return max(1, round(math.log2(max(2, m))))

    def poll_count(self, m: int) -> int:
        ilog = max(1, m.bit_length() - 1)
        return min(m, max(self.poll_floor, m // ilog**4))

    def group_bound(self, m: int) -> float:
        eps = 1.0 / self.eps_inv
        return 2.0 * (m ** (1.0 - eps)) * max(1.0, math.log2(max(2, m)))


@dataclass
class HullStats:
    """Observed behaviour of the sampling rounds of one driver run."""

    polls: int = 0
    accepted: int = 0
    repolls: int = 0
    fallbacks: int = 0
    rounds: list = field(default_factory=list)

    def record_round(self, m: int, sectors: int, largest: int, bound: float,
                     copies: int) -> None:
        self.accepted += 1
        self.rounds.append({
            "m": m,
            "sectors": sectors,
            "largest_group": largest,
            "group_bound": bound,
            "copies": copies,
        })


@dataclass
class _Ctx:
    machine: object
    plan: HullPlan
    stats: HullStats
    N: int
    P: int
    base_stream: int
    counter: count = field(default_factory=count)

    def next_stream(self) -> int:
        return (self.base_stream << 20) | next(self.counter)

    @property
    def grain(self) -> int:
        return max(self.N // self.P, self.plan.base_floor)


def _make_ctx(machine, m, cores, plan, stats, stream) -> _Ctx:
    plan = plan if plan is not None else HullPlan()
    stats = stats if stats is not None else HullStats()
    return _Ctx(machine, plan, stats, N=m, P=max(1, len(cores)),
                base_stream=stream)


# --------------------------------------------------------------------------
# charged pass helpers


def _scan_words(machine, seq: KeySeq, core, tick: int = 1) -> list:
    """Read every word of ``seq`` on one core; returns the host values."""
    vals: list = []

    def prog(c):
        for i in range(seq.n):
            vals.append(c.read(seq.addr(i)))
            if tick:
                c.tick(tick)
        return
        yield

    machine.run_rounds({core.idx: prog})
    return vals


def _write_words(machine, words, core, dest: MemRegion | None = None) -> KeySeq:
    """Write host words into a fresh (or given) region on one core."""
    n = len(words)
    dst = dest if dest is not None else machine.alloc(n)
    if dst.len < n:
        raise MachineFault("destination region too small")

    def prog(c):
        for i, w in enumerate(words):
            c.write(dst.addr(i), w)
        return
        yield

    if n:
        machine.run_rounds({core.idx: prog})
    return KeySeq(dst, n)


def _map_pass(machine, src: KeySeq, cores, fn, tick: int = 1) -> KeySeq:
    """Elementwise ``dest[i] = fn(src[i])`` across core-chunked ranges."""
    n = src.n
    dst = machine.alloc(n)
    if n == 0:
        return KeySeq(dst, 0)
    g = min(len(cores), n)
    bounds = chunk_bounds(n, g)

    def prog_for(ci):
        lo, hi = bounds[ci]

        def prog(core):
            for i in range(lo, hi):
                core.write(dst.addr(i), fn(core.read(src.addr(i))))
                core.tick(tick)
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: prog_for(ci) for ci in range(g)})
    return KeySeq(dst, n)


def _subseq(seq: KeySeq, lo: int, hi: int) -> KeySeq:
    return KeySeq(MemRegion(seq.region.base + lo, hi - lo), hi - lo)


def _plane_word(w) -> tuple:
    a, b, c = frac(w[0]), frac(w[1]), frac(w[2])
    if a == 0 and b == 0:
        raise GeometryError("half-plane normal must be nonzero")
    return (a, b, c)


# --------------------------------------------------------------------------
# sequential building blocks


def halfplane_brute(machine, planes: KeySeq, core) -> HullChain:
    """Intersect a small plane set by checking all boundary pairs.

    One core reads the ``m`` planes and is charged ``m**2`` comparison work;
    the chain comes from the exact pairwise-candidate clipper.  Raises
    :class:`GeometryError` when the intersection is unbounded or has no
    interior.
    """
    words = _scan_words(machine, planes, core, tick=max(1, planes.n))
    verts = intersect_halfplanes([_plane_word(w) for w in words])
    return HullChain(verts)


def _hull_base(machine, planes: KeySeq, core) -> HullChain:
    """Sequential base case: one core clips all planes in sorted order."""
    m = planes.n
    words = _scan_words(machine, planes, core, tick=max(1, m.bit_length()))
    verts = intersect_halfplanes_ordered([_plane_word(w) for w in words])
    return HullChain(verts)


# --------------------------------------------------------------------------
# sampling and polling


def _dual_extremes(machine, planes: KeySeq, cores) -> list:
    """The four planes extreme in dual coordinates ``(a/c, b/c)``."""

    def keep(sel):
        return lambda u, v: u if sel(u, v) else v

    ux = lambda w: frac(w[0]) / frac(w[2])
    uy = lambda w: frac(w[1]) / frac(w[2])
    out = []
    for pick in (
        keep(lambda u, v: ux(u) >= ux(v)),
        keep(lambda u, v: ux(u) <= ux(v)),
        keep(lambda u, v: uy(u) >= uy(v)),
        keep(lambda u, v: uy(u) <= uy(v)),
    ):
        out.append(_reduce_words(machine, planes, cores, pick))
    return out


def _poll_intervals(machine, polled: KeySeq, chain: HullChain, core) -> list:
    """Sector interval span of each polled plane against the sample chain."""
    words = _scan_words(machine, polled, core,
                        tick=max(1, len(chain.vertices)))
    return [_sector_interval(_plane_word(w), chain.vertices) for w in words]


def _sector_interval(word, verts) -> tuple | None:
    """Circular sector interval ``(lo, hi)`` the plane can cut, or None.

    Vertex ``j`` is flagged when ``u . P_j >= 1`` (with ``u = (a/c, b/c)``,
    evaluated cross-multiplied so nothing divides).  The flags of a convex
    chain form one circular arc ``[lo..hi]``; the plane can touch exactly
    the sectors ``lo - 1 .. hi``.  No flags means the plane misses every
    sector triangle; all flags means it cuts everywhere.
    """
    a, b, c = word
    t = len(verts)
    flags = [a * v.x + b * v.y >= c for v in verts]
    if not any(flags):
        return None
    if all(flags):
        return (0, t - 1)
    starts = [j for j in range(t) if flags[j] and not flags[j - 1]]
    if len(starts) != 1:
        raise MachineFault("vertex flags of a convex chain must be one arc")
    lo = starts[0]
    hi = lo
    while flags[(hi + 1) % t]:
        hi = (hi + 1) % t
    return ((lo - 1) % t, hi)


def _interval_sectors(interval, t: int) -> list:
    lo, hi = interval
    span = (hi - lo) % t + 1
    return [(lo + i) % t for i in range(min(span, t))]


def polling_sample(machine, planes: KeySeq, cores, plan: HullPlan | None = None,
                   stats: HullStats | None = None, stream: int = 0):
    """Pick a bounded sample polygon whose sector load looks balanced.

    Draws ``candidate_count`` random plane samples (each augmented with the
    four dual-extreme planes so the sample has a chance of being bounded),
    brute-forces each, and polls random planes to estimate both the total
    number of sector copies and the largest sector group.  A candidate is
    accepted when it is bounded, its estimated largest group respects
    ``group_bound``, and its estimated copies stay within the expansion
    budget; the best accepted candidate (fewest estimated copies) wins.
    One re-poll with fresh planes follows if nothing is accepted.  Returns
    ``(chain, sample_words)`` or ``None`` when every attempt fails.
    """
    ctx = _make_ctx(machine, planes.n, cores, plan, stats, stream)
    return _polling_sample(ctx, planes, cores)


def _polling_sample(ctx: _Ctx, planes: KeySeq, cores):
    machine, plan = ctx.machine, ctx.plan
    m = planes.n
    s = plan.sample_size(m)
    k = plan.candidate_count(m)
    q = plan.poll_count(m)
    extremes = [_plane_word(w) for w in _dual_extremes(machine, planes, cores)]

    candidates = []
    for i in range(k):
        core = cores[i % len(cores)]
        drawn = sample_k_of_n_seq(machine, planes, s, core,
                                  stream=ctx.next_stream())
        drawn_words = _scan_words(machine, drawn, core)
        sample_words = []
        for w in [_plane_word(v) for v in drawn_words] + extremes:
            if w not in sample_words:
                sample_words.append(w)
        sample_seq = _write_words(machine, sample_words, core)
        try:
            chain = halfplane_brute(machine, sample_seq, core)
        except GeometryError:
            continue
        candidates.append((chain, sample_words))

    bound = plan.group_bound(m)
    for attempt in range(1 + max(0, plan.repolls)):
        if attempt:
            ctx.stats.repolls += 1
        best = None
        for ci, (chain, sample_words) in enumerate(candidates):
            core = cores[ci % len(cores)]
            polled = sample_k_of_n_seq(machine, planes, q, core,
                                       stream=ctx.next_stream())
            intervals = _poll_intervals(machine, polled, chain, core)
            ctx.stats.polls += 1
            t = len(chain.vertices)
            per_sector = [0] * t
            copies = 0
            for iv in intervals:
                if iv is None:
                    continue
                hit = _interval_sectors(iv, t)
                copies += len(hit)
                for sec in hit:
                    per_sector[sec] += 1
            scale = m / q
            est_total = copies * scale
            est_group = max(per_sector) * scale if per_sector else 0.0
            if est_group <= bound and est_total <= plan.expansion * m:
                if best is None or est_total < best[0]:
                    best = (est_total, chain, sample_words)
        if best is not None:
            return best[1], best[2]
    return None


# --------------------------------------------------------------------------
# sector location: dual arrangement of the sample chain


def dualize(machine, planes: KeySeq, cores) -> KeySeq:
    """Map each plane word to ``(a/c, b/c, a, b, c)``: its dual point plus
    the original coefficients, so later passes never chase references."""

    def to_dual(w):
        a, b, c = _plane_word(w)
        if c <= 0:
            raise GeometryError("dualization needs the origin strictly "
                                "interior (c > 0)")
        return (a / c, b / c, a, b, c)

    return _map_pass(machine, planes, cores, to_dual, tick=2)


def dualize_vertices(chain: HullChain) -> tuple:
    """Dual line of every chain vertex ``P``: the locus ``u . P = 1``."""
    return tuple((v.x, v.y) for v in chain.vertices)


class _SlabLine:
    """A dual line restricted to one slab, ordered against point words.

    Within an open slab no two dual lines cross, so comparing a line to a
    point at the point's own x is consistent: the line is "less" when its y
    there lies strictly below the point.  Lines compare to each other at the
    slab's sample x.
    """

    __slots__ = ("nx", "ny", "sample_x", "_key")

    def __init__(self, nx, ny, sample_x):
        if ny == 0:
            raise MachineFault("vertical dual lines cannot order a slab")
        self.nx, self.ny, self.sample_x = nx, ny, sample_x
        self._key = self.y_at(sample_x)

    def y_at(self, x):
        return (1 - self.nx * x) / self.ny

    def _cmp_point(self, other):
        return (self.y_at(other[0]), other[1])

    def __lt__(self, other):
        if isinstance(other, _SlabLine):
            return self._key < other._key
        y, py = self._cmp_point(other)
        return y < py

    def __gt__(self, other):
        if isinstance(other, _SlabLine):
            return self._key > other._key
        y, py = self._cmp_point(other)
        return y > py

    def __le__(self, other):
        return not self.__gt__(other)

    def __ge__(self, other):
        return not self.__lt__(other)

    def __eq__(self, other):
        if isinstance(other, _SlabLine):
            return self._key == other._key
        y, py = self._cmp_point(other)
        return y == py

    def __hash__(self):
        return hash((self.nx, self.ny))

    def __repr__(self):
        return f"_SlabLine({self.nx}, {self.ny})"


@dataclass(frozen=True)
class Arrangement:
    """Slab decomposition of the sample chain's dual-line arrangement.

    ``xs`` are the slab boundaries (every pairwise intersection x plus the
    x of each vertical dual line).  Slab ``s`` covers the open interval
    between ``xs[s-1]`` and ``xs[s]``; ``lines[s]`` holds the slab's
    non-vertical dual lines bottom-to-top; ``regions[(s, band)]`` stores
    the precomputed sector interval of every region, where ``band`` counts
    the lines at or below a point.  Points exactly on a slab boundary are
    not covered and must be classified directly.
    """

    xs: tuple
    lines: tuple
    regions: dict
    chain: HullChain


def preprocess_arrangement(machine, chain: HullChain, core) -> Arrangement:
    """Build the slab table of the chain's dual arrangement on one core.

    The table is host metadata (like splitter keys); the core is charged
    the work of intersecting all line pairs and probing one sample point
    per region with all ``t`` dual lines.
    """
    verts = chain.vertices
    t = len(verts)
    duals = dualize_vertices(chain)
    xs_set = set()
    for j in range(t):
        nxj, nyj = duals[j]
        if nyj == 0:
            xs_set.add(Fraction(1, 1) / nxj)
        for i in range(j + 1, t):
            nxi, nyi = duals[i]
            det = nxj * nyi - nxi * nyj
            if det == 0:
                continue
            xs_set.add((nyi - nyj) / det)
    xs = tuple(sorted(xs_set))

    lines: list = []
    regions: dict = {}
    for s in range(len(xs) + 1):
        if not xs:
            sx = Fraction(0)
        elif s == 0:
            sx = xs[0] - 1
        elif s == len(xs):
            sx = xs[-1] + 1
        else:
            sx = (xs[s - 1] + xs[s]) / 2
        slab = sorted(
            (_SlabLine(nx, ny, sx) for nx, ny in duals if ny != 0),
            key=lambda ln: ln._key,
        )
        for i in range(len(slab) - 1):
            if not (slab[i]._key < slab[i + 1]._key):
                raise MachineFault("slab lines must be strictly ordered")
        ys = [ln._key for ln in slab]
        for band in range(len(slab) + 1):
            if not ys:
                sy = Fraction(0)
            elif band == 0:
                sy = ys[0] - 1
            elif band == len(slab):
                sy = ys[-1] + 1
            else:
                sy = (ys[band - 1] + ys[band]) / 2
            word = (sx, sy, Fraction(1))
            regions[(s, band)] = _sector_interval(word, verts)
        lines.append(tuple(slab))

    def prog(c):
        pairs = t * t
        c.tick(max(1, pairs + len(regions) * t))
        return
        yield

    machine.run_rounds({core.idx: prog})
    return Arrangement(xs=xs, lines=tuple(lines), regions=regions, chain=chain)


def _partition_by(machine, seq: KeySeq, splitters, cores, ctx_n, ctx_p):
    """Partition ``seq`` around splitters, falling back to the sequential
    routine when the square-splitter precondition fails."""
    z = len(splitters)
    if z == 0:
        return BucketedRun(seq, (seq.n,))
    if len(cores) == 1 or z * z > seq.n:
        return partition_seq(machine, seq, tuple(splitters), cores[0])
    task = PartitionTask(seq, tuple(splitters), N=ctx_n, P=ctx_p)
    return partition_main(machine, task, cores, check=False)


def locate_points(machine, duals: KeySeq, arr: Arrangement, cores,
                  root_n: int | None = None, root_p: int | None = None) -> list:
    """Group dual points by arrangement region; returns ``(slice, interval)``
    pairs covering all of ``duals``.

    Points are first partitioned into slab buckets (boundary x values get
    their own degenerate buckets via ``(x, -inf)`` / ``(x, +inf)`` splitter
    pairs).  Within a slab, band membership is not monotone in the point
    order, so each point first binary-searches the slab's lines at its own
    x and the bucket is then partitioned by that integer tag.  A point
    exactly on a dual line lands in the band above it, matching its own
    closed cut test; either band is exact there, because touching a
    triangle only at a vertex removes no area.  Boundary-bucket points are
    classified directly against the chain instead.
    """
    n = duals.n
    N = root_n if root_n is not None else max(1, n)
    P = root_p if root_p is not None else max(1, len(cores))
    groups: list = []
    if n == 0:
        return groups
    xs = arr.xs
    t = len(arr.chain.vertices)

    if xs:
        xsplit: list = []
        for x in xs:
            xsplit.append((x, float("-inf")))
            xsplit.append((x, float("inf")))
        xrun = _partition_by(machine, duals, tuple(xsplit), cores, N, P)
        starts = xrun.bucket_starts()
        buckets = [
            _subseq(xrun.seq, st, st + sz) if sz else None
            for st, sz in zip(starts, xrun.sizes)
        ]
    else:
        buckets = [duals]

    for b, bucket in enumerate(buckets):
        if bucket is None or bucket.n == 0:
            continue
        if b % 2 == 1:
            groups.extend(_classify_direct(machine, bucket, arr, cores[0]))
            continue
        s = b // 2
        lines = arr.lines[s]
        if not lines:
            groups.append((bucket, arr.regions[(s, 0)]))
            continue
        z = len(lines)

        def tag(w, lines=lines, z=z):
            lo, hi = 0, z
            while lo < hi:
                mid = (lo + hi) // 2
                if lines[mid] <= (w[0], w[1]):
                    lo = mid + 1
                else:
                    hi = mid
            return (lo, w[2], w[3], w[4])

        tagged = _map_pass(machine, bucket, cores, tag,
                           tick=1 + max(1, z.bit_length()))
        brun = _partition_by(machine, tagged,
                             tuple((k,) for k in range(1, z + 1)),
                             cores, N, P)
        bstarts = brun.bucket_starts()
        for band, (st, sz) in enumerate(zip(bstarts, brun.sizes)):
            if sz:
                groups.append((_subseq(brun.seq, st, st + sz),
                               arr.regions[(s, band)]))
    return groups


def _classify_direct(machine, bucket: KeySeq, arr: Arrangement, core) -> list:
    """Classify slab-boundary points one by one and regroup them by interval."""
    verts = arr.chain.vertices
    words = _scan_words(machine, bucket, core, tick=max(1, len(verts)))
    by_interval: dict = {}
    for w in words:
        iv = _sector_interval((w[2], w[3], w[4]), verts)
        by_interval.setdefault(iv, []).append(w)
    out = []
    for iv, ws in sorted(by_interval.items(),
                         key=lambda kv: (-1, -1) if kv[0] is None else kv[0]):
        seq = _write_words(machine, ws, core)
        out.append((seq, iv))
    return out


def find_sectors(machine, planes: KeySeq, chain: HullChain, cores,
                 root_n: int | None = None, root_p: int | None = None) -> list:
    """Route every plane to its sector interval against ``chain``.

    Composition of :func:`dualize`, :func:`preprocess_arrangement`, and
    :func:`locate_points`; returns ``(dual slice, interval)`` groups.
    """
    duals = dualize(machine, planes, cores)
    arr = preprocess_arrangement(machine, chain, cores[0])
    return locate_points(machine, duals, arr, cores, root_n, root_p)


# --------------------------------------------------------------------------
# expansion and per-sector filtering


def expand_by_sector(machine, groups, sector_count: int, cores) -> BucketedRun:
    """Write one plane copy per (plane, sector-in-interval), sector-major.

    Group words end with the plane coefficients ``(a, b, c)`` whatever tag
    or dual prefix they carry; only those three words are copied.  Group
    sizes and intervals are host metadata, so all destination offsets are
    precomputed and each core fills one contiguous destination range; reads
    chase the scattered source groups.  Groups with interval ``None`` are
    redundant planes and are dropped here.
    """
    incidences: dict = {s: [] for s in range(sector_count)}
    for seq, iv in groups:
        if iv is None or seq.n == 0:
            continue
        for s in _interval_sectors(iv, sector_count):
            incidences[s].append(seq)
    sizes = [sum(sq.n for sq in incidences[s]) for s in range(sector_count)]
    total = sum(sizes)
    dst = machine.alloc(total)
    if total == 0:
        return BucketedRun(KeySeq(dst, 0), tuple(sizes))

    slots = []
    pos = 0
    for s in range(sector_count):
        for sq in incidences[s]:
            slots.append((pos, sq))
            pos += sq.n

    g = min(len(cores), total)
    bounds = chunk_bounds(total, g)

    def prog_for(ci):
        lo, hi = bounds[ci]

        def prog(core):
            for dpos, sq in slots:
                if dpos + sq.n <= lo or dpos >= hi:
                    continue
                for i in range(max(lo, dpos), min(hi, dpos + sq.n)):
                    w = core.read(sq.addr(i - dpos))
                    core.write(dst.addr(i), (w[-3], w[-2], w[-1]))
                    core.tick(1)
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: prog_for(ci) for ci in range(g)})
    return BucketedRun(KeySeq(dst, total), tuple(sizes))


def _sweep_survivors(machine, seq: KeySeq, cores, rule: str, emit) -> tuple:
    """Right-to-left dominance sweep over a ``(x, y, ...)``-sorted sequence.

    ``rule`` selects the dominance convention: ``"one_strict"`` drops a word
    when another has both components at least as large and one strictly
    larger (so exact ties all survive); ``"strict_both"`` drops only on two
    strict inequalities.  Chunks publish ``(first_x, eq_max, strict_max)``
    summaries through block-spaced slots, one core folds the suffix carries,
    and a second pass re-reads each chunk and writes its survivors packed.
    Returns ``(KeySeq, host_words)`` of ``emit(word)`` survivors.
    """
    n = seq.n
    if n == 0:
        return KeySeq(machine.alloc(0), 0), []
    g = min(len(cores), n)
    bounds = chunk_bounds(n, g)
    slots = spaced_slots(machine, 2 * g)
    B = machine.config.B

    def slot_addr(i):
        return slots.base + i * B

    chunks: list = [None] * g

    def read_for(ci):
        lo, hi = bounds[ci]

        def prog(core):
            vals = []
            for i in range(lo, hi):
                vals.append(core.read(seq.addr(i)))
                core.tick(1)
            chunks[ci] = vals
            first = vals[0][0]
            eqm = max(v[1] for v in vals if v[0] == first)
            above = [v[1] for v in vals if v[0] > first]
            sm = max(above) if above else None
            core.write(slot_addr(ci), (first, eqm, sm))
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: read_for(ci) for ci in range(g)})

    carries: list = [None] * g

    def fold(core):
        summaries = [core.read(slot_addr(ci)) for ci in range(g)]
        core.tick(g)
        tail = None
        for ci in range(g - 1, -1, -1):
            carries[ci] = tail
            core.write(slot_addr(g + ci), tail)
            first, eqm, sm = summaries[ci]
            if tail is None:
                tail = (first, eqm, sm)
            else:
                tf, teq, tsm = tail
                neq = eqm if tf != first else max(eqm, teq)
                extra = tsm if tf == first else max(
                    teq if tsm is None else max(teq, tsm), teq)
                nsm = extra if sm is None else (
                    sm if extra is None else max(sm, extra))
                tail = (first, neq, nsm)
        return
        yield

    machine.run_rounds({cores[0].idx: fold})

    survivors_per_chunk: list = []
    for ci in range(g):
        vals = chunks[ci]
        tail = carries[ci]
        keep = _staircase(vals, tail, rule)
        survivors_per_chunk.append(keep)

    sizes = [len(k) for k in survivors_per_chunk]
    total = sum(sizes)
    dst = machine.alloc(total)
    offs = [0]
    for sz in sizes:
        offs.append(offs[-1] + sz)

    def write_for(ci):
        lo, hi = bounds[ci]
        keep_idx = set(survivors_per_chunk[ci])

        def prog(core):
            core.read(slot_addr(g + ci))
            out = offs[ci]
            for i in range(lo, hi):
                v = core.read(seq.addr(i))
                core.tick(1)
                if i - lo in keep_idx:
                    core.write(dst.addr(out), emit(v))
                    out += 1
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: write_for(ci) for ci in range(g)})
    host = []
    for ci in range(g):
        for i in survivors_per_chunk[ci]:
            host.append(emit(chunks[ci][i]))
    return KeySeq(dst, total), host


def _max_none(*vals):
    best = None
    for v in vals:
        if v is not None and (best is None or v > best):
            best = v
    return best


def _staircase(vals, tail, rule) -> list:
    """Local indices of sweep survivors within one sorted chunk.

    ``tail`` summarizes everything to the right as ``(first_x, eq_max,
    strict_max)`` or None.  Equal first components form consecutive blocks;
    a block's members see the same strictly-greater maximum, and under
    ``one_strict`` only members matching the global block maximum survive.
    """
    blocks: list = []
    for i, w in enumerate(vals):
        if blocks and blocks[-1][0] == w[0]:
            blocks[-1][1].append(i)
        else:
            blocks.append((w[0], [i]))
    tf, teq, tsm = tail if tail is not None else (None, None, None)
    keep: list = []
    running = None
    for x, idxs in reversed(blocks):
        if tail is None:
            t_strict = None
            t_eq = None
        elif x == tf:
            t_strict = tsm
            t_eq = teq
        else:
            t_strict = _max_none(teq, tsm)
            t_eq = None
        hi_strict = _max_none(running, t_strict)
        block_max = _max_none(max(vals[i][1] for i in idxs), t_eq)
        for i in idxs:
            y = vals[i][1]
            if rule == "strict_both":
                ok = hi_strict is None or y >= hi_strict
            else:
                ok = (y >= block_max) and (hi_strict is None or y > hi_strict)
            if ok:
                keep.append(i)
        running = _max_none(running, max(vals[i][1] for i in idxs))
    keep.sort()
    return keep


def filter_sector(machine, sector_planes: KeySeq, j: int, chain: HullChain,
                  cores, plan: HullPlan | None = None, stream: int = 0):
    """Drop the planes of sector ``j`` that another plane makes redundant.

    Each plane maps to its pair of scaled vertex products
    ``(u . P_j, u . P_{j+1})``; inside the sector wedge a plane whose pair
    is componentwise at least another's (strictly in one slot) can never cut
    deeper, so only the staircase of undominated pairs survives.  Ties keep
    every copy.  The pairs are sorted with the regular sorter and pruned by
    the chunked dominance sweep.  Returns ``(survivors, host_words)``.
    """
    plan = plan if plan is not None else HullPlan()
    verts = chain.vertices
    t = len(verts)
    p1, p2 = verts[j], verts[(j + 1) % t]

    def score(w):
        a, b, c = _plane_word(w)
        return ((a * p1.x + b * p1.y) / c, (a * p2.x + b * p2.y) / c, a, b, c)

    if sector_planes.n == 0:
        return KeySeq(machine.alloc(0), 0), []
    scored = _map_pass(machine, sector_planes, cores, score, tick=4)
    ordered = sample_sort(machine, scored, cores, plan=plan.sort,
                          stream=stream)
    return _sweep_survivors(machine, ordered, cores, "one_strict",
                            emit=lambda w: (w[2], w[3], w[4]))


def filter_all(machine, copies: BucketedRun, chain: HullChain, cores,
               plan: HullPlan | None = None, stream: int = 0) -> list:
    """Run :func:`filter_sector` over every sector slice of ``copies``."""
    out = []
    starts = copies.bucket_starts()
    for j, (st, sz) in enumerate(zip(starts, copies.sizes)):
        out.append(filter_sector(
            machine, _subseq(copies.seq, st, st + sz), j, chain, cores,
            plan=plan, stream=(stream << 8) | j))
    return out


# --------------------------------------------------------------------------
# recursion driver


def _sector_bands(sizes, cores) -> list:
    """Map a logical budget of ``2p`` core shares onto physical cores.

    Sector ``j`` receives shares proportional to its group size (at least
    one), laid out cyclically over the physical cores; sectors execute one
    after another, so overlapping bands only share cores across phases.
    """
    p = len(cores)
    total = sum(sizes)
    budget = 2 * p
    shares = []
    for sz in sizes:
        quota = (sz * budget) // total if total else 1
        shares.append(max(1, quota))
    bands = []
    off = 0
    for sh in shares:
        band = []
        for i in range(min(sh, p)):
            c = cores[(off + i) % p]
            if c not in band:
                band.append(c)
        bands.append(band)
        off += sh
    return bands


def _hull_rec(ctx: _Ctx, planes: KeySeq, cores, depth: int) -> HullChain:
    machine, plan = ctx.machine, ctx.plan
    m = planes.n
    if len(cores) == 1 or m <= ctx.grain:
        return _hull_base(machine, planes, cores[0])
    if depth >= plan.depth_cap:
        machine.diagnostics.append(
            f"hull: depth cap {plan.depth_cap} reached at m={m}; "
            "finishing sequentially")
        ctx.stats.fallbacks += 1
        return _hull_base(machine, planes, cores[0])

    picked = _polling_sample(ctx, planes, cores)
    if picked is None:
        machine.diagnostics.append(
            f"hull: no polling candidate accepted at m={m}; "
            "finishing sequentially")
        ctx.stats.fallbacks += 1
        return _hull_base(machine, planes, cores[0])
    chain, sample_words = picked
    t = len(chain.vertices)

    groups = find_sectors(machine, planes, chain, cores, ctx.N, ctx.P)
    copies = expand_by_sector(machine, groups, t, cores)
    realized = max(copies.sizes) if copies.sizes else 0
    ctx.stats.record_round(m, t, realized, plan.group_bound(m), copies.seq.n)
    if copies.seq.n > plan.expansion * m:
        machine.diagnostics.append(
            f"hull: {copies.seq.n} copies exceed the budget "
            f"{plan.expansion}*{m} at m={m}")

    starts = copies.bucket_starts()
    bands = _sector_bands(copies.sizes, cores)
    sub_chains = []
    for j in range(t):
        band = bands[j]
        sector = _subseq(copies.seq, starts[j], starts[j] + copies.sizes[j])
        survivors, host = filter_sector(machine, sector, j, chain, band,
                                        plan=plan, stream=ctx.next_stream())
        seen = set(host)
        extras = [w for w in sample_words if w not in seen]
        extras_seq = _write_words(machine, extras, band[0])
        sub = compact(machine, [survivors, extras_seq], band)
        sub_chains.append(_hull_rec(ctx, sub, band, depth + 1))
    return _stitch(machine, chain, sub_chains, cores[0])


def _stitch(machine, chain: HullChain, sub_chains, core) -> HullChain:
    """Clip each sector's sub-chain to its wedge and join the boundary arcs.

    Inside its wedge every sub-chain bounds exactly the true region, so
    clipping the sub-polygon to the wedge and dropping the apex leaves the
    true boundary arc between the two rays.  Consecutive arcs share their
    ray-crossing endpoints; the final cleanup merges them and removes
    crossing points that are not real corners.
    """
    verts = chain.vertices
    t = len(verts)
    total = sum(len(sc.vertices) for sc in sub_chains)

    def prog(c):
        c.tick(max(1, 4 * total))
        return
        yield

    machine.run_rounds({core.idx: prog})

    origin = Point2(Fraction(0), Fraction(0))
    out: list = []
    for j in range(t):
        lo, hi = verts[j], verts[(j + 1) % t]
        poly = list(sub_chains[j].vertices)
        for h in (HalfPlane(lo.y, -lo.x, Fraction(0)),
                  HalfPlane(-hi.y, hi.x, Fraction(0))):
            poly = clip_chain(poly, h)
        cleaned: list = []
        for p in poly:
            if not cleaned or cleaned[-1] != p:
                cleaned.append(p)
        if len(cleaned) > 1 and cleaned[0] == cleaned[-1]:
            cleaned.pop()
        if origin not in cleaned:
            raise MachineFault("sector clip lost the wedge apex")
        k = cleaned.index(origin)
        out.extend(cleaned[k + 1:] + cleaned[:k])
    result = HullChain(canonical_chain(out))
    if not result.is_convex_ccw():
        raise MachineFault("stitched sector chains are not convex")
    return result


def hull_main(machine, planes: KeySeq, cores, plan: HullPlan | None = None,
              stats: HullStats | None = None, interior=None,
              stream: int = 0):
    """Intersect half-planes into their exact convex chain.

    ``interior`` is a point strictly inside every half-plane (the origin by
    default); the computation translates it to the origin and back.  One
    normalization pass validates strict feasibility and boundedness, the
    recursive sampling driver produces the chain, and the vertices are
    written back to machine memory.  Returns ``(HullChain, KeySeq)``.
    """
    if not cores:
        raise MachineFault("need at least one core")
    m = planes.n
    if m < 3:
        raise GeometryError("at least three half-planes are required")
    ctx = _make_ctx(machine, m, cores, plan, stats, stream)
    if interior is not None:
        ix, iy = frac(interior[0]), frac(interior[1])
    else:
        ix = iy = Fraction(0)

    def shift(w):
        a, b, c = _plane_word(w)
        return (a, b, c - a * ix - b * iy)

    normalized = _map_pass(machine, planes, cores, shift, tick=3)
    host = machine.snapshot_memory(normalized.region)[:m]
    if any(w[2] <= 0 for w in host):
        raise GeometryError("the interior point must satisfy every "
                            "half-plane strictly")
    if unbounded_directions([HalfPlane(*w) for w in host]):
        raise GeometryError("half-plane intersection is unbounded")

    chain = _hull_rec(ctx, normalized, cores, depth=0)
    final = HullChain(canonical_chain(
        [Point2(v.x + ix, v.y + iy) for v in chain.vertices]))
    written = _write_words(machine, list(final.vertices), cores[0])
    return final, written


# --------------------------------------------------------------------------
# point sets: hulls by duality and dominance maxima


def split_upper_lower(machine, points: KeySeq, cores):
    """Split points by the chord between the two lexicographic extremes.

    Two reductions find the extreme points, one classification pass writes
    each core's points into an upper/lower column pair, and a bucketed merge
    packs the two sides.  Points exactly on the chord count as upper.
    Returns ``(upper, lower, pmin, pmax)``.
    """
    n = points.n
    if n == 0:
        raise MachineFault("cannot split an empty point set")
    pmax = _reduce_words(machine, points, cores,
                         lambda u, v: u if tuple(u) >= tuple(v) else v)
    pmin = _reduce_words(machine, points, cores,
                         lambda u, v: u if tuple(u) <= tuple(v) else v)
    pmin = (frac(pmin[0]), frac(pmin[1]))
    pmax = (frac(pmax[0]), frac(pmax[1]))
    if pmin == pmax:
        return points, KeySeq(machine.alloc(0), 0), pmin, pmax

    g = min(len(cores), n)
    bounds = chunk_bounds(n, g)
    runs: list = [None] * g

    def prog_for(ci):
        lo, hi = bounds[ci]
        size = hi - lo
        region = machine.alloc(2 * size)
        counts = [0, 0]

        def prog(core):
            for i in range(lo, hi):
                w = core.read(points.addr(i))
                side = 0 if cross(pmin, pmax, w) >= 0 else 1
                core.tick(1)
                core.write(region.addr(side * size + counts[side]), w)
                counts[side] += 1
            runs[ci] = BucketedRun(KeySeq(region, size), tuple(counts),
                                   starts=(0, size))
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: prog_for(ci) for ci in range(g)})
    merged = merge_bucketed(machine, runs, cores)
    u, low = merged.sizes
    upper = _subseq(merged.seq, 0, u)
    lower = _subseq(merged.seq, u, u + low)
    return upper, lower, pmin, pmax


def _upper_hull_points(machine, pts: KeySeq, cores, ctx: _Ctx,
                       m_big, c_big, negate: bool) -> list:
    """Recover the upper hull of ``pts`` through half-plane duality.

    A point ``q`` maps to the constraint ``-q.x * m - c <= -q.y`` over
    slope/intercept pairs ``(m, c)``; the feasible set is every line lying
    on or above all points, closed off by two slope bounds and one
    intercept bound that provably clear all true vertices.  Edges of the
    resulting chain decode back to points: an edge on the line
    ``c = s * m + i`` came from the input point ``(-s, i)`` when that point
    exists; other edges are the artificial bounds and are skipped.
    """
    sign = -1 if negate else 1

    def to_plane(w):
        x, y = sign * frac(w[0]), sign * frac(w[1])
        return (-x, Fraction(-1), -y)

    planes = _map_pass(machine, pts, cores, to_plane, tick=1)
    host = [tuple(w) for w in machine.snapshot_memory(planes.region)[:pts.n]]
    point_of = {(w[0], -w[2]): (-w[0], -w[2]) for w in host}
    top_y = max(-w[2] for w in host)
    artificial = [
        (Fraction(1), Fraction(0), frac(m_big)),
        (Fraction(-1), Fraction(0), frac(m_big)),
        (Fraction(0), Fraction(1), frac(c_big)),
    ]
    extra = _write_words(machine, artificial, cores[0])
    full = compact(machine, [planes, extra], cores)
    chain, _ = hull_main(machine, full, cores, plan=ctx.plan,
                         stats=ctx.stats, interior=(Fraction(0), top_y + 1),
                         stream=ctx.next_stream())
    found = {}
    cyc = chain.vertices
    for i in range(len(cyc)):
        v1, v2 = cyc[i], cyc[(i + 1) % len(cyc)]
        dm = v2.x - v1.x
        if dm == 0:
            continue
        slope = (v2.y - v1.y) / dm
        intercept = v1.y - slope * v1.x
        q = point_of.get((slope, intercept))
        if q is not None:
            found[q] = True
    pts_out = [(sign * q[0], sign * q[1]) for q in found]
    pts_out.sort()
    return pts_out


def convex_hull_2d(machine, points: KeySeq, cores,
                   plan: HullPlan | None = None, stream: int = 0):
    """Exact convex hull of a point set via two dual intersections.

    The points are sorted once (which also yields the extreme points and the
    slope bound for the dual boxes), split by the extreme chord, and each
    side's hull is recovered from a bounded half-plane intersection in
    slope/intercept space.  Returns ``(HullChain, KeySeq)`` with the chain
    counterclockwise from its lexicographically smallest vertex.
    """
    n = points.n
    if n == 0:
        raise MachineFault("cannot hull an empty point set")
    if not cores:
        raise MachineFault("need at least one core")
    ctx = _make_ctx(machine, n, cores, plan, None, stream)
    norm = _map_pass(machine, points, cores,
                     lambda w: (frac(w[0]), frac(w[1])), tick=1)
    ordered = sample_sort(machine, norm, cores, plan=ctx.plan.sort,
                          stream=ctx.next_stream())
    host = [tuple(w) for w in machine.snapshot_memory(ordered.region)[:n]]
    pmin, pmax = host[0], host[-1]
    if pmin == pmax:
        final = HullChain((Point2(*pmin),))
        return final, _write_words(machine, list(final.vertices), cores[0])
    if pmin[0] == pmax[0]:
        final = HullChain(canonical_chain([Point2(*pmin), Point2(*pmax)]))
        return final, _write_words(machine, list(final.vertices), cores[0])

    xs = sorted({w[0] for w in host})
    gap = min(b - a for a, b in zip(xs, xs[1:]))
    ys = [w[1] for w in host]
    m_big = (max(ys) - min(ys)) / gap + 1
    c_big = m_big * max(abs(w[0]) for w in host) + max(abs(y) for y in ys) + 1

    upper, lower, _, _ = split_upper_lower(machine, ordered, cores)
    ends = _write_words(machine, [pmin, pmax], cores[0])
    lower_full = compact(machine, [lower, ends], cores)

    upper_pts = _upper_hull_points(machine, upper, cores, ctx,
                                   m_big, c_big, negate=False)
    lower_pts = _upper_hull_points(machine, lower_full, cores, ctx,
                                   m_big, c_big, negate=True)

    cycle = [Point2(*q) for q in lower_pts]
    cycle.extend(Point2(*q) for q in reversed(upper_pts))
    final = HullChain(canonical_chain(cycle))
    if not final.is_convex_ccw():
        raise MachineFault("hull assembly produced a non-convex chain")
    return final, _write_words(machine, list(final.vertices), cores[0])


def maxima_seq(machine, points: KeySeq, core) -> KeySeq:
    """Undominated points (both coordinates strictly larger dominates) on
    one core: sort by ``(x, y)``, sweep right to left."""
    n = points.n
    if n == 0:
        return KeySeq(machine.alloc(0), 0)
    words = _scan_words(machine, points, core, tick=max(1, n.bit_length()))
    vals = sorted((frac(w[0]), frac(w[1])) for w in words)
    keep = _staircase(vals, None, "strict_both")
    return _write_words(machine, [vals[i] for i in keep], core)


def maxima_par(machine, points: KeySeq, cores,
               plan: SortPlan | None = None, stream: int = 0) -> KeySeq:
    """Parallel dominance maxima: regular sort, then the chunked sweep."""
    if points.n == 0:
        return KeySeq(machine.alloc(0), 0)
    norm = _map_pass(machine, points, cores,
                     lambda w: (frac(w[0]), frac(w[1])), tick=1)
    ordered = sample_sort(machine, norm, cores, plan=plan, stream=stream)
    seq, _ = _sweep_survivors(machine, ordered, cores, "strict_both",
                              emit=lambda w: w)
    return seq
