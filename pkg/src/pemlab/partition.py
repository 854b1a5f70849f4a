"""Distribution of keys into buckets around sorted splitters.

The bucket rule sends key ``k`` to bucket ``i`` when
``splitter[i-1] < k <= splitter[i]``; ``z`` splitters induce ``z + 1``
buckets whose last member holds keys above every splitter.  Four routines
trade ops for parallelism:

* :func:`partition_seq` sorts on one core and scans keys against splitters.
* :func:`partition_quadratic` rank-sorts and binary-searches one boundary
  per splitter.
* :func:`partition_sqrt` cuts the keys into ``sqrt(n)`` chunks, runs the
  quadratic routine per chunk, and merges the bucketed runs.
* :func:`partition_main` recurses two levels per step: every
  ``ceil(sqrt(z))``-th splitter first forms coarse buckets from recursively
  partitioned ``sqrt(n)``-chunks, then each coarse bucket is refined by its
  interior splitters with cores assigned in proportion to bucket size.

Single-core subproblems distribute by counting instead of sorting; this
keeps the per-level work linear in ``n log z``.  Chunk jobs feeding a merge
write in one pass into fixed-width bucket columns and hand the merge
explicit segment starts, while the top-level sequential base packs its
output contiguously with a counting pass first.
"""
from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from itertools import accumulate
from math import isqrt

from pemlab.machine import MachineFault, MemRegion
from pemlab.merge import BucketedRun, merge_bucketed
from pemlab.primitives import KeySeq, SplitterSet, brute_sort, chunk_bounds, compact

__all__ = [
    "PartitionTask",
    "multisearch",
    "partition_main",
    "partition_quadratic",
    "partition_seq",
    "partition_sqrt",
]


def _splitter_keys(splitters) -> tuple:
    keys = tuple(splitters.keys) if isinstance(splitters, SplitterSet) else tuple(splitters)
    if any(keys[i] > keys[i + 1] for i in range(len(keys) - 1)):
        raise MachineFault("splitters must be sorted")
    return keys


def _subseq(seq: KeySeq, lo: int, hi: int) -> KeySeq:
    return KeySeq(MemRegion(seq.region.base + lo, hi - lo), hi - lo)


@dataclass(frozen=True)
class PartitionTask:
    """A partition problem pinned to its root size ``N`` and core count ``P``.

    ``N`` and ``P`` stay fixed down the recursion so that the sequential
    threshold ``N/P`` and the exponent ``q = 2 / (1 - log_n z)`` are
    properties of the root problem, not of any subproblem.
    """

    input: KeySeq
    splitters: tuple
    N: int
    P: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "splitters", _splitter_keys(self.splitters))
        if self.N < 1 or self.P < 1:
            raise MachineFault("root size and core count must be positive")
        z = len(self.splitters)
        if z * z > self.input.n and self.input.n > 0:
            raise MachineFault(f"need z <= sqrt(n); got z={z} for n={self.input.n}")

    @property
    def z(self) -> int:
        return len(self.splitters)

    @property
    def q(self) -> float:
        if self.z <= 1 or self.input.n <= 1:
            return 2.0
        return 2.0 / (1.0 - math.log(self.z) / math.log(self.input.n))


def _bucket_sizes_from_bounds(bounds: list, n: int) -> tuple:
    ends = list(bounds) + [n]
    starts = [0] + list(bounds)
    return tuple(e - s for s, e in zip(starts, ends))


def partition_seq(machine, a: KeySeq, splitters, core) -> BucketedRun:
    """Sort on one core, then scan keys and splitters jointly for bounds."""
    keys = _splitter_keys(splitters)
    z = len(keys)
    n = a.n
    out = machine.alloc(n)
    region = splitters.region if isinstance(splitters, SplitterSet) else None
    if n == 0:
        return BucketedRun(KeySeq(out, 0), (0,) * (z + 1))

    def prog(c):
        vals = [c.read(a.addr(i)) for i in range(n)]
        vals.sort()
        c.tick(n * max(1, n.bit_length()))
        for i, v in enumerate(vals):
            c.write(out.addr(i), v)
        j = 0
        for i in range(n):
            v = c.read(out.addr(i))
            while j < z and v > keys[j]:
                if region is not None:
                    c.read(region.addr(j))
                j += 1
            c.tick(1)
        return
        yield

    machine.run_rounds({core.idx: prog})
    host = machine.snapshot_memory(out)[:n]
    bounds = [bisect_right(host, s) for s in keys]
    return BucketedRun(KeySeq(out, n), _bucket_sizes_from_bounds(bounds, n))


def _distribute_seq(machine, a: KeySeq, keys: tuple, core, dest: MemRegion | None = None) -> BucketedRun:
    """Two counting passes on one core: tally buckets, then place each key.

    Keys keep their input order inside every bucket, and the per-key cost is
    one binary-search tick plus two reads and a write.
    """
    z = len(keys)
    n = a.n
    dst = dest if dest is not None else machine.alloc(n)
    if n == 0:
        return BucketedRun(KeySeq(dst, 0), (0,) * (z + 1))
    counts = [0] * (z + 1)
    probe = max(1, (z + 1).bit_length())

    def prog(c):
        for i in range(n):
            counts[bisect_left(keys, c.read(a.addr(i)))] += 1
            c.tick(probe)
        cursors = [0] + list(accumulate(counts))[:-1]
        for i in range(n):
            v = c.read(a.addr(i))
            b = bisect_left(keys, v)
            c.tick(probe)
            c.write(dst.addr(cursors[b]), v)
            cursors[b] += 1
        return
        yield

    machine.run_rounds({core.idx: prog})
    return BucketedRun(KeySeq(dst, n), tuple(counts))


def _distribute_columns(machine, a: KeySeq, keys: tuple, core) -> BucketedRun:
    """One counting pass on one core into fixed-width bucket columns.

    Bucket ``b`` occupies the slot ``[b*n, b*n + size_b)`` of a
    ``(z+1)*n``-word region; the run records explicit segment starts instead
    of packing, so a later merge can gather the columns without a second
    pass over the keys.
    """
    z = len(keys)
    n = a.n
    if n == 0:
        return BucketedRun(KeySeq(machine.alloc(0), 0), (0,) * (z + 1))
    region = machine.alloc((z + 1) * n)
    counts = [0] * (z + 1)
    probe = max(1, (z + 1).bit_length())

    def prog(c):
        for i in range(n):
            v = c.read(a.addr(i))
            b = bisect_left(keys, v)
            c.tick(probe)
            c.write(region.addr(b * n + counts[b]), v)
            counts[b] += 1
        return
        yield

    machine.run_rounds({core.idx: prog})
    return BucketedRun(KeySeq(region, n), tuple(counts), starts=tuple(b * n for b in range(z + 1)))


def partition_quadratic(machine, a: KeySeq, splitters, cores) -> BucketedRun:
    """Rank-sort, then one core per splitter binary-searches its boundary."""
    keys = _splitter_keys(splitters)
    z = len(keys)
    n = a.n
    if n == 0:
        return BucketedRun(KeySeq(machine.alloc(0), 0), (0,) * (z + 1))
    srt = brute_sort(machine, a, cores)
    if z:
        g = min(len(cores), z)
        owner = chunk_bounds(z, g)

        def search_for(ci):
            lo_s, hi_s = owner[ci]

            def prog(core):
                for j in range(lo_s, hi_s):
                    lo, hi = 0, n
                    while lo < hi:
                        mid = (lo + hi) // 2
                        v = core.read(srt.addr(mid))
                        core.tick(1)
                        if v <= keys[j]:
                            lo = mid + 1
                        else:
                            hi = mid
                return
                yield

            return prog

        machine.run_rounds({cores[ci].idx: search_for(ci) for ci in range(g)})
    host = machine.snapshot_memory(srt.region)[:n]
    bounds = [bisect_right(host, s) for s in keys]
    return BucketedRun(srt, _bucket_sizes_from_bounds(bounds, n))


def partition_sqrt(machine, a: KeySeq, splitters, cores) -> BucketedRun:
    """Quadratic-partition ``sqrt(n)`` chunks, then merge the bucketed runs."""
    keys = _splitter_keys(splitters)
    n = a.n
    if n == 0:
        return BucketedRun(KeySeq(machine.alloc(0), 0), (0,) * (len(keys) + 1))
    c_len = max(1, isqrt(n))
    full = max(1, n // c_len)
    ranges = [(i * c_len, (i + 1) * c_len) for i in range(full - 1)] + [((full - 1) * c_len, n)]
    g = len(cores)
    runs = []
    for i, (lo, hi) in enumerate(ranges):
        band_lo = i * g // len(ranges)
        band_hi = max(band_lo + 1, (i + 1) * g // len(ranges))
        runs.append(partition_quadratic(machine, _subseq(a, lo, hi), keys, cores[band_lo:band_hi]))
    return merge_bucketed(machine, runs, cores)


def partition_main(machine, task: PartitionTask, cores, check: bool = True) -> BucketedRun:
    """Two-level recursive partition; see the module docstring for the plan."""
    a = task.input
    keys = task.splitters
    n, z = a.n, task.z
    if check:
        cfg = machine.config
        p = len(cores)
        need = max(cfg.M * p, (cfg.B ** task.q) * p)
        if n < need:
            machine.diagnostics.append(
                f"partition_main: n={n} below cost precondition max(M*p, B^q*p)={need:.0f}"
            )
    if n == 0:
        return BucketedRun(KeySeq(machine.alloc(0), 0), (0,) * (z + 1))
    if z == 0:
        out = compact(machine, [a], cores)
        return BucketedRun(out, (n,))
    if n <= max(task.N // task.P, 64) or len(cores) == 1:
        return _distribute_seq(machine, a, keys, cores[0])
    if z <= 2:
        return _chunked(machine, a, keys, task, cores, refine=False)

    k = isqrt(z)
    if k * k < z:
        k += 1
    coarse_pos = list(range(k - 1, z, k))
    coarse_keys = tuple(keys[i] for i in coarse_pos)
    coarse = _chunked(machine, a, coarse_keys, task, cores, refine=False)

    interior = []
    prev = -1
    for pos in coarse_pos:
        interior.append(keys[prev + 1 : pos])
        prev = pos
    interior.append(keys[prev + 1 :])

    dest = machine.alloc(n)
    g = len(cores)
    starts = [0] + list(accumulate(coarse.sizes))
    sizes: list = []
    threshold = max(task.N // task.P, 64)
    for b, inner in enumerate(interior):
        lo, hi = starts[b], starts[b + 1]
        if hi == lo:
            sizes.extend([0] * (len(inner) + 1))
            continue
        band_lo = lo * g // n
        band_hi = max(band_lo + 1, hi * g // n)
        band = cores[band_lo:band_hi]
        part = _subseq(coarse.seq, lo, hi)
        sub_dest = MemRegion(dest.base + lo, hi - lo)
        if not inner:
            compact(machine, [part], band, dest=sub_dest)
            sizes.append(hi - lo)
            continue
        if hi - lo <= threshold or len(band) == 1:
            fine = _distribute_seq(machine, part, inner, band[0], dest=sub_dest)
        else:
            fine = _chunked(machine, part, inner, task, band, refine=True, dest=sub_dest)
        sizes.extend(fine.sizes)
    return BucketedRun(KeySeq(dest, n), tuple(sizes))


def _chunked(machine, seq: KeySeq, keys: tuple, task: PartitionTask, cores, refine: bool, dest=None) -> BucketedRun:
    """Partition ``seq`` by cutting it into root-scale chunks.

    Full chunks recurse through :func:`partition_main`; when refining a
    coarse bucket the trailing short chunk goes through
    :func:`partition_sqrt` on a sliver of the cores.  The per-chunk runs are
    merged into one bucketed output.
    """
    n = seq.n
    c_len = max(2, isqrt(task.input.n))
    full = n // c_len
    rem = n % c_len
    ranges = []
    short_range = None
    if full == 0:
        short_range = (0, n)
    elif refine:
        ranges = [(i * c_len, (i + 1) * c_len) for i in range(full)]
        if rem:
            short_range = (full * c_len, n)
    else:
        ranges = [(i * c_len, (i + 1) * c_len) for i in range(full - 1)]
        ranges.append(((full - 1) * c_len, n))

    g = len(cores)
    total = len(ranges) + (1 if short_range else 0)
    threshold = max(task.N // task.P, 64)
    runs = []
    for i, (lo, hi) in enumerate(ranges):
        band_lo = i * g // total
        band_hi = max(band_lo + 1, (i + 1) * g // total)
        band = cores[band_lo:band_hi]
        if hi - lo <= threshold or len(band) == 1:
            runs.append(_distribute_columns(machine, _subseq(seq, lo, hi), keys, band[0]))
        else:
            sub = PartitionTask(_subseq(seq, lo, hi), keys, task.N, task.P)
            runs.append(partition_main(machine, sub, band, check=False))
    if short_range is not None:
        lo, hi = short_range
        band = cores[: max(1, g // max(1, isqrt(c_len)))]
        runs.append(partition_sqrt(machine, _subseq(seq, lo, hi), keys, band))
    return merge_bucketed(machine, runs, cores, dest=dest)


def multisearch(machine, queries: KeySeq, sorted_keys: KeySeq, cores) -> KeySeq:
    """Bucket index of every query among ``m <= sqrt(n)`` sorted keys.

    Queries are tagged with their positions, partitioned around the sorted
    keys, and the bucketed order is inverted back to input order.
    """
    n = queries.n
    m = sorted_keys.n
    out = machine.alloc(n)
    if n == 0:
        return KeySeq(out, 0)
    host_keys = machine.snapshot_memory(sorted_keys.region)[:m]

    def read_keys(core):
        for j in range(m):
            core.read(sorted_keys.addr(j))
        return
        yield

    machine.run_rounds({cores[0].idx: read_keys})

    tagged = machine.alloc(n)
    from pemlab.primitives import chunk_bounds

    bounds = chunk_bounds(n, min(len(cores), n))

    def tag_for(ci):
        lo, hi = bounds[ci]

        def prog(core):
            for i in range(lo, hi):
                core.write(tagged.addr(i), (core.read(queries.addr(i)), i))
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: tag_for(ci) for ci in range(len(bounds))})
    wrapped = tuple((s, math.inf) for s in host_keys)
    if m * m <= n:
        task = PartitionTask(KeySeq(tagged, n), wrapped, N=n, P=len(cores))
        run = partition_main(machine, task, cores)
    else:
        run = partition_sqrt(machine, KeySeq(tagged, n), wrapped, cores)

    starts = list(accumulate(run.sizes))

    def invert_for(ci):
        lo, hi = bounds[ci]

        def prog(core):
            for i in range(lo, hi):
                _, tag = core.read(run.seq.addr(i))
                core.write(out.addr(tag), bisect_right(starts, i))
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: invert_for(ci) for ci in range(len(bounds))})
    return KeySeq(out, n)
