"""Parallel building blocks executed on the simulated multicore machine.

Every routine here charges its memory traffic through :class:`~pemlab.machine.Core`
handles, so ledgers reflect the access pattern of the stated algorithm:
chunked folds with tree combines, an infix-layout prefix tree, recursive
matrix transposition, counting ranks, slice-per-core compaction, quadratic
rank sorting, and splitter sampling by oversampled chunks.

Work is split into per-core chunks of about ``n/p`` items with the remainder
on the last core.  Cross-core partial values always live in block-spaced
slots so that reduction rounds never incur block misses.
"""
from __future__ import annotations

import operator
from bisect import bisect_right
from dataclasses import dataclass, field
from math import isqrt

from pemlab.machine import MachineFault, MemRegion

__all__ = [
    "KeySeq",
    "SplitterSet",
    "chunk_bounds",
    "par_max",
    "par_sum",
    "prefix_sum",
    "transpose",
    "rank",
    "compact",
    "brute_sort",
    "sample_splitters",
    "sample_k_of_n_seq",
]

_NONE = object()


@dataclass(frozen=True)
class KeySeq:
    """A sequence of ``n`` totally ordered words at the front of a region."""

    region: MemRegion
    n: int

    def __post_init__(self) -> None:
        if self.n < 0 or self.n > self.region.len:
            raise MachineFault("KeySeq length exceeds its region")

    def addr(self, i: int) -> int:
        return self.region.addr(i)


@dataclass(frozen=True)
class SplitterSet:
    """Sorted splitters drawn from a key sequence.

    ``x`` is the sampling exponent (splitter count is ``ceil(n**(1/x))``)
    and ``t`` the oversampling ratio ``sqrt(n) / n**(1/x)``.  The failure
    bound is the probability that some bucket induced by the splitters
    exceeds ``(1 + t**(-1/6)) * n**(1 - 1/x)`` keys.
    """

    keys: tuple
    x: int
    t: float
    region: MemRegion | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if any(self.keys[i] > self.keys[i + 1] for i in range(len(self.keys) - 1)):
            raise MachineFault("splitters must be sorted")

    def failure_bound(self) -> float:
        root = self.t ** 0.5
        return 1.0 / (root * 2.0 ** root)


def chunk_bounds(n: int, p: int) -> list:
    """Split ``n`` items into ``p`` chunks of ``n // p``, remainder on the last."""
    if p < 1:
        raise MachineFault("need at least one chunk")
    q = n // p
    bounds = []
    for c in range(p):
        lo = c * q
        hi = (c + 1) * q if c < p - 1 else n
        bounds.append((lo, hi))
    return bounds


def spaced_slots(machine, count: int) -> MemRegion:
    """A region holding ``count`` words, one per cache block."""
    return machine.alloc(count * machine.config.B)


def _slot_addr(machine, slots: MemRegion, i: int) -> int:
    return slots.addr(i * machine.config.B)


def _combine_slots(machine, slots: MemRegion, count: int, cores, combine):
    """Fold ``count`` block-spaced slot values with a binary reduction tree.

    Leaves the result in slot 0 and returns it (read host-side afterwards).
    """
    g = min(len(cores), count)
    bounds = chunk_bounds(count, g)
    levels = []
    step = 1
    while step < g:
        levels.append(step)
        step *= 2

    def prog_for(ci):
        lo, hi = bounds[ci]

        def prog(core):
            acc = _NONE
            for k in range(lo, hi):
                v = core.read(_slot_addr(machine, slots, k))
                acc = v if acc is _NONE else combine(acc, v)
                core.tick(1)
            core.write(_slot_addr(machine, slots, ci), acc)
            yield
            for step in levels:
                if ci % (2 * step) == 0 and ci + step < g:
                    other = core.read(_slot_addr(machine, slots, ci + step))
                    acc = combine(acc, other)
                    core.tick(1)
                    core.write(_slot_addr(machine, slots, ci), acc)
                yield

        return prog

    machine.run_rounds({cores[ci].idx: prog_for(ci) for ci in range(g)})
    return machine.snapshot_memory(slots)[0]


def _reduce(machine, a: KeySeq, cores, combine):
    if a.n == 0:
        raise MachineFault("reduction over an empty sequence")
    g = min(len(cores), a.n)
    bounds = chunk_bounds(a.n, g)
    slots = spaced_slots(machine, g)

    def prog_for(ci):
        lo, hi = bounds[ci]

        def prog(core):
            acc = _NONE
            for i in range(lo, hi):
                v = core.read(a.addr(i))
                acc = v if acc is _NONE else combine(acc, v)
                core.tick(1)
            core.write(_slot_addr(machine, slots, ci), acc)
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: prog_for(ci) for ci in range(g)})
    return _combine_slots(machine, slots, g, cores[:g], combine)


def par_max(machine, a: KeySeq, cores):
    """Maximum of ``a``: per-core chunk folds, then a halving reduction tree."""
    return _reduce(machine, a, cores, lambda u, v: u if u >= v else v)


def par_sum(machine, a: KeySeq, cores):
    """Sum of ``a`` with the same chunk-then-tree schedule as :func:`par_max`."""
    if a.n == 0:
        return 0
    return _reduce(machine, a, cores, operator.add)


def prefix_sum(machine, a: KeySeq, cores, op=operator.add, out: MemRegion | None = None) -> KeySeq:
    """Inclusive prefix combine: ``R[i] = A[0] (op) ... (op) A[i]``.

    Phase one folds each core's block-aligned chunk bottom-up, storing every
    left-subtree value in an infix-laid tree array ``S``; a logarithmic
    cross-core round sequence fills the top ``p - 1`` tree nodes.  Phase two
    pushes carries down again, writing ``R``.  Chunks, tree nodes, and the
    block-spaced partial slots never share a written cache block, so the
    routine incurs no block misses once chunks hold at least one block.
    """
    n = a.n
    if out is not None and out.len < n:
        raise MachineFault("output region too small")
    if n == 0:
        return KeySeq(out if out is not None else machine.alloc(0), 0)
    B = machine.config.B
    g = max(1, len(cores))
    chunk = -(-n // (g * B)) * B
    g = -(-n // chunk)
    sreg = machine.alloc(n)
    rreg = out if out is not None else machine.alloc(n)
    aux = spaced_slots(machine, g)
    levels = []
    step = 1
    while step < g:
        levels.append(step)
        step *= 2

    def phase1(core, i, size):
        if size == 1:
            return core.read(a.addr(i))
        half = size // 2
        left = phase1(core, i, half)
        core.write(sreg.addr(i + half), left)
        right = phase1(core, i + half, size - half)
        core.tick(1)
        return op(left, right)

    def phase2(core, i, size, carry):
        if size == 1:
            v = core.read(a.addr(i))
            if carry is not _NONE:
                v = op(carry, v)
                core.tick(1)
            core.write(rreg.addr(i), v)
            return
        half = size // 2
        left = core.read(sreg.addr(i + half))
        phase2(core, i, half, carry)
        if carry is _NONE:
            down = left
        else:
            down = op(carry, left)
            core.tick(1)
        phase2(core, i + half, size - half, down)

    def prog_for(ci):
        lo = ci * chunk
        hi = min(n, lo + chunk)

        def prog(core):
            total = phase1(core, lo, hi - lo)
            core.write(_slot_addr(machine, aux, ci), total)
            yield
            acc = total
            for step in levels:
                if ci % (2 * step) == 0 and ci + step < g:
                    other = core.read(_slot_addr(machine, aux, ci + step))
                    core.write(sreg.addr((ci + step) * chunk), acc)
                    acc = op(acc, other)
                    core.tick(1)
                    core.write(_slot_addr(machine, aux, ci), acc)
                yield
            carry = _NONE
            for step in reversed(levels):
                group = (ci // (2 * step)) * (2 * step)
                mid = group + step
                if mid <= ci:
                    left = core.read(sreg.addr(mid * chunk))
                    if carry is _NONE:
                        carry = left
                    else:
                        carry = op(carry, left)
                        core.tick(1)
            phase2(core, lo, hi - lo, carry)

        return prog

    machine.run_rounds({cores[ci].idx: prog_for(ci) for ci in range(g)})
    return KeySeq(rreg, n)


def transpose(machine, a: KeySeq, m: int, n: int, cores, out: MemRegion | None = None) -> KeySeq:
    """Transpose a row-major ``m x n`` matrix into an ``n x m`` one.

    Recursively halves the column range while ``n > m/4`` and the row range
    otherwise, first to split the matrix over cores and then, within one
    core, down to constant-size tiles moved element by element.  When
    ``m < B`` the rule hands every core a column-contiguous band whose
    destination words are consecutive.
    """
    if m * n != a.n:
        raise MachineFault("matrix shape disagrees with sequence length")
    dst = out if out is not None else machine.alloc(m * n)
    if dst.len < m * n:
        raise MachineFault("output region too small")
    if m * n == 0:
        return KeySeq(dst, 0)

    def split(i0, i1, j0, j1, group):
        group = group[: max(1, (i1 - i0) * (j1 - j0))]
        if len(group) == 1:
            return [(group[0], i0, i1, j0, j1)]
        rows, cols = i1 - i0, j1 - j0
        if cols == 1 and rows == 1:
            return [(group[0], i0, i1, j0, j1)]
        c1 = len(group) // 2
        if 4 * cols > rows and cols > 1:
            jm = j0 + cols // 2
            return split(i0, i1, j0, jm, group[:c1]) + split(i0, i1, jm, j1, group[c1:])
        im = i0 + rows // 2
        return split(i0, im, j0, j1, group[:c1]) + split(im, i1, j0, j1, group[c1:])

    def tile_moves(core, i0, i1, j0, j1):
        rows, cols = i1 - i0, j1 - j0
        if rows * cols <= 32:
            for i in range(i0, i1):
                for j in range(j0, j1):
                    v = core.read(a.addr(i * n + j))
                    core.write(dst.addr(j * m + i), v)
            return
        if 4 * cols > rows:
            jm = j0 + cols // 2
            tile_moves(core, i0, i1, j0, jm)
            tile_moves(core, i0, i1, jm, j1)
        else:
            im = i0 + rows // 2
            tile_moves(core, i0, im, j0, j1)
            tile_moves(core, im, i1, j0, j1)

    jobs = split(0, m, 0, n, list(range(min(len(cores), m * n))))

    def prog_for(ci, i0, i1, j0, j1):
        def prog(core):
            tile_moves(core, i0, i1, j0, j1)
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: prog_for(ci, *rect) for ci, *rect in jobs})
    return KeySeq(dst, m * n)


def rank(machine, q, a: KeySeq, cores) -> int:
    """Number of keys in ``a`` strictly below ``q``.

    Each core counts within its chunk; the ``p`` partial counts are summed
    by a reduction over ``max(1, p*p // n)`` cores.
    """
    if a.n == 0:
        return 0
    g = min(len(cores), a.n)
    bounds = chunk_bounds(a.n, g)
    slots = spaced_slots(machine, g)

    def prog_for(ci):
        lo, hi = bounds[ci]

        def prog(core):
            count = 0
            for i in range(lo, hi):
                if core.read(a.addr(i)) < q:
                    count += 1
            core.tick(hi - lo)
            core.write(_slot_addr(machine, slots, ci), count)
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: prog_for(ci) for ci in range(g)})
    g2 = max(1, (g * g) // a.n)
    return _combine_slots(machine, slots, g, cores[:g2], operator.add)


def compact(machine, parts, cores, dest: MemRegion | None = None, stride: int = 1) -> KeySeq:
    """Concatenate item sequences; each core writes one contiguous slice.

    ``parts`` is a list of :class:`KeySeq` whose items are ``stride`` words
    wide.  Output slices are disjoint and in-order, so writes incur no block
    misses once a slice spans at least one block.
    """
    total = sum(part.n for part in parts)
    dst = dest if dest is not None else machine.alloc(total * stride)
    if dst.len < total * stride:
        raise MachineFault("destination region too small")
    if total == 0:
        return KeySeq(dst, 0)
    starts = [0]
    for part in parts:
        starts.append(starts[-1] + part.n)
    g = min(len(cores), total)
    bounds = chunk_bounds(total, g)

    def prog_for(ci):
        lo, hi = bounds[ci]

        def prog(core):
            k = bisect_right(starts, lo) - 1
            off = lo - starts[k]
            for item in range(lo, hi):
                while off >= parts[k].n:
                    k += 1
                    off = 0
                src = parts[k].region.base + off * stride
                for w in range(stride):
                    core.write(dst.addr(item * stride + w), core.read(src + w))
                off += 1
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: prog_for(ci) for ci in range(g)})
    return KeySeq(dst, total)


def brute_sort(machine, a: KeySeq, cores, dest: MemRegion | None = None) -> KeySeq:
    """Sort by all-pairs ranking: ``O(n^2/p)`` ops and no comparisons saved.

    Every core ranks its share of keys against the whole sequence (ties
    break by position), scatters key ``i`` to slot ``n * rank_i`` of an
    ``n^2``-word scratch in ``n/p`` single-write rounds, and one core
    gathers the ranks back into a contiguous result.
    """
    n = a.n
    dst = dest if dest is not None else machine.alloc(n)
    if dst.len < n:
        raise MachineFault("destination region too small")
    if n == 0:
        return KeySeq(dst, 0)
    g = min(len(cores), n)
    bounds = chunk_bounds(n, g)
    scratch = machine.alloc(n * n)
    phases = -(-n // g)

    def prog_for(ci):
        lo, hi = bounds[ci]

        def prog(core):
            mine = []
            for i in range(lo, hi):
                ki = core.read(a.addr(i))
                r = 0
                for j in range(n):
                    kj = core.read(a.addr(j))
                    if kj < ki or (kj == ki and j < i):
                        r += 1
                core.tick(n)
                mine.append((r, ki))
            yield
            for phase in range(phases):
                for r, ki in mine:
                    if r % phases == phase:
                        core.write(scratch.addr(n * r), ki)
                yield
            if ci == 0:
                for r in range(n):
                    core.write(dst.addr(r), core.read(scratch.addr(n * r)))

        return prog

    machine.run_rounds({cores[ci].idx: prog_for(ci) for ci in range(g)})
    return KeySeq(dst, n)


def sample_splitters(machine, a: KeySeq, x: int, cores, stream: int = 0) -> SplitterSet:
    """Draw ``ceil(n**(1/x))`` sorted splitters by oversampled chunk sampling.

    One random key is read from each of the ``~sqrt(n)`` chunks, the sample
    is brute-sorted, and every ``(sqrt(n) / n**(1/x))``-th element is kept.
    """
    n = a.n
    if x < 4:
        raise MachineFault("sampling exponent x must be >= 4")
    if n < 1:
        raise MachineFault("cannot sample an empty sequence")
    s_count = 1
    while s_count**x < n:
        s_count += 1
    m_star = max(isqrt(n), s_count)
    stride = max(1, m_star // s_count)
    chunks = chunk_bounds(n, m_star)
    star = machine.alloc(m_star)
    g = min(len(cores), m_star)
    owner = chunk_bounds(m_star, g)

    def prog_for(ci):
        lo, hi = owner[ci]

        def prog(core):
            rng = machine.rng(11, stream, ci)
            for k in range(lo, hi):
                clo, chi = chunks[k]
                off = int(rng.integers(chi - clo))
                core.write(star.addr(k), core.read(a.addr(clo + off)))
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: prog_for(ci) for ci in range(g)})
    sorted_star = brute_sort(machine, KeySeq(star, m_star), cores[:g])
    sreg = machine.alloc(s_count)

    def select(core):
        for j in range(1, s_count + 1):
            core.write(sreg.addr(j - 1), core.read(sorted_star.addr(stride * j - 1)))
        return
        yield

    machine.run_rounds({cores[0].idx: select})
    keys = tuple(machine.snapshot_memory(sreg))
    t = m_star / s_count
    return SplitterSet(keys=keys, x=x, t=t, region=sreg)


def sample_k_of_n_seq(machine, a: KeySeq, k: int, core, stream: int = 0) -> KeySeq:
    """Draw ``k`` keys with replacement on one core via sorted random ranks.

    The ranks are saved, sorted, and consumed by a single joint scan of the
    input, so the pass costs ``O(n + k log k)`` ops.
    """
    n = a.n
    if n == 0 or k == 0:
        return KeySeq(machine.alloc(0), 0)
    rng = machine.rng(12, stream, core.idx)
    ranks_reg = machine.alloc(k)
    out = machine.alloc(k)

    def prog(c):
        ranks = [int(v) for v in rng.integers(0, n, size=k)]
        for i, r in enumerate(ranks):
            c.write(ranks_reg.addr(i), r)
        yield
        ranks = [c.read(ranks_reg.addr(i)) for i in range(k)]
        ranks.sort()
        c.tick(k * max(1, k.bit_length()))
        for i, r in enumerate(ranks):
            c.write(ranks_reg.addr(i), r)
        yield
        write_at = 0
        pos = 0
        for i in range(k):
            r = c.read(ranks_reg.addr(i))
            while pos <= r:
                value = c.read(a.addr(pos))
                pos += 1
            c.write(out.addr(write_at), value)
            write_at += 1

    machine.run_rounds({core.idx: prog})
    return KeySeq(out, k)
