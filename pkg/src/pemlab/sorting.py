"""Randomized parallel sample sort on the simulated machine.

The recursion has three regimes.  A subproblem that fits a constant factor
of one cache (``n <= M**2``) is read, host-sorted, and written back by a
single core in one sweep.  A subproblem at or below the per-core grain
``N/P`` — or holding only one core — samples splitters and distributes its
keys in one pass into bucket columns, then recurses bucket by bucket.
Anything larger samples splitters with all of its cores, partitions through
the chunked parallel partitioner, and recurses with cores reassigned to
buckets in proportion to bucket size.

Two details keep the measured costs aligned with the intended shape:

* Keys are wrapped as ``(key, offset)`` pairs before the first distribution
  so every comparison sees distinct values; splitter quality therefore
  survives duplicate-heavy inputs, and leaves strip the wrapper as they
  write.  Inputs small enough to be a single leaf skip the wrapper.
* Leaves write their sorted keys straight into the caller-visible output
  slice located by the accepted bucket sizes, so concatenating bucket
  results costs nothing beyond the write each leaf already pays for.

Every distribution round is judged against the quality threshold
``tau(n)``: a round whose largest bucket exceeds it is discarded and
redrawn with fresh splitters, up to ``retry_cap`` times.  Exhausting the
cap records a diagnostic and keeps the final round rather than failing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import count
from math import isqrt

from pemlab.machine import MachineFault, MemRegion
from pemlab.partition import PartitionTask, _distribute_columns, partition_main
from pemlab.primitives import KeySeq, chunk_bounds, sample_splitters

__all__ = ["SortPlan", "SortStats", "sample_sort", "seq_sort"]


@dataclass(frozen=True)
class SortPlan:
    """Tuning knobs of the sample-sort recursion.

    ``x`` is the sampling exponent: a subproblem of ``n`` keys is cut
    around ``z = ceil(n**(1/x))`` splitters, and a round is accepted only
    if its largest bucket is at most ``tau(n)``.  ``seq_floor`` bounds the
    leaf size from below so tiny inputs never sample.
    """

    x: int = 32
    retry_cap: int = 20
    seq_floor: int = 32

    def __post_init__(self) -> None:
        if self.x < 4:
            raise MachineFault("sampling exponent x must be >= 4")
        if self.retry_cap < 1:
            raise MachineFault("retry cap must be positive")
        if self.seq_floor < 1:
            raise MachineFault("sequential floor must be positive")

    def splitter_count(self, n: int) -> int:
        """Smallest ``z`` with ``z**x >= n``."""
        z = 1
        while z**self.x < n:
            z += 1
        return z

    def tau(self, n: int) -> float:
        """Largest acceptable bucket: ``(1 + t**(-1/6)) * n**(1 - 1/x)``.

        ``t`` is the oversampling ratio ``max(sqrt(n), z) / z`` realized by
        the splitter draw.
        """
        if n <= 1:
            return float(n)
        z = self.splitter_count(n)
        t = max(isqrt(n), z) / z
        return (1.0 + t ** (-1.0 / 6.0)) * n ** (1.0 - 1.0 / self.x)


@dataclass
class SortStats:
    """Counters accumulated across one sort call tree.

    ``rounds`` counts sample-and-distribute rounds, ``resamples`` the
    rounds discarded for a bucket above threshold, and
    ``achieved_exponent`` the largest observed ``log_n`` of a kept round's
    biggest bucket.
    """

    rounds: int = 0
    resamples: int = 0
    achieved_exponent: float = 0.0

    def record_kept(self, n: int, largest: int) -> None:
        if n > 1 and largest > 1:
            self.achieved_exponent = max(
                self.achieved_exponent, math.log(largest) / math.log(n)
            )


@dataclass
class _Ctx:
    machine: object
    plan: SortPlan
    N: int
    P: int
    cap: int
    stats: SortStats
    base_stream: int
    counter: count = field(default_factory=count)

    def next_stream(self) -> int:
        return (self.base_stream << 20) | next(self.counter)


def sample_sort(machine, a: KeySeq, cores, plan: SortPlan | None = None,
                stats: SortStats | None = None, stream: int = 0) -> KeySeq:
    """Sort ``a`` into a fresh region using the given cores.

    Returns the sorted sequence; pass ``stats`` to observe distribution
    round counts.  Runs below ``M * p`` keys are legal but get a
    diagnostic, since the cost bounds assume at least one cacheful per
    core.
    """
    plan = plan if plan is not None else SortPlan()
    stats = stats if stats is not None else SortStats()
    if not cores:
        raise MachineFault("need at least one core")
    n = a.n
    out = machine.alloc(n)
    cfg = machine.config
    if n < cfg.M * len(cores):
        machine.diagnostics.append(
            f"sample_sort: n={n} below cost precondition M*p={cfg.M * len(cores)}"
        )
    if n == 0:
        return KeySeq(out, 0)
    cap = max(plan.seq_floor, cfg.M * cfg.M)
    ctx = _Ctx(machine=machine, plan=plan, N=n, P=len(cores), cap=cap,
               stats=stats, base_stream=stream)
    if len(cores) == 1 and n <= cap:
        _leaf(machine, a, cores[0], out, 0, tagged=False)
        return KeySeq(out, n)
    tagged = _tag_keys(machine, a, cores)
    _sort_rec(machine, tagged, list(cores), out, 0, ctx)
    return KeySeq(out, n)


def seq_sort(machine, a: KeySeq, core, plan: SortPlan | None = None,
             stats: SortStats | None = None, stream: int = 0) -> KeySeq:
    """Run the same recursion on a single core."""
    return sample_sort(machine, a, [core], plan=plan, stats=stats, stream=stream)


def _tag_keys(machine, a: KeySeq, cores) -> KeySeq:
    """Wrap every key as ``(key, offset)`` so all values are distinct."""
    n = a.n
    reg = machine.alloc(n)
    bounds = chunk_bounds(n, min(len(cores), n))

    def tag_for(ci):
        lo, hi = bounds[ci]

        def prog(core):
            for i in range(lo, hi):
                core.write(reg.addr(i), (core.read(a.addr(i)), i))
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: tag_for(ci) for ci in range(len(bounds))})
    return KeySeq(reg, n)


def _leaf(machine, a: KeySeq, core, out: MemRegion, off: int, tagged: bool) -> None:
    """Host-sort a cache-sized run and write it (unwrapped) into ``out``."""
    n = a.n

    def prog(c):
        vals = [c.read(a.addr(i)) for i in range(n)]
        vals.sort()
        c.tick(n * max(1, n.bit_length()))
        for i, v in enumerate(vals):
            c.write(out.addr(off + i), v[0] if tagged else v)
        return
        yield

    machine.run_rounds({core.idx: prog})


def _sort_rec(machine, seq: KeySeq, cores, out: MemRegion, off: int, ctx: _Ctx) -> None:
    n = seq.n
    if n == 0:
        return
    at_grain = len(cores) == 1 or n <= max(ctx.N // ctx.P, ctx.plan.seq_floor)
    if at_grain and n <= ctx.cap:
        _leaf(machine, seq, cores[0], out, off, tagged=True)
    elif at_grain:
        _seq_branch(machine, seq, cores[0], out, off, ctx)
    else:
        _par_branch(machine, seq, cores, out, off, ctx)


def _partition_round(machine, seq: KeySeq, cores, ctx: _Ctx, distribute):
    """Sample splitters and distribute, redrawing while the largest bucket
    exceeds ``tau(n)``; the final round is kept either way."""
    plan, stats = ctx.plan, ctx.stats
    n = seq.n
    tau = plan.tau(n)
    run = None
    for attempt in range(plan.retry_cap + 1):
        ss = sample_splitters(machine, seq, plan.x, cores, stream=ctx.next_stream())
        run = distribute(ss)
        stats.rounds += 1
        largest = max(run.sizes)
        if largest <= tau:
            stats.record_kept(n, largest)
            return run
        stats.resamples += 1
    machine.diagnostics.append(
        f"sample_sort: retry cap {plan.retry_cap} exhausted at n={n}; keeping the last round"
    )
    stats.record_kept(n, max(run.sizes))
    return run


def _seq_branch(machine, seq: KeySeq, core, out: MemRegion, off: int, ctx: _Ctx) -> None:
    run = _partition_round(
        machine, seq, [core], ctx,
        lambda ss: _distribute_columns(machine, seq, ss.keys, core),
    )
    starts = run.bucket_starts()
    sub_off = off
    for b, size in enumerate(run.sizes):
        view = KeySeq(MemRegion(run.seq.region.base + starts[b], size), size)
        _sort_rec(machine, view, [core], out, sub_off, ctx)
        sub_off += size


def _par_branch(machine, seq: KeySeq, cores, out: MemRegion, off: int, ctx: _Ctx) -> None:
    p = len(cores)
    if ctx.plan.splitter_count(seq.n) ** 2 > seq.n:
        # Too small to cut around its splitters; finish on one core.
        _seq_branch(machine, seq, cores[0], out, off, ctx)
        return

    def distribute(ss):
        task = PartitionTask(seq, ss.keys, N=seq.n, P=p)
        return partition_main(machine, task, cores, check=False)

    run = _partition_round(machine, seq, cores, ctx, distribute)
    shares = _core_shares(run.sizes, p, ctx.N // ctx.P)
    starts = run.bucket_starts()
    at = 0
    sub_off = off
    for b, size in enumerate(run.sizes):
        view = KeySeq(MemRegion(run.seq.region.base + starts[b], size), size)
        if shares[b]:
            band = cores[at : at + shares[b]]
            at += shares[b]
        else:
            band = [cores[min(at, p - 1)]]
        _sort_rec(machine, view, band, out, sub_off, ctx)
        sub_off += size


def _core_shares(sizes, p: int, grain: int) -> list:
    """Cores per bucket: proportional quotas, largest-remainder rounding.

    Buckets above the sequential grain are guaranteed a core even when
    rounding would starve them, taking one from the widest allocation.
    """
    n = sum(sizes)
    if n == 0:
        return [0] * len(sizes)
    quotas = [p * s / n for s in sizes]
    shares = [int(q) for q in quotas]
    left = p - sum(shares)
    order = sorted(
        range(len(sizes)),
        key=lambda b: (quotas[b] - shares[b], sizes[b]),
        reverse=True,
    )
    for b in order:
        if left == 0:
            break
        if sizes[b] > 0:
            shares[b] += 1
            left -= 1
    if left > 0:
        shares[max(range(len(sizes)), key=lambda b: sizes[b])] += left
    for b, s in enumerate(sizes):
        if s > grain and shares[b] == 0:
            donor = max(range(len(sizes)), key=lambda d: shares[d])
            if shares[donor] > 1:
                shares[donor] -= 1
                shares[b] = 1
    return shares
