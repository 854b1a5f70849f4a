"""Processor-oblivious core estimation, id assignment, and prefix sums.

Anonymous cores discover how many of them are running and assign
themselves unique dense ids using only shared memory and private
randomness.  Every core registers in a random slot of an ``n / log n``
array with one atomic increment; the first registrant of each occupied
slot walks left one slot per round until it meets another registration,
and the single walker that falls off the left end is elected leader.
The leader walks right summing slot counts until it has seen ``log n``
registrants at location ``beta``, which yields the estimate
``p_hat ~ slots * log n / beta``; when the walk exhausts the array the
registrant total *is* the exact core count.  Slots then group into
blocks of ``slots * log n / p_hat``; block leaders (elected the same
way within their block) assign local ranks by scanning their block,
and the global leader turns per-block totals into dense id offsets.

Election walks take one lockstep round per step, so the leftmost-walker
argument is literal.  Every value later phases need (the estimate, the
block size, rank offsets) is written to shared words by the core that
computed it and read back by each participant, so the communication is
charged to the ledger; the host only mirrors what the leaders wrote.
"""
from __future__ import annotations

from dataclasses import dataclass

from pemlab.machine import MachineFault
from pemlab.primitives import KeySeq, chunk_bounds, prefix_sum, spaced_slots

__all__ = [
    "IdAssignment",
    "assign_ids",
    "estimate_processors",
    "oblivious_prefix",
]


@dataclass(frozen=True)
class IdAssignment:
    """Outcome of the anonymous core-count estimation.

    ``ids[k]`` is the two-part id of the ``k``-th participating core:
    ``(block, rank)``, the slot-array block it registered in (the high
    bits) and its rank within that block (the low bits).  ``dense_ids``
    flatten those to ``block offset + rank``; they are a permutation of
    ``range(total)``, so mapping dense id ``k`` to the ``k``-th chunk of
    an array yields disjoint, covering ownership.  ``estimated_p`` is
    exact whenever the counting walk saw the whole slot array
    (``saturated``); otherwise it stops at slot ``beta`` having counted
    ``count_target`` registrants.
    """

    estimated_p: int
    beta: int
    count_target: int
    slots: int
    block_slots: int
    saturated: bool
    ids: tuple
    dense_ids: tuple
    write_block_misses: int = 0

    def __post_init__(self):
        if self.estimated_p < 1:
            raise MachineFault("estimated core count must be positive")
        if sorted(self.dense_ids) != list(range(len(self.dense_ids))):
            raise MachineFault("dense ids are not a permutation")

    @property
    def total(self) -> int:
        return len(self.dense_ids)

    def owned_ranges(self, n: int) -> tuple:
        """Disjoint ``(lo, hi)`` chunks of ``[0, n)``, one per dense id."""
        return tuple(chunk_bounds(n, self.total))


def _count_target(n: int) -> int:
    return max(2, int(n).bit_length() - 1)


def estimate_processors(machine, n: int, cores=None,
                        stream: int = 0) -> IdAssignment:
    """Estimate the anonymous core count and assign two-part ids.

    ``n`` is the problem size; the estimation runs in its first
    ``n / log n`` locations so the whole procedure stays within the
    ``O(n / p)`` budget of a prefix computation.  Requires at most that
    many cores.  The estimate is exact when the cores number fewer than
    ``log n``; otherwise it is correct within a constant factor with
    high probability, and ids are unique in every trial because slot
    collisions serialize through an atomic counter.
    """
    cores = tuple(machine.cores if cores is None else cores)
    p = len(cores)
    if p == 0:
        raise MachineFault("need at least one core")
    if n < 2:
        raise MachineFault("slot array needs at least two locations")
    target = _count_target(n)
    slots_n = max(1, n // target)
    if p > slots_n:
        raise MachineFault(
            f"{p} cores exceed the {slots_n}-slot estimation array")

    slots = machine.alloc(slots_n)
    offs = machine.alloc(slots_n)
    header = spaced_slots(machine, 1)

    my_slot = [0] * p
    my_rank = [0] * p

    misses_before = machine.ledger().block_misses

    def register_for(ci):
        def prog(core):
            rng = machine.rng(17, stream, core.idx)
            s = int(rng.integers(0, slots_n))
            my_slot[ci] = s
            my_rank[ci] = core.fetch_add(slots.addr(s), 1)
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: register_for(ci) for ci in range(p)})
    write_misses = machine.ledger().block_misses - misses_before

    leader: list = []

    def left_walk_for(ci):
        def prog(core):
            pos = my_slot[ci] - 1
            while pos >= 0:
                v = core.read(slots.addr(pos))
                if v:
                    return
                pos -= 1
                yield
            leader.append(ci)

        return prog

    machine.run_rounds({cores[ci].idx: left_walk_for(ci)
                        for ci in range(p) if my_rank[ci] == 0})
    if len(leader) != 1:
        raise MachineFault("leftward election did not produce one leader")

    est: dict = {}

    def count_prog(core):
        total = 0
        beta = slots_n
        i = 0
        while i < slots_n:
            total += core.read(slots.addr(i))
            if total >= target:
                beta = i + 1
                break
            i += 1
            yield
        saturated = total < target
        if saturated:
            p_hat = max(1, total)
        else:
            p_hat = max(1, (target * slots_n + beta // 2) // beta)
        block = max(1, min(slots_n, (target * slots_n) // p_hat))
        est.update(saturated=saturated, p_hat=p_hat, block=block, beta=beta)
        core.write(header.addr(0), (p_hat, beta, block))
        core.tick(4)

    machine.run_rounds({cores[leader[0]].idx: count_prog})

    b = est["block"]
    nblocks = -(-slots_n // b)
    summaries = machine.alloc(nblocks)
    gsum = machine.alloc(nblocks)
    block_leader = [False] * p

    def block_walk_for(ci):
        start = (my_slot[ci] // b) * b

        def prog(core):
            core.read(header.addr(0))
            pos = my_slot[ci] - 1
            while pos >= start:
                v = core.read(slots.addr(pos))
                if v:
                    return
                pos -= 1
                yield
            block_leader[ci] = True

        return prog

    machine.run_rounds({cores[ci].idx: block_walk_for(ci)
                        for ci in range(p) if my_rank[ci] == 0})

    def block_scan_for(ci):
        mb = my_slot[ci] // b
        start, end = mb * b, min((mb + 1) * b, slots_n)

        def prog(core):
            running = 0
            for pos in range(start, end):
                v = core.read(slots.addr(pos))
                if v:
                    core.write(offs.addr(pos), running)
                    running += v
            core.write(summaries.addr(mb), running)
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: block_scan_for(ci)
                        for ci in range(p) if block_leader[ci]})

    grand = {}

    def gsum_prog(core):
        running = 0
        for k in range(nblocks):
            v = core.read(summaries.addr(k))
            core.write(gsum.addr(k), running)
            running += v
        grand["total"] = running
        return
        yield

    machine.run_rounds({cores[leader[0]].idx: gsum_prog})
    if grand["total"] != p:
        raise MachineFault("block totals do not account for every core")

    ids = [None] * p
    dense = [None] * p

    def derive_for(ci):
        def prog(core):
            hv = core.read(header.addr(0))
            mb = my_slot[ci] // hv[2]
            slot_off = core.read(offs.addr(my_slot[ci]))
            block_off = core.read(gsum.addr(mb))
            rank = slot_off + my_rank[ci]
            ids[ci] = (mb, rank)
            dense[ci] = block_off + rank
            core.tick(2)
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: derive_for(ci) for ci in range(p)})
    return IdAssignment(
        estimated_p=est["p_hat"],
        beta=est["beta"],
        count_target=target,
        slots=slots_n,
        block_slots=b,
        saturated=est["saturated"],
        ids=tuple(ids),
        dense_ids=tuple(dense),
        write_block_misses=write_misses,
    )


def assign_ids(assignment: IdAssignment) -> tuple:
    """Per-core dense ids (a permutation of ``range(total)``)."""
    return assignment.dense_ids


def oblivious_prefix(machine, a: KeySeq, cores=None,
                     stream: int = 0) -> KeySeq:
    """Inclusive prefix sums without knowing the core count in advance.

    Runs the id estimation, gives dense id ``k`` the ``k``-th chunk of
    the input, sums chunks sequentially, combines the per-chunk totals
    with the regular prefix routine, and rewrites each chunk with its
    carry.  The output equals :func:`pemlab.primitives.prefix_sum` for
    any hidden core count; when the cores outnumber the estimation
    slots the routine falls back to a single-core prefix and logs the
    event.
    """
    cores = tuple(machine.cores if cores is None else cores)
    if not cores:
        raise MachineFault("need at least one core")
    n = a.n
    if n == 0:
        return KeySeq(machine.alloc(0), 0)
    slots_n = max(1, n // _count_target(n)) if n >= 2 else 0
    if len(cores) == 1 or len(cores) > slots_n:
        if len(cores) > 1:
            machine.diagnostics.append(
                f"procalloc: {len(cores)} cores exceed the {slots_n}-slot "
                "estimation array; single-core prefix fallback")
        return prefix_sum(machine, a, cores[:1])

    est = estimate_processors(machine, n, cores, stream=stream)
    owners = est.owned_ranges(n)
    partials = machine.alloc(est.total)
    out = machine.alloc(n)

    def sum_for(ci):
        k = est.dense_ids[ci]
        lo, hi = owners[k]

        def prog(core):
            acc = 0
            for i in range(lo, hi):
                acc += core.read(a.addr(i))
                core.tick(1)
            core.write(partials.addr(k), acc)
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: sum_for(ci)
                        for ci in range(len(cores))})
    pref = prefix_sum(machine, KeySeq(partials, est.total), cores)

    def emit_for(ci):
        k = est.dense_ids[ci]
        lo, hi = owners[k]

        def prog(core):
            acc = core.read(pref.addr(k - 1)) if k else 0
            for i in range(lo, hi):
                acc += core.read(a.addr(i))
                core.write(out.addr(i), acc)
                core.tick(1)
            return
            yield

        return prog

    machine.run_rounds({cores[ci].idx: emit_for(ci)
                        for ci in range(len(cores))})
    return KeySeq(out, n)
