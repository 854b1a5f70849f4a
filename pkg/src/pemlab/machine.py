"""Deterministic simulator of a private-cache multicore machine.

``p`` cores, each with an ``M``-word fully associative LRU cache, share a
word-addressed memory that moves in aligned ``B``-word blocks.  Programs are
per-core generators executed in lockstep rounds; ``yield`` is a barrier.

Cost rules
----------
* A read or write of a word whose block is not resident charges one cache
  miss and makes the block resident (evicting LRU blocks past ``M/B``).
* Within one round, if ``k`` cores write words of the same block, the
  ``i``-th writer in core-id order is charged ``i - 1`` block misses
  (``k*(k-1)/2`` total, the cost of migrating the block between writers).
* Within one round, each core that reads a block some other core writes in
  that round is charged one block miss (the forced re-read).
* At the end of a round every written block is invalidated everywhere
  except in the cache of its last writer.

Reads observe the memory state at the start of the round, except that a
core sees its own writes from the current round.  Writes commit at the
barrier in core-id order.  Two cores writing the same address in one round
is a data race: it is recorded as a diagnostic, never resolved silently.
``fetch_add`` is the sanctioned read-modify-write for shared counters; it
serialises in core-id order within the round and pays the same block-miss
charges as a write.
"""
from __future__ import annotations

import csv
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MachineFault",
    "MachineConfig",
    "MemRegion",
    "CostLedger",
    "CacheState",
    "Core",
    "Machine",
]


class MachineFault(Exception):
    """Invalid configuration, address, or program behaviour."""


@dataclass(frozen=True)
class MachineConfig:
    """Machine shape: core count, cache words, block words, miss latency."""

    p: int
    M: int
    B: int
    miss_latency: int = 1
    seed: int = 0
    tall_cache: bool = False

    def __post_init__(self) -> None:
        if self.p < 1:
            raise MachineFault("p must be >= 1")
        if self.B < 1:
            raise MachineFault("B must be >= 1")
        if self.M < self.B:
            raise MachineFault("M must be >= B")
        if self.M % self.B != 0:
            raise MachineFault("M must be a multiple of B")
        if self.miss_latency < 0:
            raise MachineFault("miss_latency must be >= 0")
        if self.tall_cache and self.M < self.B * self.B:
            raise MachineFault("tall_cache requires M >= B*B")

    @classmethod
    def from_text(cls, text: str) -> "MachineConfig":
        """Parse a ``key = value`` scenario config (p, M, B, seed, miss_latency)."""
        fields = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise MachineFault(f"bad config line: {raw!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            fields[key] = val
        kwargs = {}
        for key in ("p", "M", "B", "seed", "miss_latency"):
            if key in fields:
                kwargs[key] = int(fields.pop(key))
        if "tall_cache" in fields:
            kwargs["tall_cache"] = fields.pop("tall_cache").lower() in ("1", "true", "yes")
        if fields:
            raise MachineFault(f"unknown config keys: {sorted(fields)}")
        return cls(**kwargs)


@dataclass(frozen=True)
class MemRegion:
    """A block-aligned window of shared memory: words [base, base+len)."""

    base: int
    len: int

    @property
    def end(self) -> int:
        return self.base + self.len

    def addr(self, i: int) -> int:
        if not 0 <= i < self.len:
            raise MachineFault(f"index {i} outside region of length {self.len}")
        return self.base + i


@dataclass(frozen=True)
class CostLedger:
    """Per-core cost counters plus the round count.

    ``critical_path`` weights both miss kinds by ``miss_latency``;
    ``op_critical_path`` counts operations alone.  Aggregate counters are
    sums over cores.
    """

    per_core_ops: tuple
    per_core_cache_misses: tuple
    per_core_block_misses: tuple
    rounds: int
    miss_latency: int = 1

    @property
    def ops(self) -> int:
        return sum(self.per_core_ops)

    @property
    def cache_misses(self) -> int:
        return sum(self.per_core_cache_misses)

    @property
    def block_misses(self) -> int:
        return sum(self.per_core_block_misses)

    @property
    def misses(self) -> int:
        return self.cache_misses + self.block_misses

    @property
    def critical_path(self) -> int:
        return max(
            o + self.miss_latency * (c + b)
            for o, c, b in zip(
                self.per_core_ops,
                self.per_core_cache_misses,
                self.per_core_block_misses,
            )
        )

    @property
    def op_critical_path(self) -> int:
        return max(self.per_core_ops)


@dataclass(frozen=True)
class CacheState:
    """Resident blocks per core (LRU -> MRU) and holder cores per block."""

    resident: tuple
    holders: dict


class Core:
    """Handle through which a program touches memory and charges ops."""

    __slots__ = (
        "idx",
        "_m",
        "ops",
        "cache_misses",
        "block_misses",
        "_cache",
        "_wbuf",
        "_abuf",
    )

    def __init__(self, idx: int, machine: "Machine") -> None:
        self.idx = idx
        self._m = machine
        self.ops = 0
        self.cache_misses = 0
        self.block_misses = 0
        self._cache: OrderedDict = OrderedDict()
        self._wbuf: dict = {}
        self._abuf: dict = {}

    def _touch_block(self, block: int) -> bool:
        """Make ``block`` resident; return True when it was a miss."""
        cache = self._cache
        if block in cache:
            cache.move_to_end(block)
            return False
        self.cache_misses += 1
        cache[block] = None
        m = self._m
        holders = m._holders
        held = holders.get(block)
        if held is None:
            holders[block] = {self.idx}
        else:
            held.add(self.idx)
        if len(cache) > m._cache_blocks:
            evicted, _ = cache.popitem(last=False)
            m._holders[evicted].discard(self.idx)
        return True

    def read(self, addr: int):
        """Read one word.  Charges one op, plus a cache miss if non-resident."""
        m = self._m
        if not 0 <= addr < m._limit:
            raise MachineFault(f"read of unallocated address {addr}")
        self.ops += 1
        block = addr // m._B
        missed = self._touch_block(block)
        readers = m._round_readers.get(block)
        if readers is None:
            m._round_readers[block] = {self.idx}
        else:
            readers.add(self.idx)
        if m._trace is not None:
            m._trace.append((m._round, self.idx, "read", addr, "cache_miss" if missed else "hit"))
        if addr in self._wbuf:
            return self._wbuf[addr]
        return m._mem[addr]

    def write(self, addr: int, value) -> None:
        """Write one word, visible to other cores after the barrier."""
        m = self._m
        if not 0 <= addr < m._limit:
            raise MachineFault(f"write to unallocated address {addr}")
        self.ops += 1
        block = addr // m._B
        missed = self._touch_block(block)
        writers = m._round_writers.get(block)
        if writers is None:
            m._round_writers[block] = {self.idx}
        else:
            writers.add(self.idx)
        first = m._round_addr_writer.get(addr)
        if first is None:
            m._round_addr_writer[addr] = self.idx
        elif first != self.idx:
            m.diagnostics.append(
                f"data race: cores {first} and {self.idx} wrote address {addr} in round {m._round}"
            )
        self._wbuf[addr] = value
        if m._trace is not None:
            m._trace.append((m._round, self.idx, "write", addr, "cache_miss" if missed else "hit"))

    def fetch_add(self, addr: int, delta=1):
        """Atomically add ``delta`` to a word; returns the prior value.

        Serialises in core-id order within the round, so concurrent counter
        updates are well defined (and still pay same-block write charges).
        """
        m = self._m
        if not 0 <= addr < m._limit:
            raise MachineFault(f"fetch_add on unallocated address {addr}")
        self.ops += 1
        block = addr // m._B
        missed = self._touch_block(block)
        writers = m._round_writers.get(block)
        if writers is None:
            m._round_writers[block] = {self.idx}
        else:
            writers.add(self.idx)
        abuf = m._round_atomics
        prior = abuf.get(addr, m._mem[addr])
        abuf[addr] = prior + delta
        self._abuf[addr] = True
        if m._trace is not None:
            m._trace.append((m._round, self.idx, "fetch_add", addr, "cache_miss" if missed else "hit"))
        return prior

    def tick(self, n: int = 1) -> None:
        """Charge ``n`` compute operations with no memory traffic."""
        self.ops += n


class Machine:
    """Shared memory, per-core caches, and the lockstep round executor."""

    def __init__(self, config: MachineConfig, trace: bool = False) -> None:
        self.config = config
        self.cores = tuple(Core(i, self) for i in range(config.p))
        self.diagnostics: list = []
        self._B = config.B
        self._cache_blocks = config.M // config.B
        self._mem: list = []
        self._limit = 0
        self._holders: dict = {}
        self._rounds = 0
        self._round = 0
        self._round_readers: dict = {}
        self._round_writers: dict = {}
        self._round_addr_writer: dict = {}
        self._round_atomics: dict = {}
        self._trace = [] if trace else None

    # -- memory management -------------------------------------------------

    def alloc(self, length: int) -> MemRegion:
        """Allocate a zeroed, block-aligned region of ``length`` words."""
        if length < 0:
            raise MachineFault("allocation length must be >= 0")
        B = self._B
        base = -(-self._limit // B) * B
        new_limit = base + length
        self._mem.extend([0] * (new_limit - len(self._mem)))
        self._limit = new_limit
        return MemRegion(base, length)

    def load(self, region: MemRegion, values) -> None:
        """Install input data into a region without charging any cost."""
        values = list(values)
        if len(values) > region.len:
            raise MachineFault("load exceeds region length")
        self._mem[region.base : region.base + len(values)] = values

    def snapshot_memory(self, region: MemRegion) -> list:
        """Return a copy of a region's words without charging any cost."""
        if region.end > self._limit:
            raise MachineFault("snapshot outside allocated memory")
        return list(self._mem[region.base : region.end])

    # -- execution ---------------------------------------------------------

    def run_rounds(self, programs) -> CostLedger:
        """Run per-core generator programs to completion in lockstep rounds.

        ``programs`` maps core ids to functions of one argument (the
        :class:`Core` handle) returning generators; a list pairs with cores
        ``0..len-1``.  Each ``yield`` is a global barrier.  Returns the
        cumulative ledger.
        """
        if not isinstance(programs, dict):
            programs = dict(enumerate(programs))
        gens = []
        for idx in sorted(programs):
            if not 0 <= idx < self.config.p:
                raise MachineFault(f"no core {idx} on a {self.config.p}-core machine")
            gen = programs[idx](self.cores[idx])
            if gen is not None:
                gens.append((idx, gen))
        alive = gens
        while alive:
            self._round = self._rounds
            survivors = []
            for idx, gen in alive:
                try:
                    next(gen)
                except StopIteration:
                    pass
                else:
                    survivors.append((idx, gen))
            self._settle_round()
            self._rounds += 1
            alive = survivors
        return self.ledger()

    def _settle_round(self) -> None:
        mem = self._mem
        writers_by_block = self._round_writers
        # Commit buffered writes in core-id order: on a same-address race the
        # highest core id lands last, matching the writer arrival order.
        for core in self.cores:
            if core._wbuf:
                for addr, value in core._wbuf.items():
                    mem[addr] = value
                core._wbuf.clear()
            if core._abuf:
                core._abuf.clear()
        if self._round_atomics:
            for addr, value in self._round_atomics.items():
                mem[addr] = value
            self._round_atomics.clear()
        if writers_by_block:
            trace = self._trace
            for block in sorted(writers_by_block):
                writer_set = writers_by_block[block]
                writers = sorted(writer_set)
                for order, idx in enumerate(writers):
                    if order:
                        self.cores[idx].block_misses += order
                        if trace is not None:
                            trace.append((self._round, idx, "migrate", block * self._B, "block_miss"))
                readers = self._round_readers.get(block)
                if readers:
                    for idx in sorted(readers - writer_set):
                        self.cores[idx].block_misses += 1
                        if trace is not None:
                            trace.append((self._round, idx, "reread", block * self._B, "block_miss"))
                # Invalidate everywhere but the last writer's cache.
                keeper = writers[-1]
                holders = self._holders.get(block)
                if holders:
                    for idx in sorted(holders):
                        if idx != keeper:
                            self.cores[idx]._cache.pop(block, None)
                    holders.intersection_update({keeper})
        self._round_readers.clear()
        self._round_writers.clear()
        self._round_addr_writer.clear()

    # -- inspection --------------------------------------------------------

    def ledger(self) -> CostLedger:
        return CostLedger(
            per_core_ops=tuple(c.ops for c in self.cores),
            per_core_cache_misses=tuple(c.cache_misses for c in self.cores),
            per_core_block_misses=tuple(c.block_misses for c in self.cores),
            rounds=self._rounds,
            miss_latency=self.config.miss_latency,
        )

    def cache_state(self) -> CacheState:
        resident = tuple(tuple(c._cache.keys()) for c in self.cores)
        holders = {b: sorted(h) for b, h in self._holders.items() if h}
        return CacheState(resident=resident, holders=holders)

    def rng(self, *stream: int) -> np.random.Generator:
        """Counter-based Philox generator for a named integer stream."""
        seq = np.random.SeedSequence(entropy=self.config.seed, spawn_key=tuple(stream))
        return np.random.Generator(np.random.Philox(seed=seq))

    def export_trace(self, path) -> None:
        """Write the access trace as CSV (round, core, op, addr, miss_kind)."""
        if self._trace is None:
            raise MachineFault("machine was created without trace=True")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "core", "op", "addr", "miss_kind"])
            writer.writerows(self._trace)
