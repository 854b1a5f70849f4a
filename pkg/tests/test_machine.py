import pytest

from pemlab.machine import Machine, MachineConfig, MachineFault


def scan_program(region, out=None):
    def prog(core):
        total = 0
        for i in range(region.len):
            total += core.read(region.addr(i))
        if out is not None:
            out.append(total)
        return
        yield  # pragma: no cover

    return prog


class TestConfig:
    def test_rejects_bad_shapes(self):
        with pytest.raises(MachineFault):
            MachineConfig(p=0, M=8, B=8)
        with pytest.raises(MachineFault):
            MachineConfig(p=1, M=4, B=8)
        with pytest.raises(MachineFault):
            MachineConfig(p=1, M=12, B=8)
        with pytest.raises(MachineFault):
            MachineConfig(p=1, M=8, B=0)

    def test_tall_cache_flag(self):
        MachineConfig(p=1, M=64, B=8, tall_cache=True)
        with pytest.raises(MachineFault):
            MachineConfig(p=1, M=32, B=8, tall_cache=True)

    def test_from_text(self):
        cfg = MachineConfig.from_text("p = 4\nM = 256\nB = 16\nseed = 7\nmiss_latency = 3\n")
        assert cfg == MachineConfig(p=4, M=256, B=16, miss_latency=3, seed=7)

    def test_from_text_rejects_unknown_keys(self):
        with pytest.raises(MachineFault):
            MachineConfig.from_text("p = 1\nM = 8\nB = 8\nbogus = 2\n")


class TestMemory:
    def test_fresh_region_reads_zero(self, make_machine):
        m = make_machine(B=8)
        region = m.alloc(16)
        assert m.snapshot_memory(region) == [0] * 16

    def test_regions_are_block_aligned(self, make_machine):
        m = make_machine(B=8)
        a = m.alloc(3)
        b = m.alloc(5)
        assert a.base % 8 == 0
        assert b.base % 8 == 0
        assert b.base >= a.end

    def test_out_of_bounds_access_faults(self, make_machine):
        m = make_machine()
        m.alloc(8)

        def prog(core):
            core.read(10**9)
            return
            yield

        with pytest.raises(MachineFault):
            m.run_rounds([prog])

    def test_load_and_snapshot_are_free(self, make_machine):
        m = make_machine()
        region = m.alloc(8)
        m.load(region, [5, 6, 7])
        assert m.snapshot_memory(region)[:3] == [5, 6, 7]
        led = m.ledger()
        assert led.ops == 0 and led.cache_misses == 0 and led.block_misses == 0


class TestCacheMisses:
    def test_cold_block_read_then_free_hits(self, make_machine):
        # Cold read of address 0 fetches the block; addresses 1..7 then hit.
        m = make_machine(B=8)
        region = m.alloc(8)
        m.run_rounds([scan_program(region)])
        led = m.ledger()
        assert led.cache_misses == 1
        assert led.ops == 8

    def test_sequential_scan_misses_once_per_block(self, make_machine):
        m = make_machine(B=8, M=64)
        region = m.alloc(64)
        m.run_rounds([scan_program(region)])
        assert m.ledger().cache_misses == 8

    def test_acceptance_scan_10000_words_B64(self, make_machine):
        m = make_machine(B=64, M=4096)
        region = m.alloc(10_000)
        m.run_rounds([scan_program(region)])
        assert m.ledger().cache_misses == 157

    def test_lru_eviction_causes_refetch(self, make_machine):
        # Cache holds M/B = 2 blocks; touching 3 then re-touching the first misses.
        m = make_machine(M=16, B=8)
        region = m.alloc(24)

        def prog(core):
            for addr in (0, 8, 16, 0):
                core.read(region.addr(addr))
            return
            yield

        m.run_rounds([prog])
        assert m.ledger().cache_misses == 4

    def test_write_allocate(self, make_machine):
        m = make_machine(B=8)
        region = m.alloc(8)

        def prog(core):
            core.write(region.addr(0), 1)
            core.write(region.addr(1), 2)
            return
            yield

        m.run_rounds([prog])
        led = m.ledger()
        assert led.cache_misses == 1
        assert led.block_misses == 0
        assert m.snapshot_memory(region)[:2] == [1, 2]

    def test_critical_path_of_single_core_scan(self, make_machine):
        # n ops plus miss_latency per fetched block.
        m = make_machine(B=8, M=64, miss_latency=5)
        region = m.alloc(20)
        m.run_rounds([scan_program(region)])
        led = m.ledger()
        assert led.critical_path == 20 + 5 * 3
        assert led.op_critical_path == 20


class TestBlockMisses:
    def test_four_writers_same_block_cost_six(self, make_machine):
        m = make_machine(p=4, B=8)
        region = m.alloc(8)

        def prog_for(i):
            def prog(core):
                core.write(region.addr(i), i)
                return
                yield

            return prog

        m.run_rounds([prog_for(i) for i in range(4)])
        led = m.ledger()
        assert led.block_misses == 6
        assert led.per_core_block_misses == (0, 1, 2, 3)

    def test_readers_of_written_block_pay_one_each(self, make_machine):
        m = make_machine(p=4, B=8)
        region = m.alloc(8)

        def reader(core):
            core.read(region.addr(0))
            return
            yield

        def writer(core):
            core.write(region.addr(1), 9)
            return
            yield

        m.run_rounds({0: reader, 1: reader, 2: reader, 3: writer})
        led = m.ledger()
        assert led.block_misses == 3
        assert led.per_core_block_misses == (1, 1, 1, 0)

    def test_disjoint_blocks_cost_nothing_extra(self, make_machine):
        m = make_machine(p=4, B=8)
        region = m.alloc(64)

        def prog_for(i):
            def prog(core):
                core.write(region.addr(8 * i), i)
                return
                yield

            return prog

        m.run_rounds([prog_for(i) for i in range(4)])
        assert m.ledger().block_misses == 0

    def test_written_block_invalidated_elsewhere(self, make_machine):
        m = make_machine(p=2, B=8)
        region = m.alloc(8)

        def holder(core):
            core.read(region.addr(0))
            yield
            yield
            core.read(region.addr(0))

        def writer(core):
            yield
            core.write(region.addr(0), 3)
            yield

        m.run_rounds({0: holder, 1: writer})
        led = m.ledger()
        # Core 0: cold miss, then a fresh miss after the invalidation.
        assert led.per_core_cache_misses[0] == 2

    def test_last_writer_is_sole_holder(self, make_machine):
        m = make_machine(p=2, B=8)
        region = m.alloc(8)

        def holder(core):
            core.read(region.addr(0))
            yield

        def writer(core):
            yield
            core.write(region.addr(0), 3)

        m.run_rounds({0: holder, 1: writer})
        state = m.cache_state()
        assert state.holders.get(region.base // 8) == [1]

    def test_same_round_writes_of_one_address_flag_diagnostic(self, make_machine):
        m = make_machine(p=2, B=8)
        region = m.alloc(8)

        def prog(core):
            core.write(region.addr(0), core.idx)
            return
            yield

        m.run_rounds([prog, prog])
        assert m.diagnostics
        # Commit order is core-id order, so the higher id lands last.
        assert m.snapshot_memory(region)[0] == 1


class TestRoundSemantics:
    def test_reads_observe_round_start_state(self, make_machine):
        m = make_machine(p=2, B=8)
        region = m.alloc(8)
        m.load(region, [10])
        seen = []

        def writer(core):
            core.write(region.addr(0), 99)
            yield

        def reader(core):
            seen.append(core.read(region.addr(0)))
            yield
            seen.append(core.read(region.addr(0)))

        m.run_rounds({0: writer, 1: reader})
        assert seen == [10, 99]

    def test_core_sees_its_own_round_writes(self, make_machine):
        m = make_machine(B=8)
        region = m.alloc(8)
        seen = []

        def prog(core):
            core.write(region.addr(0), 42)
            seen.append(core.read(region.addr(0)))
            return
            yield

        m.run_rounds([prog])
        assert seen == [42]

    def test_fetch_add_serialises_in_core_order(self, make_machine):
        m = make_machine(p=4, B=8)
        region = m.alloc(8)
        priors = {}

        def prog(core):
            priors[core.idx] = core.fetch_add(region.addr(0), 1)
            return
            yield

        m.run_rounds([prog] * 4)
        assert priors == {0: 0, 1: 1, 2: 2, 3: 3}
        assert m.snapshot_memory(region)[0] == 4
        # Same-block concurrent updates still pay migration block misses.
        assert m.ledger().block_misses == 6
        assert not m.diagnostics

    def test_empty_program_runs_zero_rounds(self, make_machine):
        m = make_machine(p=2)
        led = m.run_rounds([])
        assert led.ops == 0
        assert led.cache_misses == 0
        assert led.block_misses == 0
        assert led.rounds == 0

    def test_rounds_accumulate_across_runs(self, make_machine):
        m = make_machine(p=2, B=8)
        region = m.alloc(8)

        def prog(core):
            core.write(region.addr(core.idx), 1)
            yield
            core.read(region.addr(core.idx))
            yield

        m.run_rounds([prog, prog])
        first = m.ledger().rounds
        m.run_rounds([prog, prog])
        assert m.ledger().rounds == 2 * first

    def test_trace_export(self, make_machine, tmp_path):
        m = Machine(MachineConfig(p=2, M=64, B=8), trace=True)
        region = m.alloc(8)

        def prog(core):
            core.write(region.addr(core.idx), 1)
            return
            yield

        m.run_rounds([prog, prog])
        out = tmp_path / "trace.csv"
        m.export_trace(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "round,core,op,addr,miss_kind"
        assert any("write" in line for line in lines[1:])
        assert any("block_miss" in line for line in lines[1:])
