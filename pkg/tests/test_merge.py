"""Tests for bucketed-run merging against direct concatenation oracles."""
import random
from itertools import accumulate

import pytest

from pemlab import Machine, MachineConfig, MachineFault
from pemlab.merge import BucketedRun, concat_runs, merge_bucketed, plan_cuts
from pemlab.primitives import KeySeq


def load_run(machine, buckets, stride=1):
    flat = [w for bucket in buckets for item in bucket for w in item] if stride > 1 else [
        v for bucket in buckets for v in bucket
    ]
    reg = machine.alloc(max(1, len(flat)))
    machine.load(reg, flat)
    n = sum(len(b) for b in buckets)
    return BucketedRun(KeySeq(reg, n), tuple(len(b) for b in buckets))


def merged_oracle(all_buckets):
    out = []
    t = len(all_buckets[0])
    for j in range(t):
        for buckets in all_buckets:
            out.extend(buckets[j])
    return out


def run_words(machine, run, stride=1):
    return machine.snapshot_memory(run.seq.region)[: run.seq.n * stride]


class TestMergeBucketed:
    def test_two_runs_two_buckets_example(self, make_machine):
        m = make_machine(p=2)
        a = load_run(m, [[1, 5], [9]])
        b = load_run(m, [[2], [8, 9]])
        merged = merge_bucketed(m, [a, b], m.cores)
        assert run_words(m, merged) == [1, 5, 2, 9, 8, 9]
        assert merged.sizes == (3, 3)

    @pytest.mark.parametrize("p", [1, 2, 4, 8])
    @pytest.mark.parametrize("x,t", [(2, 2), (3, 4), (4, 1), (1, 5)])
    def test_matches_concatenation_oracle(self, make_machine, p, x, t):
        rng = random.Random(x * 10 + t + p)
        m = make_machine(p=p, M=2048, B=8)
        all_buckets = []
        for _ in range(x):
            splits = sorted(rng.randrange(0, 30) for _ in range(t - 1))
            vals = sorted(rng.randrange(100) for _ in range(30))
            cuts = [0] + splits + [30]
            all_buckets.append([vals[cuts[j]: cuts[j + 1]] for j in range(t)])
        runs = [load_run(m, b) for b in all_buckets]
        merged = merge_bucketed(m, runs, m.cores)
        assert run_words(m, merged) == merged_oracle(all_buckets)

    def test_preserves_run_order_for_equal_keys(self, make_machine):
        m = make_machine(p=4)
        runs = [load_run(m, [[(7, i)], [(9, i)]]) for i in range(4)]
        merged = merge_bucketed(m, runs, m.cores)
        assert run_words(m, merged) == [(7, 0), (7, 1), (7, 2), (7, 3), (9, 0), (9, 1), (9, 2), (9, 3)]

    def test_empty_buckets_and_runs(self, make_machine):
        m = make_machine(p=2)
        a = load_run(m, [[], [4], []])
        b = load_run(m, [[], [], []])
        c = load_run(m, [[1], [5], []])
        merged = merge_bucketed(m, [a, b, c], m.cores)
        assert run_words(m, merged) == [1, 4, 5]
        assert merged.sizes == (1, 2, 0)

    def test_strided_records_move_atomically(self, make_machine):
        m = make_machine(p=2)
        a = load_run(m, [[(1, -1)], [(6, -6)]], stride=2)
        b = load_run(m, [[(2, -2)], [(5, -5)]], stride=2)
        merged = merge_bucketed(m, [a, b], m.cores, stride=2)
        assert run_words(m, merged, stride=2) == [1, -1, 2, -2, 6, -6, 5, -5]

    def test_block_aligned_slices_have_no_block_misses(self, make_machine):
        # Pinned: two runs with two 64-word buckets each, p=4, B=16.
        m = make_machine(p=4, M=1024, B=16)
        mk = lambda lo: [list(range(lo, lo + 64)), list(range(lo + 500, lo + 564))]
        runs = [load_run(m, mk(0)), load_run(m, mk(1000))]
        merged = merge_bucketed(m, runs, m.cores)
        assert merged.seq.n == 256
        assert m.ledger().block_misses == 0

    def test_mismatched_bucket_counts_rejected(self, make_machine):
        m = make_machine(p=1)
        a = load_run(m, [[1], [2]])
        b = load_run(m, [[3]])
        with pytest.raises(MachineFault):
            merge_bucketed(m, [a, b], m.cores)

    def test_size_vector_must_match_items(self, make_machine):
        m = make_machine(p=1)
        reg = m.alloc(4)
        with pytest.raises(MachineFault):
            BucketedRun(KeySeq(reg, 4), (1, 2))


class TestPlanCuts:
    def test_exact_boundary_cuts_touch_one_segment_each(self):
        ends = [64, 128, 192, 256]
        plans = plan_cuts(ends, 4, 256)
        assert plans == [[(0, 0, 64)], [(1, 0, 64)], [(2, 0, 64)], [(3, 0, 64)]]

    def test_empty_segments_are_never_visited(self):
        ends = [0, 0, 5, 5, 9]
        plans = plan_cuts(ends, 2, 9)
        flat = [k for segs in plans for k, _, _ in segs]
        assert set(flat) <= {2, 4}
        got = []
        sizes = [0, 0, 5, 0, 4]
        starts = list(accumulate([0] + sizes))
        for segs in plans:
            for k, a, b in segs:
                got.extend(range(starts[k] + a, starts[k] + b))
        assert got == list(range(9))

    def test_incidences_bounded_by_segments_plus_cores(self):
        rng = random.Random(9)
        for trial in range(50):
            x = rng.randrange(1, 6)
            t = rng.randrange(1, 8)
            p = rng.randrange(1, 9)
            sizes = [rng.randrange(0, 7) for _ in range(x * t)]
            y = sum(sizes)
            ends = list(accumulate(sizes))
            plans = plan_cuts(ends, p, y)
            incidences = sum(len(s) for s in plans)
            assert incidences <= x * t + 2 * p
            covered = []
            starts = [0] + ends[:-1]
            for segs in plans:
                for k, a, b in segs:
                    covered.extend(range(starts[k] + a, starts[k] + b))
            assert covered == list(range(y))


class TestConcatRuns:
    def test_concatenates_in_run_order(self, make_machine):
        m = make_machine(p=2)
        a = load_run(m, [[3, 1], [2]])
        b = load_run(m, [[9], []])
        got = concat_runs(m, [a, b], m.cores)
        assert m.snapshot_memory(got.region)[: got.n] == [3, 1, 2, 9]
