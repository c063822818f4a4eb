import csv

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.errors import HorizonError, UnknownVertexError
from services.clock import (
    ActualClock,
    CrossingLedger,
    TimedWalk,
    canonical_edge,
    inverse_clock,
    position_at,
    record_step,
    write_trace,
)
from services.kernels import Domain, make_drift_kernel, make_lattice_kernel
from services.montecarlo.rng import make_rng
from services.passage import make_schedule

ZIGZAG = [0, 1, 0, 1]
FRESH = [0, 1, 0, 1, 2]


class TestRecordStep:
    def test_geometric_half(self):
        walk = TimedWalk.from_path(ZIGZAG, make_schedule("Geometric", 0.5))
        assert walk.clock.times == pytest.approx([0.0, 1.0, 1.5, 1.75])
        assert walk.ledger.count((0, 1)) == 3
        assert walk.ledger.steps == 3

    def test_either_direction_counts_once(self):
        ledger, clock = CrossingLedger(), ActualClock(make_schedule("Constant"))
        record_step(ledger, clock, canonical_edge(3, 2))
        record_step(ledger, clock, canonical_edge(2, 3))
        assert ledger.counts == {(2, 3): 2}
        assert ledger.distinct_edges == 1

    def test_zero_tail_charges_first_crossings(self):
        walk = TimedWalk.from_path(FRESH, make_schedule("ZeroTail"))
        assert walk.clock.times == [0.0, 1.0, 1.0, 1.0, 2.0]

    def test_constant_schedule_is_identity(self):
        walk = TimedWalk(make_drift_kernel("Zero", domain=Domain.FULL_LINE), make_schedule("Constant"))
        rng = make_rng(5)
        for _ in range(200):
            walk.advance(rng)
        assert walk.clock.times == [float(m) for m in range(201)]

    def test_ledger_sums_to_steps(self):
        walk = TimedWalk(make_lattice_kernel(2), make_schedule("Power", 2.0))
        rng = make_rng(9)
        for _ in range(500):
            walk.advance(rng)
        assert sum(walk.ledger.counts.values()) == walk.clock.steps == 500

    def test_scripted_path_must_follow_kernel(self):
        with pytest.raises(UnknownVertexError):
            TimedWalk.from_path([0, 2], make_schedule("Constant"), make_drift_kernel("Zero"))

    def test_long_run_keeps_precision(self):
        clock = ActualClock(make_schedule("Constant"), keep_times=False)
        for _ in range(100_000):
            clock.advance(0.1)
        assert clock.now == pytest.approx(10_000.0, rel=1e-12)
        assert clock.times == [0.0]


class TestInverseClock:
    def test_geometric_half(self):
        walk = TimedWalk.from_path(ZIGZAG, make_schedule("Geometric", 0.5))
        assert inverse_clock(walk.clock, 1.5) == pytest.approx(2.0)
        assert walk.position_at(1.5) == 0

    def test_constant_is_identity(self):
        walk = TimedWalk.from_path([0, 1, 2, 1, 0, -1], make_schedule("Constant"))
        for t in (0.0, 0.5, 2.25, 4.0, 5.0):
            assert inverse_clock(walk.clock, t) == pytest.approx(t)
        assert walk.position_at(2.25) == 2

    def test_zero_tail_generalized_inverse(self):
        walk = TimedWalk.from_path(FRESH, make_schedule("ZeroTail"))
        assert inverse_clock(walk.clock, 1.0) == 3.0
        assert walk.position_at(1.0) == 1
        assert inverse_clock(walk.clock, 1.5) == pytest.approx(3.5)

    def test_horizon_and_sign(self):
        walk = TimedWalk.from_path(ZIGZAG, make_schedule("Constant"))
        with pytest.raises(HorizonError):
            inverse_clock(walk.clock, 3.5)
        with pytest.raises(ValueError):
            inverse_clock(walk.clock, -1.0)
        with pytest.raises(HorizonError):
            position_at(walk.path, walk.clock, 10.0)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32), alpha=st.floats(min_value=0.5, max_value=4.0))
    def test_round_trip(self, seed, alpha):
        walk = TimedWalk(make_drift_kernel("Zero", domain=Domain.FULL_LINE), make_schedule("Power", alpha))
        rng = make_rng(seed)
        for _ in range(100):
            walk.advance(rng)
        times = walk.clock.times
        for m in (0, 1, 17, 50, 100):
            assert inverse_clock(walk.clock, times[m]) == pytest.approx(m, abs=1e-9)
        t = 0.5 * (times[10] + times[11])
        assert walk.clock.times[10] <= t <= times[11]
        u = inverse_clock(walk.clock, t)
        assert 10.0 <= u <= 11.0


class TestTrace:
    def test_write_trace(self, tmp_path):
        walk = TimedWalk.from_path(ZIGZAG, make_schedule("Geometric", 0.5))
        path = tmp_path / "trace.csv"
        write_trace(str(path), walk)
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["step", "vertex", "T"]
        assert rows[-1] == ["3", "1", "1.75"]

    def test_lattice_vertices(self, tmp_path):
        walk = TimedWalk.from_path([(0, 0), (1, 0), (1, 1)], make_schedule("Constant"), make_lattice_kernel(2))
        path = tmp_path / "trace.csv"
        write_trace(str(path), walk)
        assert "1;1" in path.read_text()
