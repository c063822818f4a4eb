import csv
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Sequence, Tuple

from models.errors import HorizonError, UnknownVertexError
from services.passage import PassageSchedule

Edge = Tuple[Hashable, Hashable]


def canonical_edge(u, v) -> Edge:
    """Undirected edge key: endpoints in increasing order."""
    return (u, v) if u <= v else (v, u)


@dataclass
class CrossingLedger:
    """Crossing counts Z(e, m) per undirected edge after m steps."""
    counts: Dict[Edge, int] = field(default_factory=dict)
    steps: int = 0

    def count(self, edge: Edge) -> int:
        return self.counts.get(edge, 0)

    @property
    def distinct_edges(self) -> int:
        return len(self.counts)


class ActualClock:
    """
    Cumulative actual times T(0) = 0, T(1), ..., T(m).

    Times are accumulated with Kahan compensation so that long trajectories keep
    their relative error near machine precision. With keep_times=False only the
    running total is stored (excursion sampling never inverts the clock).
    """

    def __init__(self, schedule: PassageSchedule, keep_times: bool = True):
        self.schedule = schedule
        self.keep_times = keep_times
        self.times: List[float] = [0.0]
        self._now = 0.0
        self._steps = 0
        self._compensation = 0.0

    @property
    def now(self) -> float:
        return self._now

    @property
    def steps(self) -> int:
        return self._steps

    def advance(self, cost: float) -> float:
        total = self._now
        y = cost - self._compensation
        t = total + y
        self._compensation = (t - total) - y
        # compensation must never make T step backwards
        t = max(t, total)
        self._now = t
        self._steps += 1
        if self.keep_times:
            self.times.append(t)
        return t


def record_step(ledger: CrossingLedger, clock: ActualClock, edge: Edge) -> Tuple[CrossingLedger, ActualClock]:
    """
    Charge the crossing of an edge: T(m) = T(m-1) + s_{Z(edge, m-1)}, then Z(edge) += 1.

    Either direction of the edge increments the same counter.
    """
    k = ledger.counts.get(edge, 0)
    clock.advance(clock.schedule.value(k))
    ledger.counts[edge] = k + 1
    ledger.steps += 1
    return ledger, clock


def inverse_clock(clock: ActualClock, t: float) -> float:
    """
    U(t) = sup{s : T(s) <= t} for the piecewise-linear interpolation of T.

    Raises:
        ValueError: for negative t
        HorizonError: if t is past T(m) of the recorded trajectory
    """
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if not clock.keep_times:
        raise ValueError("clock was created without keep_times; U(t) needs the full history")
    times = clock.times
    if t > times[-1]:
        raise HorizonError(f"t={t!r} is beyond the recorded actual time {times[-1]!r}")
    i = bisect_right(times, t) - 1
    if i >= len(times) - 1:
        return float(i)
    return i + (t - times[i]) / (times[i + 1] - times[i])


def position_at(trajectory: Sequence, clock: ActualClock, t: float):
    """X^imp(t) = X_{floor(U(t))}."""
    return trajectory[int(math.floor(inverse_clock(clock, t)))]


class TimedWalk:
    """
    A trajectory of the underlying walk together with its ledger and clock.

    Owned by a single worker; nothing in it is shared.
    """

    def __init__(self, kernel, schedule: PassageSchedule, start=None):
        self.kernel = kernel
        self.schedule = schedule
        start = kernel.origin if start is None else start
        kernel.require(start)
        self.path: List = [start]
        self.ledger = CrossingLedger()
        self.clock = ActualClock(schedule)

    @property
    def position(self):
        return self.path[-1]

    def advance(self, rng):
        """Take one step of the kernel and charge it on the clock."""
        v = self.position
        u = self.kernel.step(v, rng)
        record_step(self.ledger, self.clock, canonical_edge(v, u))
        self.path.append(u)
        return u

    def move_to(self, u):
        """Scripted step to a neighbour of the current position."""
        v = self.position
        if self.kernel is not None and self.kernel.transition_probability(v, u) <= 0.0:
            raise UnknownVertexError(f"{v!r} -> {u!r} is not a step of the kernel")
        record_step(self.ledger, self.clock, canonical_edge(v, u))
        self.path.append(u)
        return u

    @classmethod
    def from_path(cls, path: Sequence, schedule: PassageSchedule, kernel=None) -> "TimedWalk":
        walk = cls.__new__(cls)
        walk.kernel = kernel
        walk.schedule = schedule
        walk.path = [path[0]]
        walk.ledger = CrossingLedger()
        walk.clock = ActualClock(schedule)
        for u in path[1:]:
            walk.move_to(u)
        return walk

    def position_at(self, t: float):
        return position_at(self.path, self.clock, t)


def write_trace(path: str, walk: TimedWalk) -> None:
    """Dump the trajectory as CSV rows (step, vertex, T)."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "vertex", "T"])
        for m, (v, t) in enumerate(zip(walk.path, walk.clock.times)):
            writer.writerow([m, format_vertex(v), repr(t)])


def format_vertex(v) -> str:
    if isinstance(v, tuple):
        return ";".join(str(int(a)) for a in v)
    return str(int(v))
