import math
from typing import List, Optional

import numpy as np

from config.settings import Config
from models.records import ExcursionRecord
from services.clock import ActualClock, CrossingLedger, canonical_edge, record_step
from services.kernels.nearest_neighbor import NearestNeighborKernel
from services.montecarlo.batch import line_excursions
from services.montecarlo.stats import StreamingMoments
from services.passage import ImpatienceClass, PassageSchedule, classify


class WalkState:
    """Position, crossing ledger and clock of one walk (no path history)."""

    def __init__(self, kernel, schedule: PassageSchedule, start):
        kernel.require(start)
        self.kernel = kernel
        self.position = start
        self.ledger = CrossingLedger()
        self.clock = ActualClock(schedule, keep_times=False)

    def step(self, rng):
        v = self.position
        u = self.kernel.step(v, rng)
        record_step(self.ledger, self.clock, canonical_edge(v, u))
        self.position = u
        return u


def _excursion(state: WalkState, rng, step_cap: int, edge_cap: Optional[int]) -> ExcursionRecord:
    """Run `state` until it is back at its current vertex, from whatever ledger it carries."""
    kernel = state.kernel
    start = state.position
    t0 = state.clock.now
    seen = set()
    steps = 0
    max_norm = kernel.norm(start)
    while True:
        v = state.position
        u = state.step(rng)
        seen.add(canonical_edge(v, u))
        steps += 1
        max_norm = max(max_norm, kernel.norm(u))
        if u == start:
            return ExcursionRecord(steps, state.clock.now - t0, len(seen), max_norm, False)
        if steps >= step_cap or (edge_cap and len(seen) >= edge_cap):
            return ExcursionRecord(steps, state.clock.now - t0, len(seen), max_norm, True)


def run_excursion(kernel, schedule: PassageSchedule, rng, step_cap: Optional[int] = None,
                  start=None, edge_cap: Optional[int] = None) -> ExcursionRecord:
    """
    One excursion from `start` (the origin by default) back to it.

    Args:
        kernel: Any BaseKernel
        schedule: Passage schedule charged on the clock
        rng: Anything with random(); the kernel draws one uniform per step
        step_cap: Steps after which the excursion is censored
        start: Start vertex
        edge_cap: Optional cap on distinct edges, also censoring

    Returns:
        ExcursionRecord
    """
    step_cap = Config.STEP_CAP if step_cap is None else int(step_cap)
    if step_cap < 1:
        raise ValueError("step_cap must be >= 1")
    start = kernel.origin if start is None else start
    return _excursion(WalkState(kernel, schedule, start), rng, step_cap, edge_cap)


def successive_excursions(kernel, schedule: PassageSchedule, count: int, rng,
                          step_cap: Optional[int] = None, start=None) -> List[ExcursionRecord]:
    """
    The first `count` excursions of one walk from `start`, sharing its crossing ledger,
    so the n-th duration is T(tau_n) - T(tau_{n-1}). Stops after a censored excursion.
    """
    step_cap = Config.STEP_CAP if step_cap is None else int(step_cap)
    start = kernel.origin if start is None else start
    state = WalkState(kernel, schedule, start)
    out = []
    for _ in range(count):
        record = _excursion(state, rng, step_cap, None)
        out.append(record)
        if record.censored:
            break
    return out


class ExcursionStats:
    """
    Streaming summary of many excursions.

    Moments cover completed excursions; censored ones are counted separately with
    their own histogram of M (their M is a lower bound). capped averages the
    duration of every replica, censored ones at their cut. Histograms have
    Config.HIST_MAX bins, the last one collecting M >= HIST_MAX - 1.
    """

    def __init__(self, total: Optional[float] = None, hist_max: Optional[int] = None):
        self.total = total
        self.hist_max = Config.HIST_MAX if hist_max is None else int(hist_max)
        self.duration = StreamingMoments()
        self.steps = StreamingMoments()
        self.edges = StreamingMoments()
        self.capped = StreamingMoments()
        self.replicas = 0
        self.censored = 0
        self.sandwich_violations = 0
        self.m_hist = np.zeros(self.hist_max, dtype=np.int64)
        self.censored_m_hist = np.zeros(self.hist_max, dtype=np.int64)

    def add(self, record: ExcursionRecord) -> None:
        self.replicas += 1
        self.capped.update(record.duration)
        b = min(record.distinct_edges, self.hist_max - 1)
        if record.censored:
            self.censored += 1
            self.censored_m_hist[b] += 1
            return
        self.m_hist[b] += 1
        self.duration.update(record.duration)
        self.steps.update(record.steps)
        self.edges.update(record.distinct_edges)
        if self.total is not None and not record.within_sandwich(self.total):
            self.sandwich_violations += 1

    def add_all(self, records) -> "ExcursionStats":
        for record in records:
            self.add(record)
        return self

    def merge(self, other: "ExcursionStats") -> "ExcursionStats":
        self.duration.merge(other.duration)
        self.steps.merge(other.steps)
        self.edges.merge(other.edges)
        self.capped.merge(other.capped)
        self.replicas += other.replicas
        self.censored += other.censored
        self.sandwich_violations += other.sandwich_violations
        self.m_hist += other.m_hist
        self.censored_m_hist += other.censored_m_hist
        return self

    @property
    def censor_rate(self) -> float:
        return self.censored / self.replicas if self.replicas else math.nan

    def survival(self, m: int) -> float:
        """Empirical P(M >= m), counting censored excursions that already reached m."""
        if not 1 <= m < self.hist_max:
            raise ValueError(f"m must lie in [1, {self.hist_max - 1}]")
        hits = self.m_hist[m:].sum() + self.censored_m_hist[m:].sum()
        return float(hits) / self.replicas

    def to_dict(self):
        out = {
            "replicas": self.replicas,
            "censored": self.censored,
            "censor_rate": self.censor_rate,
            "mean_duration": self.duration.mean if self.duration.n else None,
            "stderr_duration": self.duration.stderr if self.duration.n >= 2 else None,
            "capped_mean_duration": self.capped.mean if self.capped.n else None,
            "mean_steps": self.steps.mean if self.steps.n else None,
            "mean_M": self.edges.mean if self.edges.n else None,
            "stderr_M": self.edges.stderr if self.edges.n >= 2 else None,
        }
        if self.total is not None:
            out["sandwich_violations"] = self.sandwich_violations
        return out


def sandwich_total(schedule: PassageSchedule) -> Optional[float]:
    """S when the schedule is strongly (or infinitely) impatient, else None."""
    cls = classify(schedule)
    if cls.kind in (ImpatienceClass.STRONGLY_IMPATIENT, ImpatienceClass.INFINITELY_IMPATIENT):
        return cls.total_high
    return None


def excursion_stats(kernel, schedule: PassageSchedule, replicas: int, step_cap: Optional[int],
                    rng, start=None, edge_cap: Optional[int] = None,
                    batch: Optional[int] = None) -> ExcursionStats:
    """
    Summary of `replicas` independent excursions.

    Nearest-neighbour kernels run through the vectorized line engine in batches of
    Config.MC_BATCH; other kernels step one excursion at a time.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    step_cap = Config.STEP_CAP if step_cap is None else int(step_cap)
    if step_cap < 1:
        raise ValueError("step_cap must be >= 1")
    batch = Config.MC_BATCH if batch is None else int(batch)
    stats = ExcursionStats(sandwich_total(schedule))
    if isinstance(kernel, NearestNeighborKernel):
        done = 0
        while done < replicas:
            n = min(batch, replicas - done)
            stats.add_all(line_excursions(kernel, schedule, rng, n, step_cap, start, edge_cap))
            done += n
        return stats
    for _ in range(replicas):
        stats.add(run_excursion(kernel, schedule, rng, step_cap, start, edge_cap))
    return stats
