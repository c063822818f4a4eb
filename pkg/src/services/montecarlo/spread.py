from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from config.settings import Config
from models.records import RangeSample
from services.kernels.nearest_neighbor import Domain, NearestNeighborKernel
from services.montecarlo.batch import line_range_traces
from services.montecarlo.excursions import WalkState, sandwich_total
from services.montecarlo.occupation import RangeChain
from services.passage import PassageSchedule


@dataclass
class RangeTrace:
    """
    R_t on a grid of checkpoints for several independent trajectories.

    distinct[i, j] is R_t at checkpoints[j] on trajectory i. span (max - min of the
    positions seen) is filled for kernels on the line, right (the largest position)
    for traces drawn from the range-extension chain.
    Entries of trajectories cut at the step cap stay -1.
    """
    checkpoints: np.ndarray
    distinct: np.ndarray
    truncated: np.ndarray
    span: Optional[np.ndarray] = None
    right: Optional[np.ndarray] = None
    total: Optional[float] = None

    @property
    def observed(self) -> np.ndarray:
        return self.distinct >= 0

    def lower_bound_violations(self) -> int:
        """Entries with R_t < floor(t/S) (strongly impatient schedules only)."""
        if self.total is None:
            return 0
        bound = np.floor(self.checkpoints / self.total)[None, :]
        return int(np.count_nonzero(self.observed & (self.distinct < bound)))

    def upper_bound_violations(self) -> int:
        """Entries with R_t > t + 1."""
        bound = self.checkpoints[None, :] + 1.0
        return int(np.count_nonzero(self.observed & (self.distinct > bound)))

    def mean_ratio(self) -> np.ndarray:
        """Mean of R_t / t per checkpoint over the observed trajectories (nan at t = 0)."""
        out = np.full(len(self.checkpoints), np.nan)
        for j, t in enumerate(self.checkpoints):
            seen = self.observed[:, j]
            if t > 0.0 and seen.any():
                out[j] = float(np.mean(self.distinct[seen, j])) / t
        return out

    def samples(self, path: int = 0) -> List[RangeSample]:
        span = self.span if self.span is not None else np.full(self.distinct.shape, -1)
        return [RangeSample(float(t), int(d), int(s))
                for t, d, s in zip(self.checkpoints, self.distinct[path], span[path])]


def checkpoint_grid(t_max: float, checkpoints) -> np.ndarray:
    """An explicit sorted list of times in [0, t_max], or that many evenly spaced ones."""
    if not t_max > 0.0:
        raise ValueError("t_max must be positive")
    if isinstance(checkpoints, (int, np.integer)):
        if checkpoints < 1:
            raise ValueError("need at least one checkpoint")
        return np.linspace(t_max / checkpoints, t_max, int(checkpoints))
    grid = np.sort(np.asarray(checkpoints, dtype=np.float64))
    if grid.size == 0 or grid[0] < 0.0 or grid[-1] > t_max:
        raise ValueError("checkpoints must lie in [0, t_max]")
    return grid


def range_trace(kernel, schedule: PassageSchedule, t_max: float, checkpoints, rng,
                paths: int = 1, step_cap: Optional[int] = None) -> RangeTrace:
    """
    Sample R_t, the number of edges crossed by the time-changed walk by actual
    time t, at each checkpoint.

    Infinitely impatient schedules add exactly one edge per unit of actual time;
    those trajectories come from the range-extension chain. Nearest-neighbour
    kernels otherwise run through the vectorized line engine.
    """
    step_cap = Config.STEP_CAP if step_cap is None else int(step_cap)
    grid = checkpoint_grid(t_max, checkpoints)
    total = sandwich_total(schedule)
    if schedule.infinitely_impatient:
        return _range_chain_trace(kernel, grid, paths, rng, total)
    if isinstance(kernel, NearestNeighborKernel):
        distinct, span, truncated = line_range_traces(kernel, schedule, rng, paths, grid, step_cap)
        return RangeTrace(grid, distinct, truncated, span, None, total)
    return clock_range_trace(kernel, schedule, t_max, grid, rng, paths, step_cap)


def clock_range_trace(kernel, schedule: PassageSchedule, t_max: float, checkpoints, rng,
                      paths: int = 1, step_cap: Optional[int] = None) -> RangeTrace:
    """R_t from walks stepped one at a time on their crossing clock, for any kernel and schedule."""
    step_cap = Config.STEP_CAP if step_cap is None else int(step_cap)
    grid = checkpoint_grid(t_max, checkpoints)
    distinct = np.full((paths, len(grid)), -1, dtype=np.int64)
    truncated = np.zeros(paths, dtype=bool)
    for i in range(paths):
        distinct[i], truncated[i] = _scalar_trace(kernel, schedule, rng, grid, step_cap)
    return RangeTrace(grid, distinct, truncated, None, None, sandwich_total(schedule))


def _scalar_trace(kernel, schedule, rng, grid, step_cap):
    state = WalkState(kernel, schedule, kernel.origin)
    out = np.full(len(grid), -1, dtype=np.int64)
    j = 0
    while j < len(grid) and state.clock.steps < step_cap:
        before = state.ledger.distinct_edges
        state.step(rng)
        while j < len(grid) and grid[j] < state.clock.now:
            out[j] = before
            j += 1
    return out, j < len(grid)


def _range_chain_trace(kernel, grid, paths, rng, total) -> RangeTrace:
    units = np.floor(grid).astype(np.int64)
    distinct = np.tile(units, (paths, 1))
    truncated = np.zeros(paths, dtype=bool)
    if not isinstance(kernel, NearestNeighborKernel):
        return RangeTrace(grid, distinct, truncated, None, None, total)
    if kernel.domain is Domain.HALF_LINE:
        return RangeTrace(grid, distinct, truncated, distinct.copy(), distinct.copy(), total)

    chain = RangeChain(kernel, int(units[-1]) + 1)
    right = np.zeros((paths, len(grid)), dtype=np.int64)
    at_right = np.zeros(paths, dtype=bool)
    r = np.zeros(paths, dtype=np.int64)
    j = 0
    while j < len(grid) and units[j] == 0:
        j += 1
    for k in range(1, int(units[-1]) + 1):
        u = rng.random(paths)
        if k == 1:
            at_right = u < 0.5
        else:
            at_right ^= u < chain.switch(k - 1 - r, r, at_right)
        r += at_right
        while j < len(grid) and units[j] == k:
            right[:, j] = r
            j += 1
    return RangeTrace(grid, distinct, truncated, distinct.copy(), right, total)
