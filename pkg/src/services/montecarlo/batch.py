from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from config.settings import Config
from models.records import ExcursionRecord
from services.kernels.nearest_neighbor import Domain, NearestNeighborKernel
from services.passage import PassageSchedule


class LookupTable:
    """Values of a vectorized function on a contiguous integer range, extended by doubling."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], lo: int, hi: int):
        self._fn = fn
        self.lo = lo
        self.values = np.asarray(fn(np.arange(lo, hi + 1)), dtype=np.float64)

    @property
    def hi(self) -> int:
        return self.lo + len(self.values) - 1

    def lookup(self, idx: np.ndarray) -> np.ndarray:
        lo, hi = int(idx.min()), int(idx.max())
        if lo < self.lo or hi > self.hi:
            self._extend(lo, hi)
        return self.values[idx - self.lo]

    def scalar(self, i: int) -> float:
        if i < self.lo or i > self.hi:
            self._extend(i, i)
        return self.values[i - self.lo]

    def _extend(self, lo: int, hi: int) -> None:
        width = len(self.values)
        parts = []
        new_lo = self.lo
        if lo < self.lo:
            new_lo = min(lo, self.lo - width)
            parts.append(self._fn(np.arange(new_lo, self.lo)))
        parts.append(self.values)
        if hi > self.hi:
            new_hi = max(hi, self.hi + width)
            parts.append(self._fn(np.arange(self.hi + 1, new_hi + 1)))
        self.values = np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])
        self.lo = new_lo


def require_line_kernel(kernel) -> NearestNeighborKernel:
    if not isinstance(kernel, NearestNeighborKernel):
        raise TypeError("the batch engine runs nearest-neighbour kernels only")
    return kernel


class LineWalkers:
    """
    Independent walks of a nearest-neighbour kernel, one row each.

    Crossing counts live in a dense (rows x edges) int32 matrix, edge (x, x+1) in
    column x - self.left; the matrix widens by doubling when a row leaves it.
    Every step draws one uniform per row: +1 iff u < P(+1 | x).
    """

    def __init__(self, kernel: NearestNeighborKernel, schedule: PassageSchedule, rows: int,
                 start: int = 0, width: int = 64):
        self.kernel = require_line_kernel(kernel)
        self.schedule = schedule
        self.start = int(start)
        kernel.require(self.start)
        self.ids = np.arange(rows)
        self.pos = np.full(rows, self.start, dtype=np.int64)
        if kernel.domain is Domain.HALF_LINE:
            self.left = 0
            width = max(width, self.start + width // 2)
        else:
            self.left = self.start - width // 2
        self.counts = np.zeros((rows, width), dtype=np.int32)
        self.duration = np.zeros(rows)
        self._comp = np.zeros(rows)
        self.steps = np.zeros(rows, dtype=np.int64)
        self.distinct = np.zeros(rows, dtype=np.int64)
        self.max_norm = np.full(rows, abs(self.start), dtype=np.int64)
        self.low = self.pos.copy()
        self.high = self.pos.copy()
        self.plus = LookupTable(kernel.prob_plus, self.left, self.left + width)
        self.costs = LookupTable(schedule.values, 0, 255)

    @property
    def size(self) -> int:
        return len(self.ids)

    def _ensure_columns(self, lo_edge: int, hi_edge: int) -> None:
        width = self.counts.shape[1]
        right = self.left + width - 1
        if lo_edge >= self.left and hi_edge <= right:
            return
        pad_left = 0 if lo_edge >= self.left else max(self.left - lo_edge, width)
        pad_right = 0 if hi_edge <= right else max(hi_edge - right, width)
        self.counts = np.pad(self.counts, ((0, 0), (pad_left, pad_right)))
        self.left -= pad_left

    def step(self, u: np.ndarray) -> None:
        pos = self.pos
        new = np.where(u < self.plus.lookup(pos), pos + 1, pos - 1)
        edge = np.minimum(pos, new)
        self._ensure_columns(int(edge.min()), int(edge.max()))
        rows = np.arange(self.size)
        col = edge - self.left
        k = self.counts[rows, col]
        cost = self.costs.lookup(k)
        self.counts[rows, col] = k + 1
        self.distinct += k == 0

        y = cost - self._comp
        t = self.duration + y
        self._comp = (t - self.duration) - y
        self.duration = np.maximum(t, self.duration)

        self.steps += 1
        self.pos = new
        np.maximum(self.max_norm, np.abs(new), out=self.max_norm)
        np.minimum(self.low, new, out=self.low)
        np.maximum(self.high, new, out=self.high)

    def keep(self, mask: np.ndarray) -> None:
        for name in ("ids", "pos", "counts", "duration", "_comp", "steps", "distinct",
                     "max_norm", "low", "high"):
            setattr(self, name, getattr(self, name)[mask])

    def record(self, i: int, censored: bool) -> ExcursionRecord:
        return ExcursionRecord(int(self.steps[i]), float(self.duration[i]), int(self.distinct[i]),
                               int(self.max_norm[i]), censored)

    def row_counts(self, i: int) -> Dict[int, int]:
        cols = np.flatnonzero(self.counts[i])
        return {int(self.left + c): int(self.counts[i, c]) for c in cols}


def _finish_excursion(w: LineWalkers, i: int, rng, step_cap: int,
                      edge_cap: Optional[int]) -> ExcursionRecord:
    """Carry one row of the batch on to the end of its excursion, step by step."""
    counts = w.row_counts(i)
    x = int(w.pos[i])
    steps = int(w.steps[i])
    t = float(w.duration[i])
    comp = float(w._comp[i])
    distinct = int(w.distinct[i])
    max_norm = int(w.max_norm[i])
    start = w.start
    plus, costs = w.plus, w.costs
    edge_cap = edge_cap or 0

    def finished():
        return x == start or steps >= step_cap or (edge_cap and distinct >= edge_cap)

    while steps == 0 or not finished():
        for u in rng.random(4096):
            nx = x + 1 if u < plus.scalar(x) else x - 1
            e = x if nx > x else nx
            k = counts.get(e, 0)
            counts[e] = k + 1
            if k == 0:
                distinct += 1
            y = float(costs.scalar(k)) - comp
            tt = t + y
            comp = (tt - t) - y
            t = tt if tt > t else t
            steps += 1
            x = nx
            if abs(x) > max_norm:
                max_norm = abs(x)
            if finished():
                break
    return ExcursionRecord(steps, t, distinct, max_norm, x != start)


def line_excursions(kernel, schedule: PassageSchedule, rng, count: int, step_cap: int,
                    start: Optional[int] = None, edge_cap: Optional[int] = None) -> List[ExcursionRecord]:
    """
    `count` independent excursions from `start`, returned in replica order.

    The batch runs vectorized while at least Config.MC_STRAGGLERS rows are alive;
    the last few long excursions are finished one by one.
    """
    kernel = require_line_kernel(kernel)
    start = kernel.origin if start is None else int(start)
    records: List[Optional[ExcursionRecord]] = [None] * count
    w = LineWalkers(kernel, schedule, count, start)
    while w.size >= Config.MC_STRAGGLERS:
        w.step(rng.random(w.size))
        returned = w.pos == start
        done = returned | (w.steps >= step_cap)
        if edge_cap:
            done |= w.distinct >= edge_cap
        if done.any():
            for i in np.flatnonzero(done):
                records[w.ids[i]] = w.record(i, not returned[i])
            w.keep(~done)
    for i in range(w.size):
        records[w.ids[i]] = _finish_excursion(w, i, rng, step_cap, edge_cap)
    return records


def line_range_traces(kernel, schedule: PassageSchedule, rng, count: int, checkpoints,
                      step_cap: int, start: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    R_t and the span max - min at each checkpoint t for `count` trajectories.

    A checkpoint t is read off the trajectory after the last step m with T(m) <= t.
    Returns (distinct, span, truncated); rows cut at step_cap keep -1 entries.
    """
    kernel = require_line_kernel(kernel)
    start = kernel.origin if start is None else int(start)
    cp = np.asarray(checkpoints, dtype=np.float64)
    n_cp = len(cp)
    distinct = np.full((count, n_cp), -1, dtype=np.int64)
    span = np.full((count, n_cp), -1, dtype=np.int64)
    truncated = np.zeros(count, dtype=bool)
    ptr = np.zeros(count, dtype=np.int64)
    w = LineWalkers(kernel, schedule, count, start)
    while w.size:
        d0 = w.distinct.copy()
        s0 = w.high - w.low
        w.step(rng.random(w.size))
        while True:
            p = ptr[w.ids]
            idx = np.flatnonzero(p < n_cp)
            if not len(idx):
                break
            hit = idx[cp[p[idx]] < w.duration[idx]]
            if not len(hit):
                break
            rows = w.ids[hit]
            distinct[rows, p[hit]] = d0[hit]
            span[rows, p[hit]] = s0[hit]
            ptr[rows] += 1
        complete = ptr[w.ids] >= n_cp
        capped = w.steps >= step_cap
        truncated[w.ids[capped & ~complete]] = True
        done = complete | capped
        if done.any():
            w.keep(~done)
    return distinct, span, truncated
