"""
Excursions of simple random walk on Z or Z2 whose every crossing of an edge e
costs s(e) = (1 + ||e||)^-alpha, independently of how often e was crossed.
"""

import math
from typing import Optional

import numpy as np

from config.settings import Config
from models.errors import UnsupportedError
from services.analytic.phases import SPACE_GRAPHS, expected_crossings
from services.montecarlo.batch import LookupTable
from services.montecarlo.stats import StreamingMoments

_STEPS = {
    "Z": np.array([[1], [-1]], dtype=np.int64),
    "Z2": np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=np.int64),
}


class SpaceExcursionStats:
    """
    Durations of completed excursions plus visit and crossing counts on the core
    window ||u|| <= core_radius, averaged over all replicas (censored included).
    """

    def __init__(self, graph: str, alpha: float, core_radius: int):
        self.graph = graph
        self.alpha = alpha
        self.core_radius = core_radius
        self.dim = 1 if graph == "Z" else 2
        side = 2 * core_radius + 1
        shape = (side,) * self.dim
        self.duration = StreamingMoments()
        self.steps = StreamingMoments()
        self.capped = StreamingMoments()
        self.replicas = 0
        self.censored = 0
        self.visit_sums = np.zeros(shape, dtype=np.int64)
        self.visit_squares = np.zeros(shape, dtype=np.int64)
        # crossings of the edge from u to u + e_d, indexed [d, u]
        self.edge_sums = np.zeros((self.dim,) + shape, dtype=np.int64)

    @property
    def shape(self):
        return self.visit_sums.shape

    def add_visits(self, counts: np.ndarray) -> None:
        """Fold per-excursion visit counts, shape (rows,) + shape, into the sums."""
        self.visit_sums += counts.sum(axis=0)
        self.visit_squares += np.square(counts).sum(axis=0)

    def merge(self, other: "SpaceExcursionStats") -> "SpaceExcursionStats":
        self.duration.merge(other.duration)
        self.steps.merge(other.steps)
        self.capped.merge(other.capped)
        self.replicas += other.replicas
        self.censored += other.censored
        self.visit_sums += other.visit_sums
        self.visit_squares += other.visit_squares
        self.edge_sums += other.edge_sums
        return self

    @property
    def censor_rate(self) -> float:
        return self.censored / self.replicas if self.replicas else math.nan

    def _grid(self):
        r = np.arange(-self.core_radius, self.core_radius + 1)
        if self.dim == 1:
            return (r,)
        return np.meshgrid(r, r, indexing="ij")

    def core_vertices(self) -> np.ndarray:
        """Mask of grid cells u != 0 with ||u|| <= core_radius."""
        norm = sum(np.abs(a) for a in self._grid())
        return (norm <= self.core_radius) & (norm > 0)

    def visit_means(self) -> np.ndarray:
        """Mean visits per excursion to each core vertex other than the start."""
        return self.visit_sums[self.core_vertices()] / float(self.replicas)

    def visit_stderrs(self) -> np.ndarray:
        """Standard errors of visit_means (nan below two replicas)."""
        n = float(self.replicas)
        if n < 2:
            return np.full(int(self.core_vertices().sum()), np.nan)
        core = self.core_vertices()
        mean = self.visit_sums[core] / n
        var = np.maximum(self.visit_squares[core] - n * mean ** 2, 0.0) / (n - 1.0)
        return np.sqrt(var / n)

    def visit_z(self, target: float) -> np.ndarray:
        """Per-vertex z-scores of the mean visits against target (nan where the spread is zero)."""
        stderr = self.visit_stderrs()
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(stderr > 0, (self.visit_means() - target) / stderr, np.nan)

    def edge_means(self) -> np.ndarray:
        """Mean crossings per excursion of each edge with both endpoints in the core window."""
        grid = self._grid()
        norm = sum(np.abs(a) for a in grid)
        out = []
        for d in range(self.dim):
            shifted = list(grid)
            shifted[d] = shifted[d] + 1
            norm_b = sum(np.abs(a) for a in shifted)
            mask = (norm <= self.core_radius) & (norm_b <= self.core_radius)
            out.append(self.edge_sums[d][mask])
        return np.concatenate(out) / float(self.replicas)

    def to_dict(self):
        visits = self.visit_means()
        edges = self.edge_means()
        return {
            "graph": self.graph,
            "alpha": self.alpha,
            "replicas": self.replicas,
            "censored": self.censored,
            "censor_rate": self.censor_rate,
            "mean_duration": self.duration.mean if self.duration.n else None,
            "stderr_duration": self.duration.stderr if self.duration.n >= 2 else None,
            "capped_mean_duration": self.capped.mean if self.capped.n else None,
            "mean_core_visits": float(np.mean(visits)) if visits.size else None,
            "mean_core_crossings": float(np.mean(edges)) if edges.size else None,
            "expected_crossings": expected_crossings(self.graph),
        }


class _SpaceWalkers:
    def __init__(self, stats: SpaceExcursionStats, rows: int):
        self.stats = stats
        self.steps_table = _STEPS[stats.graph]
        self.pos = np.zeros((rows, stats.dim), dtype=np.int64)
        self.duration = np.zeros(rows)
        self._comp = np.zeros(rows)
        self.steps = np.zeros(rows, dtype=np.int64)
        # core visits of each live row, flushed into stats when the row finishes
        self.visits = np.zeros((rows,) + stats.shape, dtype=np.int64)
        alpha = stats.alpha
        self.costs = LookupTable(lambda k: (1.0 + k) ** (-alpha), 0, 255)

    @property
    def size(self) -> int:
        return len(self.pos)

    def step(self, u: np.ndarray) -> None:
        stats = self.stats
        r = stats.core_radius
        choice = np.minimum((u * len(self.steps_table)).astype(np.int64), len(self.steps_table) - 1)
        move = self.steps_table[choice]
        new = self.pos + move
        edge_norm = np.minimum(np.abs(self.pos).sum(axis=1), np.abs(new).sum(axis=1))
        cost = self.costs.lookup(edge_norm)
        y = cost - self._comp
        t = self.duration + y
        self._comp = (t - self.duration) - y
        self.duration = np.maximum(t, self.duration)
        self.steps += 1

        lower = np.minimum(self.pos, new)
        axis = np.argmax(move != 0, axis=1)
        in_box = (np.abs(lower) <= r).all(axis=1) & (np.abs(np.maximum(self.pos, new)) <= r).all(axis=1)
        if in_box.any():
            idx = (axis[in_box],) + tuple((lower[in_box] + r).T)
            np.add.at(stats.edge_sums, idx, 1)
        arrived = (np.abs(new) <= r).all(axis=1) & (np.abs(new).sum(axis=1) > 0)
        if arrived.any():
            rows = np.flatnonzero(arrived)
            np.add.at(self.visits, (rows,) + tuple((new[arrived] + r).T), 1)
        self.pos = new

    def keep(self, mask: np.ndarray) -> None:
        self.stats.add_visits(self.visits[~mask])
        self.pos = self.pos[mask]
        self.duration = self.duration[mask]
        self._comp = self._comp[mask]
        self.steps = self.steps[mask]
        self.visits = self.visits[mask]

    def finish(self, i: int, rng, step_cap: int) -> None:
        """Continue row i one step at a time until it returns or hits the cap."""
        stats = self.stats
        r = stats.core_radius
        moves = [tuple(int(a) for a in m) for m in self.steps_table]
        pos = tuple(int(a) for a in self.pos[i])
        t, comp, steps = float(self.duration[i]), float(self._comp[i]), int(self.steps[i])
        costs = self.costs
        visits = self.visits[i]
        origin = (0,) * stats.dim
        while steps == 0 or (pos != origin and steps < step_cap):
            for u in rng.random(4096):
                move = moves[min(int(u * len(moves)), len(moves) - 1)]
                new = tuple(a + b for a, b in zip(pos, move))
                norm = min(sum(abs(a) for a in pos), sum(abs(a) for a in new))
                y = float(costs.scalar(norm)) - comp
                tt = t + y
                comp = (tt - t) - y
                t = tt if tt > t else t
                steps += 1
                low = tuple(min(a, b) for a, b in zip(pos, new))
                high = tuple(max(a, b) for a, b in zip(pos, new))
                if all(abs(a) <= r for a in low) and all(abs(a) <= r for a in high):
                    axis = next(d for d, m in enumerate(move) if m != 0)
                    stats.edge_sums[(axis,) + tuple(a + r for a in low)] += 1
                if new != origin and all(abs(a) <= r for a in new):
                    visits[tuple(a + r for a in new)] += 1
                pos = new
                if pos == origin or steps >= step_cap:
                    break
        stats.add_visits(visits[None])
        stats.replicas += 1
        stats.capped.update(t)
        if pos == origin:
            stats.duration.update(t)
            stats.steps.update(steps)
        else:
            stats.censored += 1


def space_dependent_excursion(graph: str, alpha: float, replicas: int, step_cap: Optional[int],
                              rng, core_radius: int = 20,
                              batch: Optional[int] = None) -> SpaceExcursionStats:
    """
    Excursion statistics of simple random walk on Z or Z2 with s(e) = (1 + ||e||)^-alpha.

    Raises:
        UnsupportedError: for graphs other than Z and Z2
    """
    if graph not in SPACE_GRAPHS:
        raise UnsupportedError(f"space-dependent excursions run on Z and Z2, not {graph!r}")
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    step_cap = Config.STEP_CAP if step_cap is None else int(step_cap)
    batch = Config.MC_BATCH if batch is None else int(batch)
    stats = SpaceExcursionStats(graph, float(alpha), int(core_radius))
    done = 0
    while done < replicas:
        n = min(batch, replicas - done)
        _run_space_batch(stats, n, rng, step_cap)
        done += n
    return stats


def _run_space_batch(stats: SpaceExcursionStats, rows: int, rng, step_cap: int) -> None:
    w = _SpaceWalkers(stats, rows)
    while w.size >= Config.MC_STRAGGLERS:
        w.step(rng.random(w.size))
        returned = ~w.pos.any(axis=1)
        done = returned | (w.steps >= step_cap)
        if done.any():
            completed = done & returned
            stats.replicas += int(done.sum())
            stats.capped.update_batch(w.duration[done])
            stats.censored += int((done & ~returned).sum())
            stats.duration.update_batch(w.duration[completed])
            stats.steps.update_batch(w.steps[completed])
            w.keep(~done)
    for i in range(w.size):
        w.finish(i, rng, step_cap)
