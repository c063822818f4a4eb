from dataclasses import asdict, dataclass
from typing import Any, Dict


@dataclass(frozen=True)
class ExcursionRecord:
    """
    One excursion of the time-changed walk.

    steps is tau (unit-time steps), duration is the actual duration T(tau),
    distinct_edges is M, max_displacement is the largest ||X_i|| seen during the
    excursion. censored is set when the excursion was cut at its step (or edge)
    cap before returning.
    """
    steps: int
    duration: float
    distinct_edges: int
    max_displacement: int
    censored: bool = False

    def within_sandwich(self, total: float, rel: float = 1e-12) -> bool:
        """M <= duration <= S*M for a completed strongly impatient excursion."""
        m = self.distinct_edges
        return m * (1.0 - rel) <= self.duration <= total * m * (1.0 + rel)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class RangeSample:
    """R_t (and the span max - min on the line) observed at actual time t."""
    t: float
    distinct_edges: int
    span: int
