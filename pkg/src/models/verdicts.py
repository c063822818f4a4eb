import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional


class Verdict(str, Enum):
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class SeriesVerdict:
    """
    A truncated evaluation of a nonnegative infinite series.

    partial_sum is the exact sum of the first terms_used terms. tail_estimate is the
    half-width of the bracket around the value (None when no tail bound was found).
    value is only set for Converged verdicts.

    tail_method says where the tail bracket came from: "bound" for a proven
    bracket, "geometric" or "power_law" for an extrapolation of the last terms
    (an estimate, not a proof), "underflow" when the last terms vanished in
    floating point, "exact" for a closed form.
    """
    verdict: Verdict
    partial_sum: float
    terms_used: int
    tail_estimate: Optional[float] = None
    value: Optional[float] = None
    tail_method: Optional[str] = None

    @property
    def converged(self) -> bool:
        return self.verdict is Verdict.CONVERGED

    @property
    def diverged(self) -> bool:
        return self.verdict is Verdict.DIVERGED

    @property
    def inconclusive(self) -> bool:
        return self.verdict is Verdict.INCONCLUSIVE

    def shifted(self, offset: float) -> "SeriesVerdict":
        """The same verdict for (series + offset)."""
        return SeriesVerdict(
            verdict=self.verdict,
            partial_sum=self.partial_sum + offset,
            terms_used=self.terms_used,
            tail_estimate=self.tail_estimate,
            value=None if self.value is None else self.value + offset,
            tail_method=self.tail_method,
        )

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"verdict": self.verdict.value}
        if self.value is not None:
            out["value"] = self.value
        out["terms_used"] = self.terms_used
        out["tail_estimate"] = _finite_or_none(self.tail_estimate)
        if self.tail_method is not None:
            out["tail_method"] = self.tail_method
        return out

    @classmethod
    def exact(cls, value: float, terms_used: int = 0) -> "SeriesVerdict":
        return cls(Verdict.CONVERGED, value, terms_used, 0.0, value, "exact")

    @classmethod
    def divergent(cls, partial_sum: float = math.inf, terms_used: int = 0) -> "SeriesVerdict":
        return cls(Verdict.DIVERGED, partial_sum, terms_used, None, None)


def combine_verdicts(parts, weights=None) -> SeriesVerdict:
    """Weighted sum of independent series verdicts (Diverged dominates Inconclusive)."""
    parts = list(parts)
    weights = [1.0] * len(parts) if weights is None else list(weights)
    partial = sum(w * p.partial_sum for w, p in zip(weights, parts))
    terms = max((p.terms_used for p in parts), default=0)
    if any(p.diverged for p in parts):
        return SeriesVerdict.divergent(partial, terms)
    tails = [p.tail_estimate for p in parts]
    tail = None if any(t is None for t in tails) else sum(w * t for w, t in zip(weights, tails))
    methods = sorted({p.tail_method for p in parts if p.tail_method})
    method = "+".join(methods) or None
    if all(p.converged for p in parts):
        value = sum(w * p.value for w, p in zip(weights, parts))
        return SeriesVerdict(Verdict.CONVERGED, partial, terms, tail, value, method)
    return SeriesVerdict(Verdict.INCONCLUSIVE, partial, terms, tail, None, method)


class Recurrence(str, Enum):
    POSITIVE_RECURRENT = "PositiveRecurrent"
    NULL_RECURRENT = "NullRecurrent"
    TRANSIENT_UNDERLYING = "TransientUnderlying"
    INCONCLUSIVE = "Inconclusive"


class Provenance(str, Enum):
    CLOSED_FORM = "ClosedForm"
    SERIES = "Series"
    MONTE_CARLO = "MonteCarlo"


@dataclass(frozen=True)
class Verdict3:
    """Recurrence verdict of a harness classification together with where it came from."""
    recurrence: Recurrence
    provenance: Provenance
    detail: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        # Monte Carlo evidence never carries a hard verdict
        if self.provenance is Provenance.MONTE_CARLO and self.recurrence is not Recurrence.INCONCLUSIVE:
            raise ValueError("MonteCarlo provenance can only back an Inconclusive verdict")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "recurrence": self.recurrence.value,
            "provenance": self.provenance.value,
            "detail": self.detail,
        }


def _finite_or_none(x: Optional[float]) -> Optional[float]:
    if x is None or not math.isfinite(x):
        return None
    return x
