import math
from dataclasses import dataclass, field
from functools import lru_cache
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from config.settings import Config
from models.errors import InconclusiveError, ScheduleError
from models.verdicts import SeriesVerdict, Verdict
from services.series import TAIL_BOUND, certify_series, power_series_bracket, zeta_tail_bracket

SCHEDULE_KINDS = ("Power", "Geometric", "Factorial", "ZeroTail", "Constant", "Logarithmic", "Custom")

_CACHE_SIZE = 4096


class ScheduleTag(str, Enum):
    IMPATIENT = "Impatient"
    AGEING = "Ageing"
    CONSTANT = "Constant"


class ImpatienceClass(str, Enum):
    STRONGLY_IMPATIENT = "StronglyImpatient"
    WEAKLY_IMPATIENT = "WeaklyImpatient"
    AGEING = "Ageing"
    INFINITELY_IMPATIENT = "InfinitelyImpatient"


@dataclass(frozen=True)
class PassageSchedule:
    """
    The passage times s_0 = 1, s_1, s_2, ... charged per crossing of an edge.

    Custom sequences repeat their last value forever.
    """
    kind: str
    param: float = 0.0
    sequence: Tuple[float, ...] = ()
    tag: ScheduleTag = ScheduleTag.CONSTANT
    _cache: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_cache", self.values(np.arange(_CACHE_SIZE)))

    # ---------- sequence access ----------

    def log_values(self, ks) -> np.ndarray:
        """log s_k (-inf where s_k = 0)."""
        k = np.asarray(ks, dtype=np.float64)
        with np.errstate(divide="ignore"):
            if self.kind == "Power":
                return np.where(k == 0, 0.0, -self.param * np.log(np.maximum(k, 1.0)))
            if self.kind == "Geometric":
                return k * math.log(self.param)
            if self.kind == "Factorial":
                return gammaln(k + 1.0)
            if self.kind == "ZeroTail":
                return np.where(k == 0, 0.0, -np.inf)
            if self.kind == "Constant":
                return np.zeros_like(k)
            if self.kind == "Logarithmic":
                return np.log(np.log2(k + 2.0))
            seq = np.log(np.asarray(self.sequence, dtype=np.float64))
            return seq[np.minimum(k, len(seq) - 1).astype(np.int64)]

    def values(self, ks) -> np.ndarray:
        return np.exp(self.log_values(ks))

    def value(self, k: int) -> float:
        """s_k for a single crossing count (cached for small k)."""
        if k < _CACHE_SIZE:
            return float(self._cache[k])
        return float(self.values(np.array([k]))[0])

    def star_values(self, js) -> np.ndarray:
        """s*_j = s_{2j-2} + s_{2j-1}, j >= 1."""
        j = np.asarray(js, dtype=np.int64)
        return self.values(2 * j - 2) + self.values(2 * j - 1)

    def log_star_values(self, js) -> np.ndarray:
        j = np.asarray(js, dtype=np.int64)
        return np.logaddexp(self.log_values(2 * j - 2), self.log_values(2 * j - 1))

    def log_ratio_bound(self, i: int, stride: int = 2) -> float:
        """Upper bound on log(s_{i'+stride}/s_{i'}) over all i' >= i."""
        if self.kind == "Geometric":
            return stride * math.log(self.param)
        if self.kind == "Factorial":
            return math.inf
        if self.kind == "Logarithmic":
            return math.log(math.log2(i + stride + 2.0) / math.log2(i + 2.0))
        if self.kind == "Custom" and self.tag is ScheduleTag.AGEING:
            last = len(self.sequence) - 1
            if i >= last:
                return 0.0
            ks = np.arange(i, last + 1)
            return float(np.max(self.log_values(ks + stride) - self.log_values(ks)))
        return 0.0

    # ---------- closed forms ----------

    @property
    def infinitely_impatient(self) -> bool:
        if self.kind == "ZeroTail":
            return True
        return self.kind == "Custom" and all(s == 0.0 for s in self.sequence[1:]) and len(self.sequence) > 1

    def closed_form_total(self) -> Optional[float]:
        """S = sum of s_k when a closed form is known (math.inf for divergent sums)."""
        if self.infinitely_impatient:
            return 1.0
        if self.kind == "Geometric":
            return 1.0 / (1.0 - self.param) if self.param < 1.0 else math.inf
        if self.kind in ("Constant", "Factorial", "Logarithmic"):
            return math.inf
        if self.kind == "Custom":
            if self.sequence[-1] > 0.0:
                return math.inf
            return math.fsum(self.sequence)
        if self.kind == "Power" and self.param <= 1.0:
            return math.inf
        return None

    def power_tail_bracket(self, k: int) -> Optional[Tuple[float, float]]:
        """Bounds on sum_{j > k} j^-alpha for Power schedules with alpha > 1."""
        if self.kind != "Power":
            return None
        return zeta_tail_bracket(self.param, k)

    def describe(self) -> str:
        if self.kind in ("Power", "Geometric"):
            return f"{self.kind}({self.param!r})"
        if self.kind == "Custom":
            return f"Custom({len(self.sequence)})"
        return self.kind


def make_schedule(kind: str, param: float = 0.0,
                  sequence: Optional[Sequence[float]] = None) -> PassageSchedule:
    """
    Build a passage schedule.

    Args:
        kind: Power (param alpha), Geometric (param a), Factorial, ZeroTail,
              Constant, Logarithmic (s_j = log2(j+2)) or Custom (sequence)
        param: Kind parameter
        sequence: Custom values s_0, s_1, ...

    Returns:
        PassageSchedule

    Raises:
        ScheduleError: bad parameter, s_0 != 1, or a non-monotone Custom sequence
    """
    if kind not in SCHEDULE_KINDS:
        raise ScheduleError(f"unknown schedule kind {kind!r}")
    param = float(param)
    if kind == "Power":
        if not param > 0.0:
            raise ScheduleError(f"Power schedule needs alpha > 0, got {param!r}")
        return PassageSchedule(kind, param, tag=ScheduleTag.IMPATIENT)
    if kind == "Geometric":
        if not param > 0.0:
            raise ScheduleError(f"Geometric schedule needs a > 0, got {param!r}")
        tag = ScheduleTag.IMPATIENT if param < 1.0 else ScheduleTag.AGEING if param > 1.0 else ScheduleTag.CONSTANT
        return PassageSchedule(kind, param, tag=tag)
    if kind in ("Factorial", "Logarithmic"):
        return PassageSchedule(kind, tag=ScheduleTag.AGEING)
    if kind == "ZeroTail":
        return PassageSchedule(kind, tag=ScheduleTag.IMPATIENT)
    if kind == "Constant":
        return PassageSchedule(kind, tag=ScheduleTag.CONSTANT)

    values = tuple(float(s) for s in (sequence or ()))
    if not values or values[0] != 1.0:
        raise ScheduleError("Custom schedule must start with s_0 = 1")
    if any(s < 0.0 or not math.isfinite(s) for s in values):
        raise ScheduleError("Custom schedule values must be finite and nonnegative")
    diffs = np.diff(values)
    if (diffs <= 0.0).all() and (diffs < 0.0).any():
        tag = ScheduleTag.IMPATIENT
    elif (diffs >= 0.0).all() and (diffs > 0.0).any():
        tag = ScheduleTag.AGEING
    elif (diffs == 0.0).all():
        tag = ScheduleTag.CONSTANT
    else:
        raise ScheduleError("Custom schedule must be monotone")
    return PassageSchedule("Custom", sequence=values, tag=tag)


# ========== CLASSIFICATION ==========

@dataclass(frozen=True)
class ScheduleClass:
    """Impatience class with the certified interval for S (when finite)."""
    kind: ImpatienceClass
    total: float = math.inf
    total_low: float = math.inf
    total_high: float = math.inf

    @property
    def finite_total(self) -> bool:
        return math.isfinite(self.total)

    def to_dict(self):
        out = {"class": self.kind.value}
        if self.finite_total:
            out["S"] = self.total
            out["S_low"] = self.total_low
            out["S_high"] = self.total_high
        return out


@lru_cache(maxsize=256)
def classify(schedule: PassageSchedule, horizon: Optional[int] = None,
             tol: Optional[float] = None) -> ScheduleClass:
    """
    Impatience class of a schedule.

    Raises:
        ValueError: if horizon < 1
        InconclusiveError: if neither convergence nor divergence of sum s_k is certified
    """
    horizon = Config.CLASSIFY_HORIZON if horizon is None else int(horizon)
    tol = Config.SERIES_ABS_TOL if tol is None else tol
    if horizon < 1:
        raise ValueError("horizon must be >= 1")

    if schedule.infinitely_impatient:
        return ScheduleClass(ImpatienceClass.INFINITELY_IMPATIENT, 1.0, 1.0, 1.0)
    if schedule.tag is ScheduleTag.AGEING:
        unbounded = schedule.kind != "Custom"
        return ScheduleClass(ImpatienceClass.AGEING if unbounded else ImpatienceClass.WEAKLY_IMPATIENT)
    if schedule.tag is ScheduleTag.CONSTANT:
        return ScheduleClass(ImpatienceClass.WEAKLY_IMPATIENT)

    closed = schedule.closed_form_total()
    if closed is not None:
        if math.isinf(closed):
            return ScheduleClass(ImpatienceClass.WEAKLY_IMPATIENT)
        return ScheduleClass(ImpatienceClass.STRONGLY_IMPATIENT, closed, closed, closed)

    verdict = certify_series(schedule.values, start=1, abs_tol=tol, horizon=horizon,
                             tail_bracket=schedule.power_tail_bracket)
    if verdict.converged:
        half = verdict.tail_estimate
        total = 1.0 + verdict.value
        return ScheduleClass(ImpatienceClass.STRONGLY_IMPATIENT, total, total - half, total + half)
    if verdict.diverged:
        return ScheduleClass(ImpatienceClass.WEAKLY_IMPATIENT)
    # a finite tail bound still proves S < infinity, only less sharply than tol
    bracket = schedule.power_tail_bracket(verdict.terms_used)
    if bracket is not None:
        low = 1.0 + verdict.partial_sum + bracket[0]
        high = 1.0 + verdict.partial_sum + bracket[1]
        return ScheduleClass(ImpatienceClass.STRONGLY_IMPATIENT, 0.5 * (low + high), low, high)
    raise InconclusiveError(f"could not certify sum of {schedule.describe()} within {horizon} terms")


# ========== PASSAGE RADIUS ==========

@dataclass(frozen=True)
class RadiusEstimate:
    value: float
    exact: bool
    stable: bool = True


def exact_passage_radius(schedule: PassageSchedule) -> Optional[float]:
    if schedule.kind in ("Power", "Constant", "Logarithmic"):
        return 1.0
    if schedule.kind == "Geometric":
        return 1.0 / schedule.param ** 2
    if schedule.kind == "Factorial":
        return 0.0
    if schedule.kind == "ZeroTail":
        return math.inf
    if schedule.kind == "Custom":
        return 1.0 if schedule.sequence[-1] > 0.0 else math.inf
    return None


def passage_radius(schedule: PassageSchedule, horizon: int = 1 << 16,
                   exact: bool = True) -> RadiusEstimate:
    """
    R^pass = 1 / limsup (s*_j)^(1/j).

    Built-in kinds return their closed form. With exact=False (or for unknown
    kinds) the radius is estimated from the running maximum of (s*_j)^(1/j) over
    the dyadic window [horizon/2, horizon]; the estimate is flagged stable when
    the window [horizon/4, horizon/2] gives the same value within 1%.
    """
    if horizon < 8:
        raise ValueError("horizon must be >= 8")
    if exact:
        closed = exact_passage_radius(schedule)
        if closed is not None:
            return RadiusEstimate(closed, True)

    def window_root(lo: int, hi: int) -> float:
        js = np.arange(lo, hi + 1)
        roots = schedule.log_star_values(js) / js
        return float(np.max(roots))

    late = window_root(horizon // 2, horizon)
    early = window_root(horizon // 4, horizon // 2)
    value = math.exp(-late) if late > -math.inf else math.inf
    stable = (late == early == -math.inf) or abs(late - early) <= 0.01 * max(1.0, abs(late))
    return RadiusEstimate(value, False, stable)


# ========== GENERATING FUNCTIONS ==========

def _series_bracket(schedule: PassageSchedule, z, log_coef, term_cap: Optional[int]):
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    if (z < 0.0).any():
        raise ValueError("z must be nonnegative")
    radius = exact_passage_radius(schedule)
    if radius is None:
        radius = passage_radius(schedule, exact=False).value
    low = np.zeros(z.shape)
    high = np.zeros(z.shape)
    used = np.zeros(z.shape, dtype=np.int64)
    diverged = (z > radius) | ((z == radius) & (z > 0.0))
    inside = (z < radius) & (z > 0.0)
    if inside.any():
        lo, hi, n = power_series_bracket(log_coef, z[inside], schedule.log_ratio_bound,
                                         term_cap=term_cap)
        low[inside] = lo
        high[inside] = hi
        used[inside] = n
    return low, high, used, diverged


def phi_bracket(schedule: PassageSchedule, z, term_cap: Optional[int] = None):
    """
    Vectorized bracket of phi(z) = sum_j s*_j z^j.

    z = 1 on the radius is answered by the certified S (finite for strongly
    impatient schedules). Returns (low, high, terms_used, diverged_mask).
    """
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    low, high, used, diverged = _series_bracket(schedule, z, schedule.log_star_values, term_cap)
    at_one = diverged & (z == 1.0)
    if at_one.any():
        cls = classify(schedule)
        if cls.finite_total:
            low[at_one] = cls.total_low
            high[at_one] = cls.total_high
            diverged = diverged & ~at_one
    return low, high, used, diverged


def even_odd_bracket(schedule: PassageSchedule, gamma, term_cap: Optional[int] = None):
    """
    Brackets of E(g) = sum_{k>=0} s_2k g^k and O(g) = sum_{k>=1} s_{2k-1} g^k.

    Returns ((e_low, e_high), (o_low, o_high), diverged_mask).
    """
    g = np.atleast_1d(np.asarray(gamma, dtype=np.float64))
    e_lo, e_hi, _, e_div = _series_bracket(schedule, g, lambda k: schedule.log_values(2 * k), term_cap)
    o_lo, o_hi, _, o_div = _series_bracket(schedule, g, lambda k: schedule.log_values(2 * k - 1), term_cap)
    return (e_lo + 1.0, e_hi + 1.0), (o_lo, o_hi), e_div | o_div


def phi(schedule: PassageSchedule, z: float, abs_tol: Optional[float] = None,
        term_cap: Optional[int] = None) -> SeriesVerdict:
    """
    phi(z) with a verdict: Diverged outside the passage radius, Converged when the
    bracket half-width is below abs_tol, Inconclusive otherwise.
    """
    abs_tol = Config.SERIES_ABS_TOL if abs_tol is None else abs_tol
    if z < 0.0:
        raise ValueError("z must be nonnegative")
    if z == 0.0:
        return SeriesVerdict.exact(0.0)
    low, high, used, diverged = phi_bracket(schedule, np.array([z], dtype=np.float64), term_cap)
    if diverged[0]:
        return SeriesVerdict.divergent()
    lo, hi = float(low[0]), float(high[0])
    half = 0.5 * (hi - lo)
    if half < abs_tol:
        return SeriesVerdict(Verdict.CONVERGED, lo, int(used[0]), half, 0.5 * (lo + hi), TAIL_BOUND)
    return SeriesVerdict(Verdict.INCONCLUSIVE, lo, int(used[0]), half, None, TAIL_BOUND)
