import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.settings import Config
from models.errors import UnsupportedError
from models.verdicts import SeriesVerdict, Verdict
from services.analytic.network import log_resistor_prefix, log_resistors
from services.kernels.nearest_neighbor import Domain, NearestNeighborKernel
from services.passage import (
    ImpatienceClass,
    PassageSchedule,
    classify,
    even_odd_bracket,
    phi_bracket,
)
from services.series import TAIL_BOUND, certify_series, tail_bounds_with_method


def _require_line(kernel) -> NearestNeighborKernel:
    if not isinstance(kernel, NearestNeighborKernel) or kernel.domain is not Domain.FULL_LINE:
        raise UnsupportedError("gambler's-ruin quantities need a nearest-neighbour kernel on Z")
    return kernel


class LineNetwork:
    """
    Edge resistances rho(e_x) of a nearest-neighbour kernel on Z, e_x = (x, x+1),
    for lo <= x < hi. rho(e_x) = R^r_x for x >= 0 and rho(e_{-j}) = R^l_{j-1}.

    W(a, b) = sum_{x=a}^{b-1} rho(e_x) is the resistance between a and b; from m
    in (a, b) the walk reaches b before a with probability W(a, m)/W(a, b).
    """

    def __init__(self, kernel: NearestNeighborKernel, lo: int, hi: int):
        if not lo < hi:
            raise ValueError("need lo < hi")
        self.lo = lo
        self.hi = hi
        left_n, right_n = max(-lo, 0), max(hi, 0)
        parts = []
        if left_n:
            # e_{-j} for j = left_n .. 1, in increasing x
            parts.append(log_resistors(kernel.left, left_n - 1)[::-1])
        if right_n:
            parts.append(log_resistors(kernel.right, right_n - 1))
        full = np.concatenate(parts)
        self.log_rho = full[lo + left_n: hi + left_n]
        self._log_cum = np.concatenate(([-math.inf], np.logaddexp.accumulate(self.log_rho)))

    def log_w(self, a, b) -> np.ndarray:
        """log W(a, b) for lo <= a < b <= hi (vectorized)."""
        a = np.asarray(a) - self.lo
        b = np.asarray(b) - self.lo
        ca = self._log_cum[a]
        cb = self._log_cum[b]
        with np.errstate(divide="ignore"):
            return cb + np.log(-np.expm1(ca - cb))

    def w(self, a, b) -> np.ndarray:
        return np.exp(self.log_w(a, b))

    def hit_right_first(self, m, a, b) -> np.ndarray:
        """P_m(reach b before a)."""
        m = np.asarray(m)
        out = np.exp(self.log_w(a, np.maximum(m, a + 1)) - self.log_w(a, b))
        return np.where(m <= a, 0.0, np.where(m >= b, 1.0, out))


# ========== POSITIVE-RECURRENCE CRITERION ==========

def _prr_arrays(kernel: NearestNeighborKernel, m_horizon: int, h: int):
    """r_{-k}^{(0)} and r_{-k-1}^{(-k)} for k = 0..m_horizon (target h on the right)."""
    log_right = float(log_resistor_prefix(kernel.right, h - 1)[-1])
    left = log_resistor_prefix(kernel.left, m_horizon + 1)
    log_left = np.concatenate(([-math.inf], left))
    log_w = np.logaddexp(log_right, log_left)
    r_start = np.exp(log_right - log_w[: m_horizon + 1])
    r_back = np.exp(log_w[: m_horizon + 1] - log_w[1: m_horizon + 2])
    return r_start, r_back


def prr_criterion(kernel, schedule: PassageSchedule, m_horizon: Optional[int] = None,
                  tol: Optional[float] = None, h: int = 1,
                  rel_tol: Optional[float] = None) -> SeriesVerdict:
    """
    sum_{m<=0} r_m^{(0)} phi(r_{m-1}^{(m)}), where r_m^{(x)} is the probability of
    reaching m before h from x. Finite for every h iff the impatient walk is
    positive recurrent.
    """
    kernel = _require_line(kernel)
    if h < 1:
        raise ValueError("h must be >= 1")
    m_horizon = Config.M_HORIZON if m_horizon is None else int(m_horizon)
    tol = Config.SERIES_ABS_TOL if tol is None else tol
    rel_tol = Config.SERIES_REL_TOL if rel_tol is None else rel_tol
    r_start, r_back = _prr_arrays(kernel, m_horizon, h)

    def terms(ks):
        low, high, _, diverged = phi_bracket(schedule, r_back[ks])
        if diverged.any():
            return np.full(ks.shape, np.inf)
        return r_start[ks] * 0.5 * (low + high), r_start[ks] * 0.5 * (high - low)

    phi_max = _phi_ceiling(schedule, r_back)

    def shortcut(last: int):
        if phi_max is None:
            return None
        bracket = tail_bounds_with_method(r_start[: last + 1], 0)
        if bracket is None:
            return None
        return 0.0, phi_max * bracket[1], bracket[2]

    return certify_series(terms, start=0, abs_tol=tol, rel_tol=rel_tol,
                          horizon=m_horizon + 1, tail_bracket=shortcut)


def _phi_ceiling(schedule: PassageSchedule, r_back: np.ndarray) -> Optional[float]:
    """Upper bound on phi(r) over the backward-step probabilities."""
    cls = classify(schedule)
    if cls.kind in (ImpatienceClass.STRONGLY_IMPATIENT, ImpatienceClass.INFINITELY_IMPATIENT):
        return cls.total_high
    top = float(np.max(r_back))
    if top < 1.0:
        _, high, _, diverged = phi_bracket(schedule, np.array([top]))
        if not diverged[0] and math.isfinite(high[0]):
            return float(high[0])
    return None


# ========== TWO-SIDED EXIT ==========

@dataclass(frozen=True)
class ExitTimeBreakdown:
    """Per-edge expected actual times spent on (-n, n) before exit."""
    n: int
    edges: np.ndarray
    gamma: np.ndarray
    low: np.ndarray
    high: np.ndarray
    diverged: bool

    @property
    def total_low(self) -> float:
        return 1.0 + float(np.sum(self.low))

    @property
    def total_high(self) -> float:
        return 1.0 + float(np.sum(self.high))


def exit_time_breakdown(kernel, schedule: PassageSchedule, n: int,
                        term_cap: Optional[int] = None) -> ExitTimeBreakdown:
    """
    Expected total actual time on each edge (a, a+1) inside (-n, n) before the walk
    leaves the interval. The crossings of an interior edge alternate between its
    two directions; gamma is the probability of a round trip across it.
    """
    kernel = _require_line(kernel)
    if n < 2:
        raise ValueError("n must be >= 2")
    net = LineNetwork(kernel, -n, n)
    a = np.arange(-(n - 1), n - 1)
    up = np.exp(net.log_w(-n, a) - net.log_w(-n, a + 1))
    down = np.exp(net.log_w(a + 1, n) - net.log_w(a, n))
    gamma = up * down

    right = a >= 0
    far = np.empty(a.shape)
    near = np.empty(a.shape)
    log_w_left0 = net.log_w(-n, 0)
    log_w_0right = net.log_w(0, n)
    far[right] = np.exp(log_w_left0 - net.log_w(-n, a[right] + 1))
    near[right] = np.exp(log_w_left0 - net.log_w(-n, np.maximum(a[right], 0)))
    near[right & (a == 0)] = 1.0
    far[~right] = np.exp(log_w_0right - net.log_w(a[~right], n))
    near[~right] = np.exp(log_w_0right - net.log_w(np.minimum(a[~right] + 1, 0), n))
    near[a == -1] = 1.0

    (e_lo, e_hi), (o_lo, o_hi), diverged = even_odd_bracket(schedule, gamma, term_cap)
    low = far * e_lo + near * o_lo
    high = far * e_hi + near * o_hi
    return ExitTimeBreakdown(n, a, gamma, low, high, bool(diverged.any()))


def two_sided_exit(kernel, schedule: PassageSchedule, n: int,
                   tol: Optional[float] = None) -> SeriesVerdict:
    """
    Expected actual time until the walk started at 0 first leaves (-n, n).

    The final exit step crosses a boundary edge for the first time and costs s_0 = 1.
    """
    tol = Config.SERIES_ABS_TOL if tol is None else tol
    breakdown = exit_time_breakdown(kernel, schedule, n)
    used = len(breakdown.edges)
    if breakdown.diverged:
        return SeriesVerdict.divergent(math.inf, used)
    low, high = breakdown.total_low, breakdown.total_high
    half = 0.5 * (high - low)
    value = 0.5 * (low + high)
    verdict = Verdict.CONVERGED if half < tol else Verdict.INCONCLUSIVE
    return SeriesVerdict(verdict, value, used, half, value if verdict is Verdict.CONVERGED else None, TAIL_BOUND)
