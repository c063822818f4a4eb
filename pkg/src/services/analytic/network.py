from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.settings import Config
from models.errors import DriftRangeError
from models.verdicts import SeriesVerdict, combine_verdicts
from services.kernels.nearest_neighbor import Domain, DriftProfile, NearestNeighborKernel
from services.passage import PassageSchedule, phi_bracket
from services.series import certify_series


def as_profile(drift) -> DriftProfile:
    """Accept a drift profile or a nearest-neighbour kernel (its right-hand profile)."""
    if isinstance(drift, NearestNeighborKernel):
        return drift.right
    if isinstance(drift, DriftProfile):
        return drift
    raise TypeError(f"expected a DriftProfile or NearestNeighborKernel, got {type(drift).__name__}")


def log_resistors(drift, m_max: int) -> np.ndarray:
    """
    log R_x for x = 0..m_max, R_0 = 1, R_x = prod_{k<=x} (1-b(k))/(1+b(k)).

    Raises:
        DriftRangeError: if some |b(x)| >= 1 on the range
    """
    if m_max < 0:
        raise ValueError("m_max must be nonnegative")
    profile = as_profile(drift)
    b = profile.values(np.arange(1, m_max + 1))
    if not (np.abs(b) < 1.0).all():
        raise DriftRangeError(f"drift {profile.describe()} leaves (-1, 1) below x={m_max}")
    steps = np.log1p(-b) - np.log1p(b)
    return np.concatenate(([0.0], np.cumsum(steps)))


def resistors(drift, m_max: int) -> np.ndarray:
    """R_0..R_{m_max} (index x holds R_x; R_0 = 1)."""
    return np.exp(log_resistors(drift, m_max))


def log_resistor_prefix(drift, m_max: int) -> np.ndarray:
    """log sum_{i=0}^{m} R_i for m = 0..m_max."""
    return np.logaddexp.accumulate(log_resistors(drift, m_max))


@dataclass(frozen=True)
class HittingProfile:
    """
    p_m = P(reach m before returning to 0) and q_m = P(from m, reach m+1 before 0)
    on the half line, m = 1..m_max. Index 0 of p and q is unused (nan).
    """
    p: np.ndarray
    q: np.ndarray
    log_prefix: np.ndarray

    @property
    def m_max(self) -> int:
        return len(self.p) - 1

    @property
    def prefix(self) -> np.ndarray:
        """sum_{i=0}^{m} R_i (may overflow to inf for strong inward drifts)."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_prefix)


def hitting_profile(drift, m_max: int) -> HittingProfile:
    if m_max < 2:
        raise ValueError("m_max must be >= 2")
    lp = log_resistor_prefix(drift, m_max)
    p = np.full(m_max + 1, np.nan)
    q = np.full(m_max + 1, np.nan)
    p[1:] = np.exp(-lp[:-1])
    q[1:] = np.exp(lp[:-1] - lp[1:])
    return HittingProfile(p, q, lp)


@dataclass(frozen=True)
class DriftFunctionals:
    """B^r(m), B^l(m) for m = 0..horizon (B(0) = 0) and the verdicts for I^r, I^l."""
    b_right: np.ndarray
    b_left: np.ndarray
    i_right: SeriesVerdict
    i_left: SeriesVerdict


def _reciprocal_sum(drift, horizon: int, tol: float, rel_tol: float):
    lp = log_resistor_prefix(drift, horizon)

    def terms(xs):
        return np.exp(-lp[xs])

    verdict = certify_series(terms, start=1, abs_tol=tol, rel_tol=rel_tol, horizon=horizon)
    return np.expm1(lp), verdict


def drift_functionals(drift, horizon: Optional[int] = None, tol: Optional[float] = None,
                      left=None, rel_tol: Optional[float] = None) -> DriftFunctionals:
    """
    B^r(m) = sum_{x=1}^m R_x and I^r = sum_{x>=1} 1/(1+B^r(x)), and the same on the left.

    For a full-line kernel the left profile is taken from the kernel unless given.
    """
    horizon = Config.M_HORIZON if horizon is None else int(horizon)
    tol = Config.SERIES_ABS_TOL if tol is None else tol
    rel_tol = Config.SERIES_REL_TOL if rel_tol is None else rel_tol
    if left is None:
        left = drift.left if isinstance(drift, NearestNeighborKernel) else drift
    b_right, i_right = _reciprocal_sum(as_profile(drift), horizon, tol, rel_tol)
    if as_profile(left) == as_profile(drift):
        b_left, i_left = b_right, i_right
    else:
        b_left, i_left = _reciprocal_sum(as_profile(left), horizon, tol, rel_tol)
    return DriftFunctionals(b_right, b_left, i_right, i_left)


def expected_M(drift, horizon: Optional[int] = None, tol: Optional[float] = None,
               rel_tol: Optional[float] = None) -> SeriesVerdict:
    """E M = 1 + I^r for an excursion that starts with the step 0 -> 1."""
    horizon = Config.M_HORIZON if horizon is None else int(horizon)
    tol = Config.SERIES_ABS_TOL if tol is None else tol
    rel_tol = Config.SERIES_REL_TOL if rel_tol is None else rel_tol
    _, verdict = _reciprocal_sum(as_profile(drift), horizon, tol, rel_tol)
    return verdict.shifted(1.0)


def _one_sided_excursion_time(profile: DriftProfile, schedule: PassageSchedule, m_horizon: int,
                              j_horizon: Optional[int], tol: float, rel_tol: float) -> SeriesVerdict:
    lp = log_resistor_prefix(profile, m_horizon + 1)

    def terms(ms):
        p = np.exp(-lp[ms - 1])
        q = np.exp(lp[ms - 1] - lp[ms])
        low, high, _, diverged = phi_bracket(schedule, q, term_cap=j_horizon)
        if diverged.any():
            return np.full(ms.shape, np.inf)
        return p * 0.5 * (low + high), p * 0.5 * (high - low)

    verdict = certify_series(terms, start=1, abs_tol=tol, rel_tol=rel_tol, horizon=m_horizon)
    # edge (0, 1) is crossed exactly twice
    return verdict.shifted(1.0 + schedule.value(1))


def excursion_time(drift, schedule: PassageSchedule, m_horizon: Optional[int] = None,
                   j_horizon: Optional[int] = None, tol: Optional[float] = None,
                   rel_tol: Optional[float] = None) -> SeriesVerdict:
    """
    Expected actual length of an excursion from the origin,
    1 + s_1 + sum_{m>=1} p_m phi(q_m).

    A full-line kernel averages the right and left excursions (fair first step).
    """
    m_horizon = Config.M_HORIZON if m_horizon is None else int(m_horizon)
    tol = Config.SERIES_ABS_TOL if tol is None else tol
    rel_tol = Config.SERIES_REL_TOL if rel_tol is None else rel_tol
    right = _one_sided_excursion_time(as_profile(drift), schedule, m_horizon, j_horizon, tol, rel_tol)
    if not (isinstance(drift, NearestNeighborKernel) and drift.domain is Domain.FULL_LINE):
        return right
    if drift.symmetric:
        return right
    left = _one_sided_excursion_time(drift.left, schedule, m_horizon, j_horizon, tol, rel_tol)
    return combine_verdicts([right, left], [0.5, 0.5])


def orbit_inward_floor(ks: np.ndarray) -> np.ndarray:
    """
    Lower bound on P(the walk leaves O_k inward), from any vertex of O_k.

    Only side vertices exit inward (mass (2/3)2^-k against (1/3)2^-k outward); a
    corner exits outward only. Every corner visit that moves clockwise starts a
    run along the next side of expected length L = sum_{i<2k-1} a^i, a = 1 - 2^-k,
    so expected side visits are at least a*L times the corner visits. That gives
    inward/outward >= rho = 2aL / (aL + 1), which tends to 2 (inward 2/3).
    """
    ks = np.asarray(ks, dtype=float)
    eps = np.exp2(-ks)
    a = 1.0 - eps
    with np.errstate(divide="ignore", invalid="ignore"):
        run = np.where(eps > 0.0, -np.expm1((2.0 * ks - 1.0) * np.log1p(-eps)) / eps, 2.0 * ks - 1.0)
    al = a * run
    rho = 2.0 * al / (al + 1.0)
    return rho / (1.0 + rho)


def orbit_excursion_bound(horizon: Optional[int] = None, tol: Optional[float] = None) -> SeriesVerdict:
    """
    Bound on the expected number of distinct vertices an orbit-walk excursion visits:
    1 + sum_k |O_k| P(reach O_k).

    The orbit index, read at each orbit change, is dominated by the birth-death
    chain that steps inward from k with probability orbit_inward_floor(k).
    """
    horizon = Config.M_HORIZON if horizon is None else int(horizon)
    tol = Config.SERIES_ABS_TOL if tol is None else tol
    q = orbit_inward_floor(np.arange(1, horizon + 2))
    # log R_x with R_x = prod_{k<=x} inward/outward
    lr = np.concatenate(([0.0], np.cumsum(np.log(q) - np.log1p(-q))))
    lp = np.logaddexp.accumulate(lr)

    def terms(ks):
        return 8.0 * ks * np.exp(-lp[ks - 1])

    return certify_series(terms, start=1, abs_tol=tol, horizon=horizon).shifted(1.0)
