import math
from typing import Callable, Optional, Tuple

import numpy as np

from config.settings import Config
from models.verdicts import SeriesVerdict, Verdict

TermFunction = Callable[[np.ndarray], object]
# (low, high) or (low, high, method) for the terms after index K
TailBracket = Callable[[int], Optional[Tuple]]

_LOG_TINY = -700.0

TAIL_BOUND = "bound"
TAIL_GEOMETRIC = "geometric"
TAIL_POWER_LAW = "power_law"
TAIL_UNDERFLOW = "underflow"


def certify_series(terms: TermFunction, *, start: int = 1, abs_tol: Optional[float] = None,
                   rel_tol: Optional[float] = None, horizon: Optional[int] = None,
                   tail_bracket: Optional[TailBracket] = None,
                   chunk: Optional[int] = None) -> SeriesVerdict:
    """
    Evaluate a series of nonnegative terms with a three-valued verdict.

    Terms are requested in doubling chunks of indices k = start, start+1, ...
    The term function may return either an array of values or a pair
    (values, half_widths) when each term is itself only known within a bracket;
    those half-widths are added to the reported tail estimate.

    Diverged needs a witness: the partial sum passing 1/abs_tol, an infinite term,
    or k*t_k not decreasing across three successive dyadic windows (terms no
    smaller than a harmonic minorant). Converged needs a tail bracket, tried in
    order: the caller's tail_bracket, a geometric ratio estimate, a power-law
    extrapolation with exponent above 1. Only the first is a proof; the verdict
    names the one used in tail_method so extrapolated values can be told apart.

    Args:
        terms: Vectorized term function of an integer index array
        start: First index
        abs_tol: Converged needs bracket half-width below max(abs_tol, rel_tol*|value|)
        rel_tol: Relative part of that rule
        horizon: Maximum number of terms
        tail_bracket: Optional (low, high) bound on the sum of terms after index K,
            or (low, high, method) when the bracket is itself an estimate
        chunk: First chunk size

    Returns:
        SeriesVerdict
    """
    abs_tol = Config.SERIES_ABS_TOL if abs_tol is None else abs_tol
    rel_tol = Config.SERIES_REL_TOL if rel_tol is None else rel_tol
    horizon = Config.M_HORIZON if horizon is None else int(horizon)
    size = Config.SERIES_CHUNK if chunk is None else int(chunk)

    blocks = []
    partial = 0.0
    inner = 0.0
    n = 0
    last_half = None
    last_method = None

    while n < horizon:
        take = min(size, horizon - n)
        ks = np.arange(start + n, start + n + take, dtype=np.int64)
        out = terms(ks)
        if isinstance(out, tuple):
            vals, errs = out
            inner += float(np.sum(np.asarray(errs, dtype=np.float64)))
        else:
            vals = out
        vals = np.asarray(vals, dtype=np.float64)
        n += take

        if np.isnan(vals).any() or not math.isfinite(inner):
            return SeriesVerdict(Verdict.INCONCLUSIVE, partial, n, None, None)
        if np.isposinf(vals).any():
            return SeriesVerdict.divergent(math.inf, n)

        blocks.append(vals)
        partial += float(np.sum(vals))
        if partial > 1.0 / abs_tol:
            return SeriesVerdict.divergent(partial, n)

        all_vals = np.concatenate(blocks) if len(blocks) > 1 else blocks[0]
        blocks = [all_vals]
        if n >= Config.SERIES_WITNESS_MIN_TERMS and harmonic_witness(all_vals, start):
            return SeriesVerdict.divergent(partial, n)

        bracket = tail_bounds_with_method(all_vals, start, tail_bracket)
        if bracket is not None:
            low, high, last_method = bracket
            half = 0.5 * (high - low) + inner
            value = partial + 0.5 * (low + high)
            last_half = half
            if half < max(abs_tol, rel_tol * abs(value)):
                return SeriesVerdict(Verdict.CONVERGED, partial, n, half, value, last_method)
        size = n

    return SeriesVerdict(Verdict.INCONCLUSIVE, partial, n, last_half, None, last_method)


def harmonic_witness(vals: np.ndarray, start: int, slack: float = 1e-9) -> bool:
    """k*t_k is nondecreasing (and positive) over the last three dyadic windows."""
    n = len(vals)
    if n < 8:
        return False
    edges = [n // 8, n // 4, n // 2, n]
    ks = np.arange(start, start + n, dtype=np.float64)
    means = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        means.append(float(np.mean(ks[lo:hi] * vals[lo:hi])))
    if not means[0] > 0.0:
        return False
    return means[1] >= means[0] * (1.0 - slack) and means[2] >= means[1] * (1.0 - slack)


def tail_bounds(vals: np.ndarray, start: int,
                tail_bracket: Optional[TailBracket] = None) -> Optional[Tuple[float, float]]:
    """(low, high) bracket on the sum of the terms after the last one in vals."""
    found = tail_bounds_with_method(vals, start, tail_bracket)
    return None if found is None else found[:2]


def tail_bounds_with_method(vals: np.ndarray, start: int,
                            tail_bracket: Optional[TailBracket] = None) -> Optional[Tuple[float, float, str]]:
    """
    (low, high, method) for the sum of the terms after the last one in vals.

    A caller's tail_bracket is taken as a proof ("bound", unless it names its own
    method as a third entry). Without one the tail is extrapolated from the last
    terms: a settled ratio below 1 gives a geometric estimate, decay faster than
    k^-(1 + SERIES_POWER_MARGIN) a power-law estimate. Both assume the observed
    trend continues past the horizon.
    """
    n = len(vals)
    last_index = start + n - 1
    if tail_bracket is not None:
        bracket = tail_bracket(last_index)
        if bracket is not None:
            return bracket[0], bracket[1], bracket[2] if len(bracket) > 2 else TAIL_BOUND

    window = vals[n // 2:]
    # subnormal terms carry no usable ratio
    positive = window >= np.finfo(np.float64).tiny
    if not positive.any():
        return 0.0, 0.0, TAIL_UNDERFLOW
    t = window[positive]
    if len(t) >= 2:
        ratios = t[1:] / t[:-1]
        r = float(ratios.max())
        quarter = len(ratios) // 4
        # ratios creeping up towards 1 (power-law decay) give no geometric bound
        settled = quarter < 2 or ratios[-quarter:].max() <= ratios[:quarter].max() * (1.0 + 1e-9)
        if settled and r < 1.0 - Config.SERIES_RATIO_GAP:
            return 0.0, float(t[-1]) * r / (1.0 - r), TAIL_GEOMETRIC

    if n < 8 or not (vals[n // 4] > 0.0 and vals[n // 2] > 0.0 and vals[-1] > 0.0):
        return None
    k1, k2, k3 = start + n // 4, start + n // 2, last_index
    beta_a = math.log(vals[n // 4] / vals[n // 2]) / math.log(k2 / k1)
    beta_b = math.log(vals[n // 2] / vals[-1]) / math.log(k3 / k2)
    if min(beta_a, beta_b) <= 1.0 + Config.SERIES_POWER_MARGIN:
        return None
    t_last = float(vals[-1])
    tails = [t_last * (k3 / (beta - 1.0) - 0.5) for beta in (beta_a, beta_b)]
    return max(0.0, min(tails)), max(tails), TAIL_POWER_LAW


def block_layout(first: int, term_cap: int, growth: float) -> Tuple[np.ndarray, np.ndarray]:
    """Start indices and lengths of geometrically growing blocks covering [first, term_cap]."""
    starts, lengths = [], []
    s = first
    while s <= term_cap:
        length = max(1, int(math.ceil(s * (growth - 1.0))))
        length = min(length, term_cap - s + 1)
        starts.append(s)
        lengths.append(length)
        s += length
    return np.asarray(starts, dtype=np.int64), np.asarray(lengths, dtype=np.int64)


def _log_geometric_block(log_z: np.ndarray, starts: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """log of sum_{j=s}^{s+n-1} z^j for every (z, block) pair."""
    lz = log_z[:, None]
    n = lengths[None, :].astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        neg = np.log(-np.expm1(n * lz)) - np.log(-np.expm1(lz))
        pos = n * lz + np.log(-np.expm1(-n * lz)) - np.log(np.expm1(lz))
        ratio = np.where(lz < 0.0, neg, np.where(lz > 0.0, pos, np.log(n)))
    return starts[None, :] * lz + ratio


def power_series_bracket(log_coef: Callable[[np.ndarray], np.ndarray], z,
                         log_ratio_bound: Callable[[int], float], *, first: int = 1,
                         head: Optional[int] = None, growth: Optional[float] = None,
                         term_cap: Optional[int] = None,
                         z_chunk: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Bracket sum_{j >= first} c_j z^j for a monotone coefficient sequence, vectorized over z.

    The first `head` terms are summed exactly; after that the indices are cut into
    blocks growing by `growth`, each bounded by the smallest and largest coefficient
    of the block times the closed-form geometric sum of z^j over it. Blocks stop
    once z^j has decayed past Config.PHI_DECAY_CUTOFF or at term_cap, and the
    remainder is bounded by c_{J+1} z^{J+1} / (1 - rho z), rho = sup c_{j+1}/c_j.

    Args:
        log_coef: log c_j for an integer array j (-inf for zero coefficients)
        z: Nonnegative points
        log_ratio_bound: Upper bound on log(c_{i+1}/c_i) over all i >= J, as a function of J

    Returns:
        (low, high, terms_used) arrays shaped like z
    """
    head = Config.PHI_HEAD_TERMS if head is None else int(head)
    growth = Config.PHI_BLOCK_GROWTH if growth is None else float(growth)
    term_cap = Config.J_HORIZON if term_cap is None else int(term_cap)
    z_chunk = Config.PHI_Z_CHUNK if z_chunk is None else int(z_chunk)

    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    low = np.zeros(z.shape)
    high = np.zeros(z.shape)
    used = np.zeros(z.shape, dtype=np.int64)

    head_end = min(first + head - 1, term_cap)
    head_idx = np.arange(first, head_end + 1, dtype=np.int64)
    head_logc = log_coef(head_idx)
    starts, lengths = block_layout(head_end + 1, term_cap, growth)
    ends = starts + lengths - 1
    if len(starts):
        logc_lo = np.minimum(log_coef(starts), log_coef(ends))
        logc_hi = np.maximum(log_coef(starts), log_coef(ends))

    flat = np.flatnonzero(z > 0.0)
    for c0 in range(0, len(flat), z_chunk):
        idx = flat[c0:c0 + z_chunk]
        lz = np.log(z[idx])
        with np.errstate(over="ignore", invalid="ignore"):
            head_terms = np.exp(head_logc[None, :] + head_idx[None, :] * lz[:, None])
        lo = head_terms.sum(axis=1)
        hi = lo.copy()
        done_at = np.full(idx.shape, head_end, dtype=np.int64)
        remainder = _remainder(log_coef, log_ratio_bound, lz, head_end)
        active = remainder > 1e-16 * np.maximum(hi, 1e-300)

        b = 0
        group = 64
        while active.any() and b < len(starts):
            sl = slice(b, min(b + group, len(starts)))
            rows = np.flatnonzero(active)
            log_g = _log_geometric_block(lz[rows], starts[sl], lengths[sl])
            with np.errstate(over="ignore", invalid="ignore"):
                lo[rows] += np.exp(logc_lo[None, sl] + log_g).sum(axis=1)
                hi[rows] += np.exp(logc_hi[None, sl] + log_g).sum(axis=1)
            last_end = int(ends[sl][-1])
            done_at[rows] = last_end
            remainder[rows] = _remainder(log_coef, log_ratio_bound, lz[rows], last_end)
            active[rows] = remainder[rows] > 1e-16 * np.maximum(hi[rows], 1e-300)
            b = sl.stop

        hi += remainder
        low[idx] = lo
        high[idx] = hi
        used[idx] = done_at
    return low, high, used


def _remainder(log_coef, log_ratio_bound, lz: np.ndarray, last: int) -> np.ndarray:
    """Bound on sum_{j > last} c_j z^j."""
    log_c_next = float(log_coef(np.array([last + 1], dtype=np.int64))[0])
    if log_c_next == -math.inf:
        return np.zeros(lz.shape)
    log_rho = log_ratio_bound(last + 1)
    x = log_rho + lz
    out = np.full(lz.shape, math.inf)
    ok = x < 0.0
    with np.errstate(over="ignore"):
        out[ok] = np.exp(log_c_next + (last + 1) * lz[ok] - np.log(-np.expm1(x[ok])))
    return out


def zeta_tail_bracket(p: float, n: float) -> Optional[Tuple[float, float]]:
    """
    Bounds on sum_{m > n} m^-p for p > 1: the trapezoid rule from below and the
    midpoint rule from above, both valid for convex decreasing summands.
    """
    if p <= 1.0 or n < 1:
        return None
    low = (n + 1.0) ** (1.0 - p) / (p - 1.0) + 0.5 * (n + 1.0) ** (-p)
    high = (n + 0.5) ** (1.0 - p) / (p - 1.0)
    return low, high
