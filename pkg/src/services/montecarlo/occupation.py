"""
Occupation of the two half-axes by infinitely impatient walks on Z.

Only first crossings cost time, so every unit of actual time adds one edge to
the range [-a, r]. Whether the next unit extends the side the walk is on or the
opposite one is a gambler's-ruin question on the current range: from the right
end the walk reaches -a-1 before r+1 with probability W(r, r+1)/W(-a-1, r+1).
For simple random walk that is 1/(a+r+2), which is the coin-turning device
with turn probability 1/(k+1) at unit k.
"""

from typing import Optional

import numpy as np

from config.settings import Config
from models.errors import HorizonError, UnsupportedError
from services.analytic.network import log_resistor_prefix, log_resistors
from services.kernels.nearest_neighbor import Domain, NearestNeighborKernel
from services.montecarlo.stats import total_variation


class RangeChain:
    """
    Side-switch probabilities of the range-extension chain of a kernel on Z.

    kernel=None is simple random walk (closed form).
    """

    def __init__(self, kernel: Optional[NearestNeighborKernel] = None, n_max: int = 16):
        if kernel is not None:
            if not isinstance(kernel, NearestNeighborKernel) or kernel.domain is not Domain.FULL_LINE:
                raise UnsupportedError("the occupation chain needs a nearest-neighbour kernel on Z")
            if kernel.right.kind == "Zero" and kernel.left.kind == "Zero":
                kernel = None
        self.kernel = kernel
        self.n_max = int(n_max)
        if kernel is not None:
            self._log_r = log_resistors(kernel.right, self.n_max)
            self._log_l = log_resistors(kernel.left, self.n_max)
            self._pref_r = log_resistor_prefix(kernel.right, self.n_max)
            self._pref_l = log_resistor_prefix(kernel.left, self.n_max)

    def switch(self, a: np.ndarray, r: np.ndarray, at_right: np.ndarray) -> np.ndarray:
        """P(next new edge is on the other side) for range [-a, r], vectorized."""
        a = np.asarray(a)
        r = np.asarray(r)
        if self.kernel is None:
            return 1.0 / (a + r + 2.0)
        log_total = np.logaddexp(self._pref_l[a], self._pref_r[r])
        log_near = np.where(at_right, self._log_r[r], self._log_l[a])
        return np.exp(log_near - log_total)


def _validate_n(n: int, least: int) -> None:
    if int(n) != n or n < least:
        raise ValueError(f"n must be an integer >= {least}")


def inf_imp_occupation(n: int, replicas: int, rng, kernel=None) -> np.ndarray:
    """
    R_n / n for `replicas` infinitely impatient walks on Z, where R_n is the
    actual time spent on the right half-axis up to time n.

    The first unit goes right or left fairly; afterwards each unit extends the
    current side or switches with the range chain's probability.
    """
    _validate_n(n, 2)
    chain = RangeChain(kernel, n)
    at_right = rng.random(replicas) < 0.5
    r = at_right.astype(np.int64)
    for k in range(2, n + 1):
        u = rng.random(replicas)
        p = chain.switch(k - 1 - r, r, at_right)
        at_right ^= u < p
        r += at_right
    return r / float(n)


def coin_turning(n: int, replicas: int, rng) -> np.ndarray:
    """Fraction of n units showing heads; fair first toss, unit k >= 2 turns the coin w.p. 1/(k+1)."""
    _validate_n(n, 1)
    heads = rng.random(replicas) < 0.5
    count = heads.astype(np.int64)
    for k in range(2, n + 1):
        heads ^= rng.random(replicas) < 1.0 / (k + 1.0)
        count += heads
    return count / float(n)


def range_chain_distribution(n: int, kernel=None) -> np.ndarray:
    """
    Exact law of R_n (the number of right extensions in n units) by dynamic
    programming over (right length, current side).
    """
    _validate_n(n, 1)
    chain = RangeChain(kernel, n)
    right = np.zeros(n + 1)
    left = np.zeros(n + 1)
    right[1] = 0.5
    left[0] = 0.5
    for k in range(1, n):
        r = np.arange(n + 1)
        a = np.clip(k - r, 0, None)
        valid = r <= k
        p_right = np.where(valid, chain.switch(a, np.minimum(r, k), True), 0.0)
        p_left = np.where(valid, chain.switch(a, np.minimum(r, k), False), 0.0)
        new_right = np.zeros(n + 1)
        new_left = np.zeros(n + 1)
        new_right[1:] += right[:-1] * (1.0 - p_right[:-1])
        new_left += right * p_right
        new_right[1:] += left[:-1] * p_left[:-1]
        new_left += left * (1.0 - p_left)
        right, left = new_right, new_left
    return right + left


def coin_turning_distribution(n: int) -> np.ndarray:
    """Exact law of the heads count after n units of the coin-turning device."""
    _validate_n(n, 1)
    heads = np.zeros(n + 1)
    tails = np.zeros(n + 1)
    heads[1] = 0.5
    tails[0] = 0.5
    for k in range(2, n + 1):
        turn = 1.0 / (k + 1.0)
        new_heads = np.zeros(n + 1)
        new_heads[1:] = heads[:-1] * (1.0 - turn) + tails[:-1] * turn
        new_tails = heads * turn + tails * (1.0 - turn)
        heads, tails = new_heads, new_tails
    return heads + tails


def exact_small_n(n: int, kernel=None) -> np.ndarray:
    """
    Exact probability vector of R_n, index r = 0..n.

    Raises:
        HorizonError: if n exceeds Config.EXACT_N_MAX
    """
    if n > Config.EXACT_N_MAX:
        raise HorizonError(f"exact enumeration is limited to n <= {Config.EXACT_N_MAX}, got {n}")
    return range_chain_distribution(n, kernel)


def equivalence_gap(n_max: Optional[int] = None, kernel=None) -> float:
    """Largest total variation between the range-chain and coin-turning laws over n <= n_max."""
    n_max = Config.EXACT_N_MAX if n_max is None else int(n_max)
    return max(total_variation(exact_small_n(n, kernel), coin_turning_distribution(n))
               for n in range(1, n_max + 1))


def srw_occupation(n: int, replicas: int, rng, chunk: int = 256) -> np.ndarray:
    """
    Fraction of the first n steps of simple random walk on Z spent crossing
    edges of the right half-axis (the Constant-schedule occupation).
    """
    _validate_n(n, 1)
    out = np.empty(replicas)
    for lo in range(0, replicas, chunk):
        rows = min(chunk, replicas - lo)
        steps = np.where(rng.random((rows, n)) < 0.5, 1, -1).astype(np.int32)
        after = np.cumsum(steps, axis=1, dtype=np.int32)
        before = after - steps
        out[lo:lo + rows] = np.count_nonzero(np.minimum(before, after) >= 0, axis=1) / float(n)
    return out
