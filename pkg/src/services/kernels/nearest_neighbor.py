import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from models.errors import DriftRangeError, UnknownVertexError
from services.kernels.base_kernel import BaseKernel, Row

DRIFT_KINDS = ("Lamperti", "LogLamperti", "Zero", "Constant", "Tabulated")


class Domain(str, Enum):
    HALF_LINE = "HalfLine"
    FULL_LINE = "FullLine"


@dataclass(frozen=True)
class DriftProfile:
    """
    Outward drift b(x) for x >= 1.

    Lamperti: c/x, LogLamperti: D/(x log x), both clamped to their value at x_min
    below x_min. Tabulated lists b(1), b(2), ... and repeats its last entry.
    """
    kind: str
    param: float = 0.0
    x_min: int = 1
    table: Tuple[float, ...] = ()

    def values(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        if self.kind == "Zero":
            return np.zeros_like(xs)
        if self.kind == "Constant":
            return np.full_like(xs, self.param)
        if self.kind == "Lamperti":
            return self.param / np.maximum(xs, self.x_min)
        if self.kind == "LogLamperti":
            y = np.maximum(xs, self.x_min)
            return self.param / (y * np.log(y))
        idx = np.minimum(xs, len(self.table)).astype(np.int64) - 1
        return np.asarray(self.table, dtype=np.float64)[idx]

    def value(self, x: int) -> float:
        return float(self.values(np.array([x]))[0])

    def tail_value(self) -> float:
        """Limit of b(x) as x grows."""
        if self.kind in ("Constant",):
            return self.param
        if self.kind == "Tabulated":
            return self.table[-1]
        return 0.0

    def describe(self) -> str:
        if self.kind == "Zero":
            return "Zero"
        if self.kind == "Tabulated":
            return f"Tabulated({len(self.table)})"
        return f"{self.kind}({self.param!r})"


def make_drift_profile(kind: str, param: float = 0.0, x_min: int = 1,
                       table: Optional[Sequence[float]] = None) -> DriftProfile:
    """
    Build and validate a drift profile.

    Raises:
        DriftRangeError: if some b(x) leaves (-1, 1) or x_min is inadmissible
    """
    if kind not in DRIFT_KINDS:
        raise DriftRangeError(f"unknown drift kind {kind!r}")
    if int(x_min) != x_min or x_min < 1:
        raise DriftRangeError(f"x_min must be a positive integer, got {x_min!r}")
    x_min = int(x_min)
    param = float(param)

    if kind == "Lamperti":
        if abs(param) >= x_min:
            raise DriftRangeError(f"Lamperti c={param!r} gives |b(x_min)| >= 1 for x_min={x_min}")
    elif kind == "LogLamperti":
        if x_min < 2:
            raise DriftRangeError("LogLamperti needs x_min >= 2")
        if abs(param) >= x_min * math.log(x_min):
            raise DriftRangeError(f"LogLamperti D={param!r} gives |b(x_min)| >= 1 for x_min={x_min}")
    elif kind == "Constant":
        if not abs(param) < 1.0:
            raise DriftRangeError(f"constant drift {param!r} outside (-1, 1)")
    elif kind == "Tabulated":
        values = tuple(float(b) for b in (table or ()))
        if not values:
            raise DriftRangeError("Tabulated drift needs at least one value")
        if any(not abs(b) < 1.0 for b in values):
            raise DriftRangeError("Tabulated drift has a value outside (-1, 1)")
        return DriftProfile(kind, 0.0, 1, values)
    elif kind == "Zero":
        param = 0.0

    return DriftProfile(kind, param, x_min)


class NearestNeighborKernel(BaseKernel):
    """
    Nearest-neighbour walk on Z_+ (HalfLine) or Z (FullLine) with outward drift.

    From x != 0 the walk steps away from the origin with probability (1+b(|x|))/2.
    On the half line 0 always steps to 1; on the full line 0 steps to +-1 fairly.
    The left half of the full line may carry its own profile.
    """

    def __init__(self, domain: Domain, right: DriftProfile, left: Optional[DriftProfile] = None):
        self.domain = Domain(domain)
        self.right = right
        self.left = right if left is None else left
        super().__init__(origin=0)

    def get_kernel_name(self) -> str:
        return "nearest-neighbor"

    @property
    def symmetric(self) -> bool:
        return self.left == self.right

    def contains(self, v) -> bool:
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            return False
        return self.domain is Domain.FULL_LINE or v >= 0

    def norm(self, v) -> int:
        return abs(int(v))

    def drift(self, x: int) -> float:
        """Outward drift at x (0 at the origin)."""
        if x > 0:
            return self.right.value(x)
        if x < 0:
            return self.left.value(-x)
        return 0.0

    def transition_row(self, v) -> Row:
        self.require(v)
        v = int(v)
        if v == 0:
            if self.domain is Domain.HALF_LINE:
                return [(1, 1.0)]
            return [(1, 0.5), (-1, 0.5)]
        p_out = 0.5 * (1.0 + self.drift(v))
        out = v + 1 if v > 0 else v - 1
        inward = v - 1 if v > 0 else v + 1
        return [(out, p_out), (inward, 1.0 - p_out)]

    def prob_plus(self, positions: np.ndarray) -> np.ndarray:
        """Vectorized probability of a +1 step from each position."""
        x = np.asarray(positions, dtype=np.int64)
        p = np.empty(x.shape, dtype=np.float64)
        pos = x > 0
        neg = x < 0
        if pos.any():
            p[pos] = 0.5 * (1.0 + self.right.values(x[pos]))
        if neg.any():
            p[neg] = 0.5 * (1.0 - self.left.values(-x[neg]))
        zero = ~(pos | neg)
        p[zero] = 1.0 if self.domain is Domain.HALF_LINE else 0.5
        return p

    def step(self, v, rng):
        # one draw even from the reflecting origin keeps RNG use per call fixed
        if self.domain is Domain.HALF_LINE and v == 0:
            rng.random()
            return 1
        if not self.contains(v):
            raise UnknownVertexError(f"{v!r} is not a vertex of the {self.kernel_name} kernel")
        u = rng.random()
        if v == 0:
            return 1 if u < 0.5 else -1
        p_out = 0.5 * (1.0 + self.drift(v))
        if u < p_out:
            return v + 1 if v > 0 else v - 1
        return v - 1 if v > 0 else v + 1


def make_drift_kernel(kind: str, param: float = 0.0, domain=Domain.HALF_LINE, x_min: int = 1,
                      table: Optional[Sequence[float]] = None,
                      left: Optional[DriftProfile] = None) -> NearestNeighborKernel:
    """
    Drift-parametrized nearest-neighbour kernel.

    Args:
        kind: 'Lamperti' (param c), 'LogLamperti' (param D), 'Zero',
              'Constant' (param b) or 'Tabulated' (table)
        param: The drift parameter
        domain: HalfLine or FullLine
        x_min: Drift is clamped to b(x_min) below x_min
        table: Values b(1), b(2), ... for Tabulated
        left: Optional separate profile for x < 0 on the full line

    Returns:
        NearestNeighborKernel
    """
    profile = make_drift_profile(kind, param, x_min, table)
    return NearestNeighborKernel(Domain(domain), profile, left)
