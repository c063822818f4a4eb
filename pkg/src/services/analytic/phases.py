import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import zeta

from config.settings import Config
from models.errors import UnsupportedError
from models.verdicts import Recurrence, SeriesVerdict
from services.kernels.nearest_neighbor import DriftProfile
from services.passage import ImpatienceClass
from services.series import certify_series, zeta_tail_bracket

SPACE_GRAPHS = ("Z", "Z2")


# ========== LAMPERTI PHASES ==========

def lamperti_phase(c: float, alpha: float) -> Recurrence:
    """
    Phase of the impatient walk with drift c/x and schedule s_k = k^-alpha.

    Positive recurrent iff c < min(0, (alpha-1)/2); null recurrent for the rest
    of the recurrent region c <= 1/2.
    """
    if c > 0.5:
        return Recurrence.TRANSIENT_UNDERLYING
    if c < min(0.0, 0.5 * (alpha - 1.0)):
        return Recurrence.POSITIVE_RECURRENT
    return Recurrence.NULL_RECURRENT


def is_lamperti_boundary(c: float, alpha: float, eps: float = 0.0) -> bool:
    """True on a phase boundary, where the classification has no series witness."""
    if abs(c - 0.5) <= eps:
        return True
    if alpha >= 1.0:
        return abs(c) <= eps
    return abs(c - 0.5 * (alpha - 1.0)) <= eps


def log_lamperti_phase(d: float, schedule_class) -> Recurrence:
    """
    Phase for drift D/(x log x), known only up to the strongly impatient case.

    D >= -1/2 is null recurrent for every schedule; below it the walk is positive
    recurrent when sum s_k is finite and undecided otherwise.
    """
    kind = getattr(schedule_class, "kind", schedule_class)
    if d >= -0.5:
        return Recurrence.NULL_RECURRENT
    if kind in (ImpatienceClass.STRONGLY_IMPATIENT, ImpatienceClass.INFINITELY_IMPATIENT):
        return Recurrence.POSITIVE_RECURRENT
    return Recurrence.INCONCLUSIVE


def underlying_recurrent(profile: DriftProfile) -> bool:
    """Recurrence of the underlying half-line walk for the built-in drift shapes."""
    if profile.kind == "Lamperti":
        return profile.param <= 0.5
    if profile.kind in ("Zero", "LogLamperti"):
        return True
    return profile.tail_value() <= 0.0


# ========== SPACE-DEPENDENT IMPATIENCE ==========

@dataclass(frozen=True)
class SpaceVerdict:
    graph: str
    alpha: float
    recurrence: Recurrence
    edge_sum: SeriesVerdict
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"graph": self.graph, "alpha": self.alpha, "recurrence": self.recurrence.value}
        out.update(self.edge_sum.to_dict())
        out.update(self.detail)
        return out


def shell_edge_count(graph: str, k) -> np.ndarray:
    """Number of edges e with d(0, e) = k (distance of the nearer endpoint)."""
    _require_graph(graph)
    k = np.asarray(k)
    if graph == "Z":
        return np.full(k.shape, 2.0)
    return 8.0 * k + 4.0


def expected_visits(graph: str) -> float:
    """E xi(u): expected visits to any u != 0 per excursion of simple random walk (1 on Z and Z2)."""
    _require_graph(graph)
    return 1.0


def expected_crossings(graph: str) -> float:
    """E xi(e): expected crossings of a fixed edge per excursion, 2 E xi(u) / degree."""
    degree = 2 if graph == "Z" else 4
    return 2.0 * expected_visits(graph) / degree


def _require_graph(graph: str) -> None:
    if graph not in SPACE_GRAPHS:
        raise UnsupportedError(f"space-dependent impatience is implemented on Z and Z2, not {graph!r}")


def _space_tail(graph: str, alpha: float):
    """Bounds on the shells k > K, written as zeta tails in n = k + 1."""
    def bracket(last: int):
        n = last + 1.0
        if graph == "Z":
            tail = zeta_tail_bracket(alpha, n)
            return None if tail is None else (2.0 * tail[0], 2.0 * tail[1])
        linear = zeta_tail_bracket(alpha - 1.0, n)
        if linear is None:
            return None
        flat = zeta_tail_bracket(alpha, n)
        return max(4.0 * linear[0] - 2.0 * flat[1], 0.0), 4.0 * linear[1] - 2.0 * flat[0]
    return bracket


def space_criterion(graph: str, alpha: float, horizon: Optional[int] = None,
                    tol: Optional[float] = None) -> SpaceVerdict:
    """
    Positive recurrence of simple random walk on Z or Z2 whose every crossing of
    edge e costs s(e) = (1 + d(0, e))^-alpha: PR iff sum_e E xi(e) s(e) < infinity.

    The series is sum_k |shell k| E xi (1+k)^-alpha, i.e. 2 zeta(alpha) on Z and
    4 zeta(alpha-1) - 2 zeta(alpha) on Z2.
    """
    _require_graph(graph)
    horizon = Config.CLASSIFY_HORIZON if horizon is None else int(horizon)
    tol = Config.SERIES_ABS_TOL if tol is None else tol
    weight = expected_crossings(graph)

    def terms(ks):
        return shell_edge_count(graph, ks) * weight * (1.0 + ks) ** (-alpha)

    dim = 1 if graph == "Z" else 2
    verdict = certify_series(terms, start=0, abs_tol=tol, horizon=horizon,
                             tail_bracket=_space_tail(graph, alpha))
    recurrence = Recurrence.POSITIVE_RECURRENT if alpha > dim else Recurrence.NULL_RECURRENT
    if verdict.converged and alpha <= dim or verdict.diverged and alpha > dim:
        # the certified series and the closed form disagree
        recurrence = Recurrence.INCONCLUSIVE
    detail = {"threshold": float(dim), "closed_form": _space_closed_form(graph, alpha)}
    return SpaceVerdict(graph, alpha, recurrence, verdict, detail)


def _space_closed_form(graph: str, alpha: float) -> float:
    if graph == "Z":
        return 2.0 * float(zeta(alpha)) if alpha > 1.0 else math.inf
    if alpha <= 2.0:
        return math.inf
    return 4.0 * float(zeta(alpha - 1.0)) - 2.0 * float(zeta(alpha))
