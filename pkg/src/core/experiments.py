"""
Harness experiments.

Every experiment takes a validated ExperimentConfig and returns a ResultSet.
Monte Carlo work is cut into tasks, one per (grid point, stream); a task draws
from its own RngContract, so results depend on the seed and the stream count
but never on the worker count or on completion order.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.experiment import SPACE_SCHEDULE, ExperimentConfig, build_kernel, build_schedule, grid_values
from config.settings import Config
from core.emit import ResultSet
from models.errors import ConfigError, GateFailure, InconclusiveError
from models.verdicts import Provenance, Recurrence, SeriesVerdict, Verdict3, combine_verdicts
from services.analytic import (
    excursion_time,
    expected_M,
    is_lamperti_boundary,
    lamperti_phase,
    log_lamperti_phase,
    orbit_excursion_bound,
    prr_criterion,
    space_criterion,
    two_sided_exit,
)
from services.analytic.network import hitting_profile
from services.analytic.phases import expected_visits, underlying_recurrent
from services.clock import TimedWalk, write_trace
from services.kernels import Domain, LatticeKernel, NearestNeighborKernel, OrbitKernel
from services.montecarlo.excursions import ExcursionStats, excursion_stats, successive_excursions
from services.montecarlo.occupation import equivalence_gap, inf_imp_occupation, srw_occupation
from services.montecarlo.rng import RngContract, make_rng, split_replicas
from services.montecarlo.space import space_dependent_excursion
from services.montecarlo.spread import RangeTrace, checkpoint_grid, clock_range_trace, range_trace
from services.montecarlo.stats import StreamingMoments, binomial_band, family_sigmas, ks_arcsine, ks_uniform
from services.passage import ImpatienceClass, PassageSchedule, classify

Progress = Optional[Callable[[int, int, str], None]]

_FINITE_TOTAL = (ImpatienceClass.STRONGLY_IMPATIENT, ImpatienceClass.INFINITELY_IMPATIENT)


# ========== TASK POOL ==========

def run_tasks(fn: Callable, tasks: Sequence[Tuple], workers: int, progress: Progress = None,
              label: str = "") -> List:
    """
    fn(*task) for every task, in a process pool when workers > 1.

    Results come back in task order whatever order the workers finish in.
    """
    total = len(tasks)
    out = []
    if workers <= 1 or total <= 1:
        for i, task in enumerate(tasks, 1):
            out.append(fn(*task))
            if progress:
                progress(i, total, label)
        return out
    with ProcessPoolExecutor(max_workers=min(workers, total)) as ex:
        futures = [ex.submit(fn, *task) for task in tasks]
        for i, future in enumerate(futures, 1):
            out.append(future.result())
            if progress:
                progress(i, total, label)
    return out


def _streams(cfg: ExperimentConfig, replicas: int, block: int) -> List[Tuple[RngContract, int]]:
    """(contract, replicas) per stream of grid block `block`, empty streams dropped."""
    streams = cfg.budget.streams
    counts = split_replicas(replicas, streams)
    return [(RngContract(cfg.seed, block * streams + i), n) for i, n in enumerate(counts) if n > 0]


def _excursion_task(kernel, schedule, replicas, step_cap, contract, edge_cap, batch):
    return excursion_stats(kernel, schedule, replicas, step_cap, contract.generator(),
                           edge_cap=edge_cap or None, batch=batch)


def _occupation_task(n, replicas, contract):
    return inf_imp_occupation(n, replicas, contract.generator())


def _srw_occupation_task(n, replicas, contract):
    return srw_occupation(n, replicas, contract.generator())


def _range_task(kernel, schedule, t_max, grid, paths, step_cap, contract):
    return range_trace(kernel, schedule, t_max, grid, contract.generator(), paths, step_cap)


def _clock_range_task(kernel, schedule, t_max, grid, paths, step_cap, contract):
    return clock_range_trace(kernel, schedule, t_max, grid, contract.generator(), paths, step_cap)


def _space_task(graph, alpha, replicas, step_cap, contract, core_radius, batch):
    return space_dependent_excursion(graph, alpha, replicas, step_cap, contract.generator(),
                                     core_radius, batch)


def _series_task(kernel, schedule, m_horizon, j_horizon, tol, rel_tol):
    return excursion_time(kernel, schedule, m_horizon, j_horizon, tol, rel_tol)


def _mc_excursions(cfg: ExperimentConfig, kernel, schedule, step_cap: int, block: int,
                   progress: Progress, label: str) -> ExcursionStats:
    b = cfg.budget
    tasks = [(kernel, schedule, n, step_cap, contract, b.edge_cap, b.batch)
             for contract, n in _streams(cfg, b.replicas, block)]
    merged = None
    for stats in run_tasks(_excursion_task, tasks, b.workers, progress, label):
        merged = stats if merged is None else merged.merge(stats)
    return merged


# ========== HELPERS ==========

def describe_kernel(kernel) -> str:
    if isinstance(kernel, NearestNeighborKernel):
        text = f"{kernel.domain.value}:{kernel.right.describe()}"
        if not kernel.symmetric:
            text += f"|left:{kernel.left.describe()}"
        return text
    if isinstance(kernel, OrbitKernel):
        return f"orbit(k_max={kernel.k_max})"
    return kernel.kernel_name


def series_recurrence(verdict: SeriesVerdict) -> Recurrence:
    if verdict.converged:
        return Recurrence.POSITIVE_RECURRENT
    if verdict.diverged:
        return Recurrence.NULL_RECURRENT
    return Recurrence.INCONCLUSIVE


def _schedule_class(schedule: PassageSchedule):
    try:
        return classify(schedule)
    except InconclusiveError:
        return None


def _z_score(mean: Optional[float], stderr: Optional[float], target: Optional[float]) -> Optional[float]:
    if mean is None or target is None or not stderr or not math.isfinite(stderr):
        return None
    return (mean - target) / stderr


def _strictly_increasing(values: Sequence[float]) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


def _hitting_reference(kernel: NearestNeighborKernel, m_max: int) -> np.ndarray:
    """P(M >= m) for m = 1..m_max: the excursion reaches distance m before returning."""
    top = max(m_max, 2)
    right = hitting_profile(kernel.right, top).p[1:m_max + 1]
    if kernel.domain is Domain.HALF_LINE or kernel.symmetric:
        return right
    left = hitting_profile(kernel.left, top).p[1:m_max + 1]
    return 0.5 * (right + left)


# ========== PHASE SWEEP ==========

def phase_sweep(cfg: ExperimentConfig, progress: Progress = None) -> ResultSet:
    """
    Lamperti drift c/x against Power(alpha) schedules over the (c, alpha) grid.

    Each point gets its closed-form phase, the certified excursion-time series and,
    when BUDGET_REPLICAS > 0, Monte Carlo excursion statistics with the stability
    checks of _sweep_monte_carlo. Points on a phase boundary are labeled and left
    out of the comparison.
    """
    result = ResultSet("phase-sweep")
    b, tol = cfg.budget, cfg.tol
    rel_tol = tol.rel or Config.PHASE_REL_TOL

    points = []
    for c in cfg.grid.c:
        for alpha in cfg.grid.alpha:
            closed = lamperti_phase(c, alpha)
            if closed is Recurrence.TRANSIENT_UNDERLYING:
                label = "transient"
            elif is_lamperti_boundary(c, alpha, tol.boundary):
                label = "boundary"
            else:
                label = "interior"
            points.append((c, alpha, closed, label))

    interior = [(i, p) for i, p in enumerate(points) if p[3] == "interior"]
    models = {i: (build_kernel(cfg, kind="Lamperti", param=p[0]), build_schedule(cfg, kind="Power", param=p[1]))
              for i, p in interior}
    tasks = [(models[i][0], models[i][1], b.m_horizon, b.j_horizon, tol.abs, rel_tol) for i, _ in interior]
    verdicts = dict(zip((i for i, _ in interior), run_tasks(_series_task, tasks, b.workers, progress, "series")))
    caps = sorted(grid_values(cfg.grid.step_cap, b.step_cap))
    slots = 2 + len(caps)

    counts = {"interior": 0, "boundary": 0, "transient": 0, "agree": 0, "disagree": 0, "uncertified": 0}
    for i, (c, alpha, closed, label) in enumerate(points):
        counts[label] += 1
        row = dict(c=c, alpha=alpha, label=label, closed_form=closed.value)
        if label == "interior":
            verdict = verdicts[i]
            found = series_recurrence(verdict)
            agree = None if found is Recurrence.INCONCLUSIVE else found is closed
            row.update(series_verdict=verdict.verdict.value, series_value=verdict.value,
                       series_tail=verdict.tail_estimate, series_tail_method=verdict.tail_method,
                       series_recurrence=found.value, agree=agree)
            if agree is None:
                counts["uncertified"] += 1
            elif agree:
                counts["agree"] += 1
            else:
                counts["disagree"] += 1
                result.fail(f"(c={c}, alpha={alpha}): closed form says {closed.value}, "
                            f"series says {found.value}")
            if b.replicas > 0:
                row.update(_sweep_monte_carlo(cfg, models[i], closed, i * slots, caps, progress,
                                              result, f"c={c} alpha={alpha}"))
        result.add_row(**row)

    result.summary.update(points=len(points), rel_tol=rel_tol, **counts)
    return result


def _sweep_monte_carlo(cfg: ExperimentConfig, model, closed: Recurrence, block: int, caps: List[int],
                       progress: Progress, result: ResultSet, where: str) -> Dict:
    """
    Monte Carlo columns of one interior sweep point, from blocks block, block + 1, ...

    A positive recurrent point reruns with twice the replicas and its mean
    duration must move by less than Config.STABILITY_REL_CHANGE. A null recurrent
    point with several GRID_STEP_CAP values must show capped means that grow
    strictly with the cap.
    """
    b = cfg.budget
    kernel, schedule = model
    stats = _mc_excursions(cfg, kernel, schedule, b.step_cap, block, progress, f"mc {where}")
    s = stats.to_dict()
    out = dict(replicas=stats.replicas, censored=stats.censored, mc_mean_duration=s["mean_duration"],
               mc_stderr_duration=s["stderr_duration"], mc_capped_mean_duration=s["capped_mean_duration"])

    if closed is Recurrence.POSITIVE_RECURRENT:
        extra = _mc_excursions(cfg, kernel, schedule, b.step_cap, block + 1, progress, f"mc x2 {where}")
        first = s["mean_duration"]
        doubled = stats.merge(extra).to_dict()["mean_duration"]
        out.update(mc_doubled_mean_duration=doubled)
        if first is not None and doubled:
            change = abs(doubled - first) / abs(doubled)
            out.update(mc_mean_change=change)
            if stats.censor_rate <= Config.CENSOR_ASSERT_MAX and change >= Config.STABILITY_REL_CHANGE:
                result.fail(f"({where}): mean duration moved by {change:.1%} when the replicas doubled")
    elif closed is Recurrence.NULL_RECURRENT and len(caps) > 1:
        capped = [_mc_excursions(cfg, kernel, schedule, cap, block + 2 + j, progress, f"mc cap={cap} {where}")
                  .to_dict()["capped_mean_duration"] for j, cap in enumerate(caps)]
        grows = _strictly_increasing(capped)
        out.update(mc_capped_growth=grows)
        if not grows:
            result.fail(f"({where}): capped mean duration does not grow with the step cap")
    return out


# ========== UNIFORM LIMIT ==========

def uniform_limit_test(cfg: ExperimentConfig, progress: Progress = None) -> ResultSet:
    """
    Occupation of the right half-axis by the infinitely impatient simple random walk
    against Uniform[0, 1].

    The exact range-chain law must first match the coin-turning law for every
    n <= Config.EXACT_N_MAX. The Constant-schedule walk serves as a negative
    control: its occupation must fail the same KS bound and lie nearer the arcsine
    law than Uniform[0, 1]. KS distances must decrease along GRID_N.

    Raises:
        ConfigError: n below Config.UNIFORM_MIN_N or too few replicas
        GateFailure: the exact laws differ
    """
    result = ResultSet("uniform-test")
    b, tol = cfg.budget, cfg.tol
    ns = grid_values(cfg.grid.n, b.n)
    if min(ns) < Config.UNIFORM_MIN_N:
        raise ConfigError(f"uniform-test needs n >= {Config.UNIFORM_MIN_N}, got {min(ns)}")
    if b.replicas < Config.UNIFORM_MIN_REPLICAS:
        raise ConfigError(f"uniform-test needs >= {Config.UNIFORM_MIN_REPLICAS} replicas, got {b.replicas}")

    gap = equivalence_gap(Config.EXACT_N_MAX)
    result.summary["gate_tv"] = gap
    if not gap < Config.GATE_TV_TOLERANCE:
        raise GateFailure(f"range-chain and coin-turning laws differ by total variation {gap:.3e} "
                          f"for some n <= {Config.EXACT_N_MAX}")

    statistics = []
    for block, n in enumerate(ns):
        tasks = [(n, count, contract) for contract, count in _streams(cfg, b.replicas, block)]
        samples = np.concatenate(run_tasks(_occupation_task, tasks, b.workers, progress, f"n={n}"))
        ks = ks_uniform(samples)
        passed = ks.passes(tol.ks)
        statistics.append(ks.statistic)
        result.add_row(role="range_chain", n=n, replicas=ks.samples, ks_statistic=ks.statistic,
                       p_value=ks.pvalue, tolerance=tol.ks, passed=passed)
        if not passed:
            result.fail(f"n={n}: KS distance {ks.statistic:.4f} to Uniform[0,1] exceeds {tol.ks}")

    control_n = ns[0]
    control_replicas = b.control_replicas or min(b.replicas, Config.UNIFORM_MIN_REPLICAS)
    tasks = [(control_n, count, contract) for contract, count in _streams(cfg, control_replicas, len(ns))]
    occupation = np.concatenate(run_tasks(_srw_occupation_task, tasks, b.workers, progress, "control"))
    control, arcsine = ks_uniform(occupation), ks_arcsine(occupation)
    separated = not control.passes(tol.ks)
    nearer_arcsine = arcsine.statistic < control.statistic
    result.add_row(role="srw_control", n=control_n, replicas=control.samples,
                   ks_statistic=control.statistic, p_value=control.pvalue, tolerance=tol.ks,
                   passed=separated and nearer_arcsine, arcsine_ks_statistic=arcsine.statistic)
    if not separated:
        result.fail(f"negative control passed the KS bound ({control.statistic:.4f} <= {tol.ks})")
    if not nearer_arcsine:
        result.fail(f"negative control is no nearer the arcsine law ({arcsine.statistic:.4f}) "
                    f"than Uniform[0,1] ({control.statistic:.4f})")

    decreasing = all(later < a for a, later in zip(statistics, statistics[1:]))
    result.summary["ks_decreasing"] = decreasing
    if not decreasing:
        result.fail(f"KS distances {[round(s, 5) for s in statistics]} do not decrease as n grows")
    return result


# ========== CLASSIFICATION ==========

def classify_config(cfg: ExperimentConfig, progress: Progress = None) -> Verdict3:
    """
    Recurrence of the impatient walk a config describes.

    Closed forms come first (Lamperti and log-Lamperti drifts, space-dependent
    costs on Z and Z2, simple random walk on Z and Z2), then certified series (orbit bound,
    excursion time, positive recurrence to the right). A Monte Carlo trend of
    capped mean durations is only ever reported as Inconclusive.
    """
    b, tol = cfg.budget, cfg.tol
    kernel = build_kernel(cfg)

    if cfg.schedule.kind == SPACE_SCHEDULE:
        graph = "Z" if kernel.dim == 1 else "Z2"
        sv = space_criterion(graph, cfg.schedule.param, tol=tol.abs)
        return Verdict3(sv.recurrence, Provenance.CLOSED_FORM, {"method": "space_criterion", **sv.to_dict()})

    schedule = build_schedule(cfg)
    sched_class = _schedule_class(schedule)
    detail: Dict = {"schedule_class": sched_class.to_dict() if sched_class else None}

    if isinstance(kernel, LatticeKernel) and kernel.dim == 2:
        # simple random walk on Z2: null recurrent for every schedule
        return Verdict3(Recurrence.NULL_RECURRENT, Provenance.CLOSED_FORM,
                        {**detail, "method": "simple_random_walk", "dim": 2})

    simple = isinstance(kernel, LatticeKernel) or (
        isinstance(kernel, NearestNeighborKernel) and kernel.symmetric and kernel.right.kind == "Zero")
    if simple:
        # c = 0: null recurrent for every schedule
        alpha = schedule.param if schedule.kind == "Power" else 1.0
        return Verdict3(lamperti_phase(0.0, alpha), Provenance.CLOSED_FORM,
                        {**detail, "method": "lamperti_phase", "c": 0.0})

    if isinstance(kernel, NearestNeighborKernel) and kernel.symmetric:
        if kernel.right.kind == "Lamperti" and schedule.kind == "Power":
            c, alpha = kernel.right.param, schedule.param
            return Verdict3(lamperti_phase(c, alpha), Provenance.CLOSED_FORM,
                            {**detail, "method": "lamperti_phase", "c": c, "alpha": alpha,
                             "boundary": is_lamperti_boundary(c, alpha, tol.boundary)})
        if kernel.right.kind == "LogLamperti" and sched_class is not None:
            found = log_lamperti_phase(kernel.right.param, sched_class)
            if found is not Recurrence.INCONCLUSIVE:
                return Verdict3(found, Provenance.CLOSED_FORM,
                                {**detail, "method": "log_lamperti_phase", "d": kernel.right.param})

    if isinstance(kernel, OrbitKernel):
        if sched_class is not None and sched_class.kind in _FINITE_TOTAL:
            bound = orbit_excursion_bound(tol=tol.abs)
            detail.update(method="orbit_excursion_bound", expected_M_bound=bound.to_dict())
            if bound.converged:
                # E tau <= S * E M
                return Verdict3(Recurrence.POSITIVE_RECURRENT, Provenance.SERIES, detail)
        return _monte_carlo_trend(cfg, kernel, schedule, detail, progress)

    if isinstance(kernel, NearestNeighborKernel):
        if not (underlying_recurrent(kernel.right) and underlying_recurrent(kernel.left)):
            return Verdict3(Recurrence.TRANSIENT_UNDERLYING, Provenance.SERIES,
                            {**detail, "method": "underlying_recurrence"})
        verdict = excursion_time(kernel, schedule, b.m_horizon, b.j_horizon, tol.abs, tol.rel)
        detail.update(method="excursion_time", excursion_time=verdict.to_dict())
        full_line = kernel.domain is Domain.FULL_LINE
        if full_line:
            detail["two_sided_exit"] = {"n": b.exit_n, **two_sided_exit(kernel, schedule, b.exit_n, tol.abs).to_dict()}
        found = series_recurrence(verdict)
        if found is not Recurrence.INCONCLUSIVE:
            return Verdict3(found, Provenance.SERIES, detail)
        if full_line:
            prr = prr_criterion(kernel, schedule, b.m_horizon, tol.abs, rel_tol=tol.rel)
            detail.update(method="prr_criterion", prr=prr.to_dict())
            if prr.diverged:
                return Verdict3(Recurrence.NULL_RECURRENT, Provenance.SERIES, detail)

    return _monte_carlo_trend(cfg, kernel, schedule, detail, progress)


def _monte_carlo_trend(cfg: ExperimentConfig, kernel, schedule, detail: Dict, progress: Progress) -> Verdict3:
    """Capped mean durations across step caps; evidence only, never a hard verdict."""
    b = cfg.budget
    if b.replicas < 1:
        return Verdict3(Recurrence.INCONCLUSIVE, Provenance.SERIES, {**detail, "method": "none"})
    caps = sorted(grid_values(cfg.grid.step_cap, b.step_cap))
    trend = []
    for block, cap in enumerate(caps):
        stats = _mc_excursions(cfg, kernel, schedule, cap, block, progress, f"cap={cap}")
        trend.append({"step_cap": cap, "capped_mean_duration": stats.capped.mean,
                      "censor_rate": stats.censor_rate})
    growing = len(trend) > 1 and _strictly_increasing([t["capped_mean_duration"] for t in trend])
    return Verdict3(Recurrence.INCONCLUSIVE, Provenance.MONTE_CARLO,
                    {**detail, "method": "monte_carlo_trend", "trend": trend, "growing": growing})


_METHOD_KEYS = {
    "orbit_excursion_bound": "expected_M_bound",
    "excursion_time": "excursion_time",
    "prr_criterion": "prr",
}


def run_classify(cfg: ExperimentConfig, progress: Progress = None) -> ResultSet:
    result = ResultSet("classify")
    verdict = classify_config(cfg, progress)
    kernel = build_kernel(cfg)
    if cfg.schedule.kind == SPACE_SCHEDULE:
        schedule_text = f"Space({cfg.schedule.param!r})"
    else:
        schedule_text = build_schedule(cfg).describe()
    method = verdict.detail.get("method")
    source = verdict.detail if method == "space_criterion" else verdict.detail.get(_METHOD_KEYS.get(method), {})
    value, tail = source.get("value"), source.get("tail_estimate")
    result.add_row(kernel=describe_kernel(kernel), schedule=schedule_text,
                   recurrence=verdict.recurrence.value, provenance=verdict.provenance.value,
                   method=method, value=value, tail_estimate=tail, tail_method=source.get("tail_method"))
    result.summary.update(verdict.to_dict())
    return result


# ========== EXCURSIONS ==========

def run_excursions(cfg: ExperimentConfig, progress: Progress = None) -> ResultSet:
    """
    Monte Carlo excursion statistics at one or more step caps, checked against the
    certified series where they exist:

    - completed strongly impatient excursions satisfy M <= duration <= S*M exactly;
    - P(M >= m) stays within the binomial band of the hitting probability;
    - mean duration and mean M match their series values within TOL_SIGMAS
      (when few excursions were censored);
    - capped means grow strictly with the cap when the series diverges.
    """
    result = ResultSet("excursions")
    b, tol = cfg.budget, cfg.tol
    if b.replicas < 1:
        raise ConfigError("excursions needs BUDGET_REPLICAS >= 1")
    kernel = build_kernel(cfg)
    schedule = build_schedule(cfg)
    caps = sorted(grid_values(cfg.grid.step_cap, b.step_cap))

    tau = m_value = reference = None
    if isinstance(kernel, NearestNeighborKernel):
        tau = excursion_time(kernel, schedule, b.m_horizon, b.j_horizon, tol.abs, tol.rel)
        right = expected_M(kernel.right, b.m_horizon, tol.abs, tol.rel)
        if kernel.domain is Domain.FULL_LINE and not kernel.symmetric:
            left = expected_M(kernel.left, b.m_horizon, tol.abs, tol.rel)
            m_value = combine_verdicts([right, left], [0.5, 0.5])
        else:
            m_value = right
        reference = _hitting_reference(kernel, max(b.tail_m, 1))
        result.summary.update(excursion_time=tau.to_dict(), expected_M=m_value.to_dict())

    capped = []
    for block, cap in enumerate(caps):
        stats = _mc_excursions(cfg, kernel, schedule, cap, block, progress, f"cap={cap}")
        s = stats.to_dict()
        comparable = stats.censor_rate <= Config.CENSOR_ASSERT_MAX
        z_tau = _z_score(s["mean_duration"], s["stderr_duration"], tau.value if tau else None)
        z_m = _z_score(s["mean_M"], s["stderr_M"], m_value.value if m_value else None)
        tail_violations = None
        if reference is not None:
            top = min(len(reference), stats.hist_max - 1)
            tail_violations = 0
            for m in range(1, top + 1):
                p = float(reference[m - 1])
                if abs(stats.survival(m) - p) > binomial_band(p, stats.replicas, tol.sigmas):
                    tail_violations += 1
            if tail_violations:
                result.fail(f"cap={cap}: P(M >= m) outside the {tol.sigmas:g} sigma band for "
                            f"{tail_violations} values of m")
        if stats.sandwich_violations:
            result.fail(f"cap={cap}: {stats.sandwich_violations} excursions break M <= duration <= S*M")
        if comparable and z_tau is not None and abs(z_tau) > tol.sigmas:
            result.fail(f"cap={cap}: mean duration is {z_tau:+.2f} standard errors from the series value")
        if comparable and z_m is not None and abs(z_m) > tol.sigmas:
            result.fail(f"cap={cap}: mean M is {z_m:+.2f} standard errors from the series value")
        capped.append(s["capped_mean_duration"])
        result.add_row(step_cap=cap, replicas=stats.replicas, censored=stats.censored,
                       mean_duration=s["mean_duration"], stderr_duration=s["stderr_duration"],
                       capped_mean_duration=s["capped_mean_duration"], mean_M=s["mean_M"],
                       stderr_M=s["stderr_M"], analytic_duration=tau.value if tau else None,
                       analytic_M=m_value.value if m_value else None, z_duration=z_tau, z_M=z_m,
                       sandwich_violations=s.get("sandwich_violations"),
                       tail_violations=tail_violations)

    if tau is not None and tau.diverged and len(caps) > 1 and not _strictly_increasing(capped):
        result.fail("capped mean duration does not grow with the step cap although the series diverges")

    if b.successive > 0:
        renewal = renewal_check(cfg, kernel, schedule, len(caps))
        result.summary["renewal"] = renewal["starts"]
        for message in renewal["failures"]:
            result.fail(message)
    return result


def renewal_check(cfg: ExperimentConfig, kernel, schedule: PassageSchedule, block: int,
                  excursions: int = 6) -> Dict:
    """
    Mean durations of the first `excursions` successive excursions of one walk,
    from the origin and from BUDGET_START.

    For non-ageing schedules every later excursion is charged at most what a fresh
    one is, so each mean must stay below the first one within TOL_SIGMAS.
    """
    b, tol = cfg.budget, cfg.tol
    starts = [kernel.origin]
    if isinstance(kernel, NearestNeighborKernel) and b.start != kernel.origin:
        starts.append(b.start)
    ageing = schedule.values(np.arange(1, 64)).max() > 1.0
    out = {"starts": [], "failures": []}
    for k, start in enumerate(starts):
        rng = make_rng(cfg.seed, (block + k) * b.streams)
        moments = [StreamingMoments() for _ in range(excursions)]
        for _ in range(b.successive):
            for i, record in enumerate(successive_excursions(kernel, schedule, excursions, rng,
                                                             b.step_cap, start)):
                if not record.censored:
                    moments[i].update(record.duration)
        means = [m.to_dict() for m in moments]
        out["starts"].append({"start": start, "excursions": means})
        if ageing or moments[0].n < 2:
            continue
        first = moments[0]
        for i, m in enumerate(moments[1:], 1):
            if m.n < 2:
                continue
            spread = math.hypot(first.stderr, m.stderr)
            if m.mean > first.mean + tol.sigmas * spread:
                out["failures"].append(f"start={start}: excursion {i} mean {m.mean:.4g} exceeds "
                                       f"the first excursion's {first.mean:.4g}")
    return out


# ========== RANGE ==========

def _merge_traces(traces: List[RangeTrace]) -> RangeTrace:
    first = traces[0]

    def stack(name):
        parts = [getattr(t, name) for t in traces]
        return None if any(p is None for p in parts) else np.concatenate(parts)

    return RangeTrace(first.checkpoints, stack("distinct"), stack("truncated"), stack("span"),
                      stack("right"), first.total)


def run_range(cfg: ExperimentConfig, progress: Progress = None) -> ResultSet:
    """
    R_t on a checkpoint grid over many trajectories, with the per-path bounds
    floor(t/S) <= R_t (strong impatience) and R_t <= t + 1. ZeroTail schedules on
    the half line must give R_t = floor(t) exactly; the range-chain trace yields
    that by construction, so it is checked on walks run on the crossing clock.
    """
    result = ResultSet("range")
    b = cfg.budget
    paths = b.paths or b.replicas
    if paths < 1:
        raise ConfigError("range needs BUDGET_PATHS (or BUDGET_REPLICAS) >= 1")
    kernel = build_kernel(cfg)
    schedule = build_schedule(cfg)
    grid = checkpoint_grid(b.t_max, b.checkpoints)
    tasks = [(kernel, schedule, b.t_max, grid, n, b.step_cap, contract)
             for contract, n in _streams(cfg, paths, 0)]
    trace = _merge_traces(run_tasks(_range_task, tasks, b.workers, progress, "range"))

    observed = trace.observed
    for j, t in enumerate(trace.checkpoints):
        col = trace.distinct[observed[:, j], j]
        lower = math.floor(t / trace.total) if trace.total else None
        result.add_row(
            t=float(t), paths=len(trace.distinct), observed=int(col.size),
            mean_R=float(np.mean(col)) if col.size else None,
            min_R=int(col.min()) if col.size else None,
            max_R=int(col.max()) if col.size else None,
            mean_R_over_t=float(np.mean(col)) / t if col.size and t > 0 else None,
            lower_bound=lower,
            lower_violations=int(np.count_nonzero(col < lower)) if lower is not None else 0,
            upper_violations=int(np.count_nonzero(col > t + 1.0)),
            mean_right=float(np.mean(trace.right[observed[:, j], j]))
            if trace.right is not None and col.size else None,
        )

    low, high = trace.lower_bound_violations(), trace.upper_bound_violations()
    if low:
        result.fail(f"{low} samples fall below floor(t/S)")
    if high:
        result.fail(f"{high} samples exceed t + 1")
    if schedule.infinitely_impatient and isinstance(kernel, NearestNeighborKernel) \
            and kernel.domain is Domain.HALF_LINE:
        checked = min(paths, Config.RANGE_CLOCK_PATHS)
        result.summary["clock_paths"] = _check_floor_range(cfg, kernel, schedule, grid, checked, progress, result)
    result.summary.update(paths=len(trace.distinct), truncated=int(trace.truncated.sum()),
                          S=trace.total, lower_violations=low, upper_violations=high)
    return result


def _check_floor_range(cfg: ExperimentConfig, kernel, schedule: PassageSchedule, grid: np.ndarray,
                       paths: int, progress: Progress, result: ResultSet) -> int:
    """
    Re-simulate `paths` half-line walks step by step on the crossing clock (stream
    block 1) and require R_t = floor(t) at every checkpoint they reach.
    """
    b = cfg.budget
    tasks = [(kernel, schedule, b.t_max, grid, n, b.step_cap, contract)
             for contract, n in _streams(cfg, paths, 1)]
    trace = _merge_traces(run_tasks(_clock_range_task, tasks, b.workers, progress, "clock"))
    exact = np.floor(trace.checkpoints)[None, :]
    off = int(np.count_nonzero(trace.observed & (trace.distinct != exact)))
    if off:
        result.fail(f"{off} clock-simulated samples differ from floor(t) under a ZeroTail schedule")
    if trace.truncated.any():
        result.fail(f"{int(trace.truncated.sum())} clock-simulated paths hit the step cap before t_max")
    return len(trace.distinct)


# ========== SPACE-DEPENDENT IMPATIENCE ==========

def run_space(cfg: ExperimentConfig, progress: Progress = None) -> ResultSet:
    """
    Simple random walk on Z or Z2 with s(e) = (1 + ||e||)^-alpha: the certified
    edge sum against Monte Carlo excursion durations, per step cap.

    Mean visits to every core vertex must match E xi(u) = 1. The TOL_SIGMAS level
    holds for the whole core window, so each vertex is held to the stricter
    family_sigmas threshold.
    """
    result = ResultSet("space")
    b, tol, sp = cfg.budget, cfg.tol, cfg.space
    if b.replicas < 1:
        raise ConfigError("space needs BUDGET_REPLICAS >= 1")
    verdict = space_criterion(sp.graph, sp.alpha, tol=tol.abs)
    analytic = verdict.edge_sum.value
    target = expected_visits(sp.graph)
    caps = sorted(grid_values(cfg.grid.step_cap, b.step_cap))

    capped = []
    for block, cap in enumerate(caps):
        tasks = [(sp.graph, sp.alpha, n, cap, contract, sp.core_radius, b.batch)
                 for contract, n in _streams(cfg, b.replicas, block)]
        merged = None
        for stats in run_tasks(_space_task, tasks, b.workers, progress, f"cap={cap}"):
            merged = stats if merged is None else merged.merge(stats)
        s = merged.to_dict()
        z = _z_score(s["mean_duration"], s["stderr_duration"], analytic)
        if z is not None and merged.censor_rate <= Config.CENSOR_ASSERT_MAX and abs(z) > tol.sigmas:
            result.fail(f"cap={cap}: mean duration is {z:+.2f} standard errors from the edge sum")
        visits, visit_z = merged.visit_means(), np.abs(merged.visit_z(target))
        measured = visit_z[np.isfinite(visit_z)]
        limit = family_sigmas(tol.sigmas, max(measured.size, 1))
        off = int(np.count_nonzero(measured > limit))
        if off and merged.censor_rate <= Config.CENSOR_ASSERT_MAX:
            result.fail(f"cap={cap}: mean visits of {off} core vertices lie more than {limit:.2f} "
                        f"standard errors from {target:g}")
        capped.append(s["capped_mean_duration"])
        result.add_row(graph=sp.graph, alpha=sp.alpha, step_cap=cap, replicas=merged.replicas,
                       censored=merged.censored, mean_duration=s["mean_duration"],
                       stderr_duration=s["stderr_duration"],
                       capped_mean_duration=s["capped_mean_duration"], analytic_duration=analytic,
                       z_duration=z, mean_core_visits=s["mean_core_visits"],
                       max_core_visit_gap=float(np.max(np.abs(visits - target))) if visits.size else None,
                       max_core_visit_z=float(measured.max()) if measured.size else None,
                       core_visit_violations=off, mean_core_crossings=s["mean_core_crossings"],
                       expected_crossings=s["expected_crossings"])

    if verdict.recurrence is Recurrence.NULL_RECURRENT and len(caps) > 1 and not _strictly_increasing(capped):
        result.fail("capped mean duration does not grow with the step cap although the edge sum diverges")
    result.summary.update(verdict.to_dict())
    return result


# ========== TRACE ==========

def write_walk_trace(cfg: ExperimentConfig, path: str) -> str:
    """Write BUDGET_TRACE_STEPS steps of one walk (step, vertex, T) from its own stream."""
    if cfg.experiment not in ("classify", "excursions", "range") or cfg.schedule.kind == SPACE_SCHEDULE:
        raise ConfigError("--trace needs an experiment with a kernel and a crossing-count schedule")
    walk = TimedWalk(build_kernel(cfg), build_schedule(cfg))
    rng = make_rng(cfg.seed, Config.TRACE_STREAM)
    for _ in range(cfg.budget.trace_steps):
        walk.advance(rng)
    write_trace(path, walk)
    return path


EXPERIMENT_RUNNERS = {
    "phase-sweep": phase_sweep,
    "uniform-test": uniform_limit_test,
    "classify": run_classify,
    "excursions": run_excursions,
    "range": run_range,
    "space": run_space,
}
