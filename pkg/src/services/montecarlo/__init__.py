from services.montecarlo.excursions import (
    ExcursionStats,
    excursion_stats,
    run_excursion,
    successive_excursions,
)
from services.montecarlo.occupation import (
    RangeChain,
    coin_turning,
    coin_turning_distribution,
    equivalence_gap,
    exact_small_n,
    inf_imp_occupation,
    range_chain_distribution,
    srw_occupation,
)
from services.montecarlo.rng import RngContract, make_rng, split_replicas, stream_contracts
from services.montecarlo.space import SpaceExcursionStats, space_dependent_excursion
from services.montecarlo.spread import RangeTrace, clock_range_trace, range_trace
from services.montecarlo.stats import KsResult, StreamingMoments, ks_arcsine, ks_uniform

__all__ = [
    "ExcursionStats",
    "KsResult",
    "RangeChain",
    "RangeTrace",
    "RngContract",
    "SpaceExcursionStats",
    "StreamingMoments",
    "clock_range_trace",
    "coin_turning",
    "coin_turning_distribution",
    "equivalence_gap",
    "exact_small_n",
    "excursion_stats",
    "inf_imp_occupation",
    "ks_arcsine",
    "ks_uniform",
    "make_rng",
    "range_chain_distribution",
    "range_trace",
    "run_excursion",
    "split_replicas",
    "srw_occupation",
    "space_dependent_excursion",
    "stream_contracts",
    "successive_excursions",
]
