from services.analytic.network import (
    DriftFunctionals,
    HittingProfile,
    drift_functionals,
    excursion_time,
    expected_M,
    hitting_profile,
    orbit_excursion_bound,
    resistors,
)
from services.analytic.phases import (
    SpaceVerdict,
    is_lamperti_boundary,
    lamperti_phase,
    log_lamperti_phase,
    space_criterion,
)
from services.analytic.ruin import LineNetwork, exit_time_breakdown, prr_criterion, two_sided_exit
