"""Walk simulation, Green functions, hitting probabilities and Green balls."""

from ..estimate import Estimate
from ..walks import Trajectory, simulate
from .growth import BallCount, GrowthEstimate, green_ball_count, log_volume_growth, word_growth_counts
from .hitting import escape_tail_bound, first_hitting_times, hit_fractions, monte_carlo_hitting, monte_carlo_visits
from .lattice import (
    HeatKernelReport,
    LatticeDPOracle,
    LatticeFourierOracle,
    first_passage_probability,
    heat_kernel_decay,
)
from .properties import (
    AxiomReport,
    FirstMoment,
    IdentityReport,
    green_first_moment,
    green_identity_sweep,
    green_zero_set,
    line_points,
    metric_axiom_sweep,
    random_elements,
)
from .oracles import (
    METHODS,
    GreenOracle,
    LineOracle,
    MethodUnavailable,
    MonteCarloOracle,
    RecurrentWalkError,
    TreeOracle,
    default_horizon,
    green_distance,
    green_function,
    hitting_prob,
    make_oracle,
)

__all__ = [
    "AxiomReport",
    "BallCount",
    "Estimate",
    "FirstMoment",
    "GreenOracle",
    "GrowthEstimate",
    "HeatKernelReport",
    "IdentityReport",
    "LatticeDPOracle",
    "LatticeFourierOracle",
    "LineOracle",
    "METHODS",
    "MethodUnavailable",
    "MonteCarloOracle",
    "RecurrentWalkError",
    "Trajectory",
    "TreeOracle",
    "default_horizon",
    "escape_tail_bound",
    "first_hitting_times",
    "first_passage_probability",
    "green_ball_count",
    "green_distance",
    "green_first_moment",
    "green_function",
    "green_identity_sweep",
    "green_zero_set",
    "heat_kernel_decay",
    "hit_fractions",
    "hitting_prob",
    "line_points",
    "log_volume_growth",
    "make_oracle",
    "metric_axiom_sweep",
    "monte_carlo_hitting",
    "monte_carlo_visits",
    "random_elements",
    "simulate",
    "word_growth_counts",
]
