"""Equilibria and prize design for rank-order contests with a target group."""
from .design import (
    DesignResult,
    GammaWeights,
    compare_schemes,
    general_design_loss_ratio,
    objective_for_gamma,
    optimal_general_design,
    optimal_group_design,
)
from .dist import (
    Polynomial,
    PiecewiseSurvival,
    PopulationModel,
    Power,
    ResidualMixture,
    Segment,
    Uniform,
    distribution_from_dict,
)
from .equilibrium import ContestSpec, Equilibrium, Group, PrizeSchedule, solve_equilibrium
from .errors import ContestError

__version__ = "0.1.0"
