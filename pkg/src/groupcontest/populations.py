"""Ready-made two-group populations whose overall ability distribution is uniform.

Each builder fixes the target-group distribution F and a share ``mu`` and
derives the non-target distribution G so that ``mu F + (1 - mu) G`` is the
identity CDF.  They span the interesting cases for prize design: a target
group that is weaker than the population, one that is stronger, and two with
the population mean but smaller or larger spread.
"""
from __future__ import annotations

from fractions import Fraction

from .dist import Polynomial, PiecewiseSurvival, PopulationModel, ResidualMixture, Segment, Uniform

__all__ = [
    "weaker_target",
    "stronger_target",
    "concentrated_target",
    "dispersed_target",
    "uniform_complement",
]


def uniform_complement(target, mu: float) -> PopulationModel:
    """Population with target share ``mu`` and G chosen so that H is uniform."""
    return PopulationModel(mu, target, ResidualMixture(Uniform(), target, mu))


def weaker_target(n: int) -> PopulationModel:
    """F is the minimum of ``n - 1`` uniforms and ``mu = 1/(n-1)``."""
    if n < 3:
        raise ValueError("weaker_target needs n >= 3")
    target = PiecewiseSurvival((Segment(0.0, ((1.0, n - 1),), "1-x"),))
    return uniform_complement(target, 1.0 / (n - 1))


def stronger_target() -> PopulationModel:
    """F puts no mass below 3/4 and first-order dominates the population; ``mu = 1/8``."""
    target = PiecewiseSurvival((
        Segment(0.0, ((1.0, 0),)),
        Segment(0.75, ((16.0, 2),), "1-x"),
        Segment(15 / 16, ((1.0, 1),), "1-x"),
    ))
    return uniform_complement(target, 1 / 8)


def concentrated_target() -> PopulationModel:
    """F = 3v^2 - 2v^3 (mean 1/2, variance 1/20) with ``mu = 2/3``."""
    return PopulationModel(2 / 3, Polynomial((0, 0, 3, -2)), Polynomial((0, 3, -6, 4)))


def dispersed_target() -> PopulationModel:
    """Mean-1/2 F with variance 6703/55296 > 1/12 and ``mu = 1/4``."""
    slope = float(Fraction(48, 31))
    target = PiecewiseSurvival((
        Segment(0.0, ((1.0, 0), (-slope, 1))),
        Segment(31 / 96, ((0.5, 0),)),
        Segment(0.75, ((8.0, 2),), "1-x"),
        Segment(7 / 8, ((1.0, 1),), "1-x"),
    ))
    return uniform_complement(target, 1 / 4)
