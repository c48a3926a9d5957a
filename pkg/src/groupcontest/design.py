"""Prize design that maximises the expected output of the target group.

With general prizes the designer's problem is linear in the weights
``gamma_j = j (w_j - w_{j+1})``, so an optimum splits the budget equally
among the top ``k`` ranks.  The best ``k`` is the rank whose order-statistic
density lines up best with the kernel ``x (1 - F) / (1 - H)``.  With
target-only prizes, winner-take-all is optimal; we certify that numerically
instead of assuming it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dist import AbilityDistribution, Power, PopulationModel
from .errors import CertificationFailure, DegenerateDistribution, DomainError
from .numerics import find_root, integrate
from .orderstats import OrderStatQuery, orderstat_pdf

__all__ = [
    "GammaWeights",
    "DesignKernel",
    "DesignResult",
    "optimal_general_design",
    "general_design_loss_ratio",
    "optimal_group_design",
    "objective_for_gamma",
    "general_rank_objective",
    "group_rank_objective",
    "total_output_per_agent",
    "SchemeComparison",
    "compare_schemes",
    "scheme_outputs_uniform",
    "concentrated_target_cutoff",
]


@dataclass(frozen=True)
class GammaWeights:
    """Mixture weights over "split the budget among the top j" schedules."""

    gamma: tuple

    def __post_init__(self):
        g = tuple(float(x) for x in self.gamma)
        if not g or any(x < 0 for x in g) or abs(sum(g) - 1.0) > 1e-12:
            raise DomainError("gamma must be nonnegative and sum to 1")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def vertex(cls, j: int, n: int):
        g = [0.0] * (n - 1)
        g[j - 1] = 1.0
        return cls(tuple(g))

    @classmethod
    def from_prizes(cls, w):
        """``gamma_j = j (w_j - w_{j+1})`` for a nonincreasing, unit-sum ``w``."""
        w = list(w) + [0.0]
        return cls(tuple(j * (w[j - 1] - w[j]) for j in range(1, len(w) - 1)))

    def prizes(self):
        n = len(self.gamma) + 1
        return [sum(self.gamma[k - 1] / k for k in range(j, n)) for j in range(1, n + 1)]


class DesignKernel:
    """``x (1 - F(x)) / (1 - H(x))`` built from survival functions."""

    def __init__(self, population: PopulationModel):
        self.population = population
        self.knots = population.knots

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        num = x * self.population.target.sf(x)
        den = self.population.mixture_sf(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


@dataclass
class DesignResult:
    k_star: int
    per_j_objective: list
    prize_vector: list
    objective_value: float
    regime: str = "general"
    total_output: float | None = None  # output per agent of either group, general regime only

    def to_dict(self):
        return {"k_star": int(self.k_star), "prizes": [float(p) for p in self.prize_vector],
                "objective": float(self.objective_value),
                "per_j": [float(x) for x in self.per_j_objective]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _check_nondegenerate(population: PopulationModel):
    x = np.linspace(0.0, 1.0, 10_001)[:-1]
    if np.any(np.asarray(population.mixture_sf(x)) <= 0.0):
        raise DegenerateDistribution("1 - H vanishes on an interval below 1")


def _flat(k, n):
    return [1.0 / k if j < k else 0.0 for j in range(n)]


def general_rank_objective(population: PopulationModel, n: int, j: int) -> float:
    """Expected output per target agent when the top ``j`` ranks share a unit budget:
    ``(1/n) <kernel, f^H_{n,j+1}>``."""
    kernel = DesignKernel(population)
    q = OrderStatQuery(n, j + 1)
    pop = population

    def f(x):
        return kernel(x) * orderstat_pdf(q, pop.mixture_cdf(x), pop.mixture_pdf(x))

    return integrate(f, 0.0, 1.0, pop.knots) / n


def _general_objective_direct(population: PopulationModel, n: int, j: int) -> float:
    """Same value as :func:`general_rank_objective`, written as
    ``(1/j) int y (1 - F) f^H_{n-1,j}``; used as a cross-check."""
    q = OrderStatQuery(n - 1, j)
    pop = population

    def f(y):
        return y * pop.target.sf(y) * orderstat_pdf(q, pop.mixture_cdf(y), pop.mixture_pdf(y))

    return integrate(f, 0.0, 1.0, pop.knots) / j


def group_rank_objective(population: PopulationModel, n: int, j: int) -> float:
    """Expected output per target agent when the top ``j`` target agents share a
    unit group budget: ``(1/(mu n)) int y h_{n,j+1}`` with ``h`` the
    order-statistic density of ``mu F + (1 - mu)``."""
    mu = population.mu
    if mu <= 0:
        raise DomainError("group prizes need a target share mu > 0")
    q = OrderStatQuery(n, j + 1)
    pop = population

    def f(y):
        return y * orderstat_pdf(q, pop.shifted_mixture_cdf(y), pop.shifted_mixture_pdf(y))

    return integrate(f, 0.0, 1.0, pop.knots) / (mu * n)


def total_output_per_agent(population: PopulationModel, n: int, j: int) -> float:
    """Expected output of a random agent (either group) under top-``j`` general prizes."""
    q = OrderStatQuery(n, j + 1)
    pop = population
    return integrate(lambda y: y * orderstat_pdf(q, pop.mixture_cdf(y), pop.mixture_pdf(y)),
                     0.0, 1.0, pop.knots) / n


def optimal_general_design(population: PopulationModel, n: int) -> DesignResult:
    if n < 2:
        raise DomainError("design needs n >= 2")
    _check_nondegenerate(population)
    per_j = [general_rank_objective(population, n, j) for j in range(1, n)]
    best = max(per_j)
    k = next(j for j, val in enumerate(per_j, 1) if val == best)
    return DesignResult(k, per_j, _flat(k, n), best, "general",
                        total_output_per_agent(population, n, k))


def general_design_loss_ratio(population: PopulationModel, n: int) -> float:
    """Total output with winner-take-all over total output at the target-optimal cutoff."""
    k = optimal_general_design(population, n).k_star
    return total_output_per_agent(population, n, 1) / total_output_per_agent(population, n, k)


def optimal_group_design(population: PopulationModel, n: int) -> DesignResult:
    """Winner-take-all among target agents, after checking that no other cutoff does better."""
    if n < 2:
        raise DomainError("design needs n >= 2")
    per_j = [group_rank_objective(population, n, j) for j in range(1, n)]
    worst = max(per_j[1:], default=-math.inf) - per_j[0]
    if worst > 1e-9:
        j = int(np.argmax(per_j)) + 1
        raise CertificationFailure(f"top-{j} group prizes beat winner-take-all by {worst:.3e}")
    return DesignResult(1, per_j, _flat(1, n), per_j[0], "group")


def objective_for_gamma(population: PopulationModel, n: int, gamma: GammaWeights,
                        regime: str = "general") -> float:
    """Expected output per target agent under the schedule encoded by ``gamma``."""
    if len(gamma.gamma) != n - 1:
        raise DomainError(f"gamma needs {n - 1} entries, got {len(gamma.gamma)}")
    rank_value = {"general": general_rank_objective, "group": group_rank_objective}[regime]
    return sum(g * rank_value(population, n, j) for j, g in enumerate(gamma.gamma, 1) if g)


def scheme_outputs_uniform(n: int, mu: float):
    """Closed-form per-target-agent outputs with uniform abilities in both groups:
    A (general winner-take-all), B (group winner-take-all), C (group prize of mu)."""
    a = (n - 1) / (n * (n + 1))
    q = 1.0 - mu
    b = ((n - 1) - q * (n + 1) + q ** n * (2 * q + (n + 1) * mu)) / (n * (n + 1) * mu ** 2)
    return a, b, mu * b


@dataclass
class SchemeComparison:
    n: int
    mu: np.ndarray
    general: np.ndarray
    group: np.ndarray
    scaled_group: np.ndarray
    crossing: float | None
    method: str

    def rows(self):
        return list(zip(self.mu.tolist(), self.general.tolist(), self.group.tolist(),
                        self.scaled_group.tolist()))


def _is_uniform(d: AbilityDistribution) -> bool:
    return isinstance(d, Power) and d.s == 1.0


def compare_schemes(n: int, mu_grid, F: AbilityDistribution, G: AbilityDistribution,
                    method: str = "auto") -> SchemeComparison:
    """Per-target-agent output of schemes A, B and C across ``mu_grid``.

    ``method`` is ``"closed"`` (uniform F and G only), ``"quadrature"`` or
    ``"auto"``.  The A/B crossing is located by bisection between the first
    pair of adjacent grid points where ``B - A`` changes sign.
    """
    mus = np.asarray(mu_grid, dtype=float)
    if np.any((mus <= 0) | (mus > 1)):
        raise DomainError("mu values must lie in (0, 1]")
    if method == "auto":
        method = "closed" if _is_uniform(F) and _is_uniform(G) else "quadrature"
    if method == "closed" and not (_is_uniform(F) and _is_uniform(G)):
        raise DomainError("closed forms need uniform F and G")

    def at(mu):
        if method == "closed":
            return scheme_outputs_uniform(n, mu)
        pop = PopulationModel(float(mu), F, G)
        a = general_rank_objective(pop, n, 1)
        b = group_rank_objective(pop, n, 1)
        return a, b, mu * b

    vals = np.array([at(m) for m in mus])
    diff = vals[:, 1] - vals[:, 0]
    crossing = None
    for i in range(len(mus) - 1):
        if diff[i] == 0.0:
            crossing = float(mus[i])
            break
        if diff[i] * diff[i + 1] < 0:
            crossing = find_root(lambda m: at(m)[1] - at(m)[0], mus[i], mus[i + 1])
            break
    return SchemeComparison(n, mus, vals[:, 0], vals[:, 1], vals[:, 2], crossing, method)


def concentrated_target_cutoff(n: int) -> float:
    """Real-valued optimal cutoff for the population of
    :func:`groupcontest.populations.concentrated_target`; the integer optimum is
    its floor or ceiling."""
    return 5 * n / 6 - math.sqrt(7 * n * n + 30 * n + 39) / 6 + 0.5
