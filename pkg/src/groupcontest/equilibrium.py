"""Symmetric Bayes-Nash equilibria of two-group rank-order contests.

Three regimes are covered:

* general prizes only -- both groups play the same strategy, an integral of
  order-statistic densities of the population mixture ``H = mu F + (1-mu) G``;
* target-group prizes only -- the target group competes against the shifted
  mixture ``mu F + (1 - mu)`` and the non-target group produces nothing;
* both prize types -- solved through the link ``k = alpha^{-1} o beta``, which
  obeys a first-order ODE; ``beta`` is integrated alongside ``k`` and ``alpha``
  is recovered as ``beta o k^{-1}`` below ``k(1)`` and by direct integration
  above it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp as scipy_solve_ivp

from .dist import AbilityDistribution, PopulationModel
from .errors import (
    InvalidRegime,
    NonMonotone,
    OdeStartupFailure,
    StiffnessError,
    StitchingError,
)
from .numerics import (
    MonotoneTable,
    StepControl,
    StepRejected,
    cumulative_integrate,
    integrate,
    solve_ivp,
)
from .orderstats import OrderStatQuery, orderstat_pdf, psi_kernel

__all__ = [
    "Group",
    "PrizeSchedule",
    "ContestSpec",
    "TabulatedStrategy",
    "LinkFunction",
    "MixedOdeContext",
    "Equilibrium",
    "general_equilibrium",
    "group_equilibrium",
    "mixed_equilibrium",
    "solve_equilibrium",
    "expected_group_output",
]

DEFAULT_GRID = 2048


class Group(enum.Enum):
    TARGET = "target"
    NONTARGET = "nontarget"


def _pad(values, n, name):
    vals = [float(x) for x in values]
    if len(vals) > n:
        if any(v != 0 for v in vals[n:]):
            raise ValueError(f"{name} prizes list has {len(vals)} entries for n={n}")
        vals = vals[:n]
    return tuple(vals + [0.0] * (n - len(vals)))


@dataclass(frozen=True)
class PrizeSchedule:
    """General prizes ``w`` (ranked among everyone) and group prizes ``omega``
    (ranked among target agents), each nonincreasing, jointly within a unit budget."""

    general: tuple = ()
    group: tuple = ()

    def __post_init__(self):
        w = tuple(float(x) for x in self.general)
        om = tuple(float(x) for x in self.group)
        for name, p in (("general", w), ("group", om)):
            if any(x < 0 for x in p):
                raise ValueError(f"{name} prizes must be nonnegative")
            if any(b > a for a, b in zip(p, p[1:])):
                raise ValueError(f"{name} prizes must be nonincreasing")
        if sum(w) + sum(om) > 1.0 + 1e-12:
            raise ValueError(f"prizes exceed the unit budget: {sum(w) + sum(om):.6g}")
        object.__setattr__(self, "general", w)
        object.__setattr__(self, "group", om)

    @classmethod
    def top_k(cls, k: int, n: int, kind: str = "general", total: float = 1.0):
        """``total/k`` to each of the top ``k`` ranks."""
        prizes = tuple([total / k] * k + [0.0] * (n - k))
        return cls(general=prizes) if kind == "general" else cls(group=prizes)

    @property
    def has_general(self) -> bool:
        return any(x > 0 for x in self.general)

    @property
    def has_group(self) -> bool:
        return any(x > 0 for x in self.group)


@dataclass(frozen=True)
class ContestSpec:
    n: int
    population: PopulationModel
    prizes: PrizeSchedule = field(default_factory=PrizeSchedule)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("a contest needs at least two agents")
        object.__setattr__(self, "prizes", PrizeSchedule(
            _pad(self.prizes.general, self.n, "general"), _pad(self.prizes.group, self.n, "group")))

    @property
    def mu(self):
        return self.population.mu

    @property
    def regime(self) -> str:
        g, t = self.prizes.has_general, self.prizes.has_group
        return {(False, False): "none", (True, False): "general",
                (False, True): "group", (True, True): "mixed"}[(g, t)]

    def with_prizes(self, prizes: PrizeSchedule) -> "ContestSpec":
        return ContestSpec(self.n, self.population, prizes)


@dataclass(frozen=True)
class TabulatedStrategy:
    """Output as a nondecreasing function of ability, tabulated on [0, 1]."""

    table: MonotoneTable
    group: Group = Group.TARGET

    def __post_init__(self):
        if abs(self.table.ys[0]) > 1e-12 or self.table.xs[0] != 0.0 or self.table.xs[-1] != 1.0:
            raise ValueError("a strategy table must span [0, 1] with value 0 at ability 0")

    @classmethod
    def zero(cls, group=Group.TARGET):
        return cls(MonotoneTable([0.0, 1.0], [0.0, 0.0]), group)

    def __call__(self, v):
        return self.table(v)

    def derivative(self, v):
        return self.table.derivative(v)

    def inverse(self, x):
        return self.table.invert(x)

    @property
    def max_output(self) -> float:
        return float(self.table.ys[-1])

    @property
    def is_zero(self) -> bool:
        return self.max_output == 0.0

    def scaled(self, factor: float) -> "TabulatedStrategy":
        t = self.table
        return TabulatedStrategy(
            MonotoneTable(t.xs, factor * t.ys, factor * t.slopes, factor * t.left_slopes), self.group)


@dataclass(frozen=True)
class LinkFunction:
    """``k(v)``: the target-group ability that matches a non-target agent of ability v."""

    table: MonotoneTable

    def __post_init__(self):
        if abs(self.table.ys[0]) > 1e-12:
            raise ValueError("link must satisfy k(0) = 0")
        if np.any(self.table.ys > self.table.xs + 1e-9):
            raise ValueError("link must satisfy k(v) <= v")

    @classmethod
    def identity(cls):
        return cls(MonotoneTable([0.0, 1.0], [0.0, 1.0]))

    @classmethod
    def zero(cls):
        return cls(MonotoneTable([0.0, 1.0], [0.0, 0.0]))

    @property
    def k_at_1(self) -> float:
        return float(self.table.ys[-1])

    def __call__(self, v):
        return self.table(v)


def _psi_sum(weights, n, x):
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for j, wj in enumerate(weights, start=1):
        if wj != 0.0:
            total = total + wj * psi_kernel(j, n, x)
    return total


def _strategy_grid(grid_size, knots, lo=0.0, hi=1.0):
    m = max(2, math.ceil(grid_size * (hi - lo)))
    inner = [k for k in knots if lo < k < hi]
    pieces = [np.linspace(lo, hi, m + 1), inner]
    if lo == 0.0:
        # strategies grow like high powers of v near 0; keep relative spacing at 1%
        top = min(hi, 512.0 / grid_size)
        pieces.append(np.geomspace(1e-5, top, math.ceil(math.log(top / 1e-5) / 0.01)))
    return np.unique(np.concatenate(pieces))


def _cumulative_table(slope, grid, offset=0.0):
    """Table of ``offset + int_{grid[0]}^v slope`` with exact one-sided node slopes.

    ``slope(y, side)`` must be vectorised.
    """
    vals = offset + cumulative_integrate(lambda y: slope(y, "right"), grid)
    return vals, slope(grid, "right"), slope(grid, "left")


def _rank_prize_strategy(n, prizes, H, h, grid):
    diffs = [a - b for a, b in zip(prizes[:-1], prizes[1:])]

    def slope(y, side):
        Hy, hy = H(y), h(y, side)
        total = np.zeros_like(y)
        for j, d in enumerate(diffs, start=1):
            if d != 0.0:
                total = total + d * orderstat_pdf(OrderStatQuery(n - 1, j), Hy, hy)
        return y * total

    vals, right, left = _cumulative_table(slope, grid)
    return MonotoneTable(grid, vals, right, left)


def general_equilibrium(spec: ContestSpec, grid_size: int = DEFAULT_GRID) -> TabulatedStrategy:
    """Common strategy of both groups when only general prizes are offered."""
    if spec.prizes.has_group:
        raise InvalidRegime("general_equilibrium requires all group prizes to be zero")
    pop = spec.population
    grid = _strategy_grid(grid_size, pop.knots)
    table = _rank_prize_strategy(spec.n, spec.prizes.general, pop.mixture_cdf, pop.mixture_pdf, grid)
    return TabulatedStrategy(table, Group.TARGET)


def group_equilibrium(spec: ContestSpec, grid_size: int = DEFAULT_GRID) -> TabulatedStrategy:
    """Target-group strategy when only group prizes are offered (non-target agents produce 0)."""
    if spec.prizes.has_general:
        raise InvalidRegime("group_equilibrium requires all general prizes to be zero")
    pop = spec.population
    grid = _strategy_grid(grid_size, pop.target.knots)
    table = _rank_prize_strategy(spec.n, spec.prizes.group, pop.shifted_mixture_cdf,
                                 pop.shifted_mixture_pdf, grid)
    return TabulatedStrategy(table, Group.TARGET)


class MixedOdeContext:
    """Prize-weighted rank-probability derivatives along the link ``k``.

    ``A`` weighs general prizes at the output-level mixture ``mu F(k) + (1-mu) G(v)``,
    ``B`` weighs group prizes at ``mu F(k) + (1-mu)``, and ``C`` weighs all
    prizes above the top non-target output, where only target agents compete.
    """

    def __init__(self, spec: ContestSpec):
        self.n = spec.n
        self.mu = spec.mu
        self.F = spec.population.target
        self.G = spec.population.nontarget
        self.w = spec.prizes.general
        self.omega = spec.prizes.group
        self.total = tuple(a + b for a, b in zip(self.w, self.omega))

    def A(self, v, k):
        return _psi_sum(self.w, self.n, self.mu * self.F.cdf(k) + (1 - self.mu) * self.G.cdf(v))

    def B(self, v, k):
        return _psi_sum(self.omega, self.n, self.mu * self.F.cdf(k) + (1 - self.mu))

    def C(self, v):
        return _psi_sum(self.total, self.n, self.mu * self.F.cdf(v) + (1 - self.mu))

    def derivatives(self, v, k):
        """``(k', beta', denominator)`` at ``(v, k)``; raises StepRejected off the valid region."""
        if not 0.0 < k <= v:
            raise StepRejected(f"k={k!r} outside (0, v={v!r}]")
        A = float(self.A(v, k))
        B = float(self.B(v, k))
        denom = k * (A + B) - v * A
        fk = self.F.pdf(k)
        if denom < 1e-14 or not fk > 0:
            raise StepRejected(f"singular link equation at v={v!r}")
        g = self.G.pdf(v)
        mu = self.mu
        kp = (1 - mu) * g * (v - k) * A / (mu * fk * denom)
        bp = v * (mu * fk * kp + (1 - mu) * g) * A
        return kp, bp, denom

    def rhs(self, v, y):
        kp, bp, _ = self.derivatives(v, y[0])
        return np.array([kp, bp])


def _startup(ctx: MixedOdeContext, eps: float) -> float:
    """Link value at ``eps`` under a locally linear ansatz ``k = c eps``.

    Solves ``k'(eps) = c`` for ``c`` in (0, 1] by bisection on ``log c``; the
    right-hand side decreases in k and is undefined below the singular curve,
    which counts as "c too small".
    """
    def excess(log_c):
        c = math.exp(log_c)
        try:
            kp, _, _ = ctx.derivatives(eps, c * eps)
        except StepRejected:
            return math.inf
        return kp - c

    lo, hi = math.log(1e-290), 0.0
    if excess(hi) > 0 or excess(lo) < 0:
        raise OdeStartupFailure(f"no consistent startup slope at v={eps}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    # the upper end is always on the valid side of the singular curve
    return math.exp(hi) * eps


def _implicit_link(ctx: MixedOdeContext, v0: float, y0, grid_size: int):
    """Radau integration of the link equation for stiff cases.

    When one prize type is tiny the link hugs the singular curve at a distance
    proportional to that prize, and explicit steps shrink to the same scale.
    Off the valid region the rate is clipped so the implicit solver's Newton
    iterations stay finite.
    """
    calls = [0]

    def rates(v, k):
        k = min(max(k, 1e-300), v)
        A = float(ctx.A(v, k))
        B = float(ctx.B(v, k))
        denom = max(k * (A + B) - v * A, 1e-300)
        fk = max(ctx.F.pdf(k), 1e-300)
        g = ctx.G.pdf(v)
        mu = ctx.mu
        kp = min((1 - mu) * g * (v - k) * A / (mu * fk * denom), 1e6)
        return kp, v * (mu * fk * kp + (1 - mu) * g) * A

    def rhs(v, y):
        calls[0] += 1
        if calls[0] > 60_000:
            raise StiffnessError(f"implicit link integration stalled at v={v:.6g}")
        return rates(v, y[0])

    # the finite-difference Jacobian probes the clipped region and may overflow there
    with np.errstate(over="ignore"):
        sol = scipy_solve_ivp(rhs, (v0, 1.0), np.asarray(y0, dtype=float),
                              method="Radau", rtol=1e-10, atol=1e-14, dense_output=True)
    if sol.status != 0:
        raise StiffnessError(f"implicit link integration failed: {sol.message}")
    vs = np.unique(np.concatenate([sol.t, np.geomspace(v0, 1.0, 400), np.linspace(v0, 1.0, grid_size + 1)]))
    ys = sol.sol(vs)
    ks = np.maximum.accumulate(np.minimum(ys[0], vs))
    bs = np.maximum.accumulate(ys[1])
    d = np.array([rates(v, k) for v, k in zip(vs, ks)])
    return MonotoneTable(vs, ks, slopes=d[:, 0]), MonotoneTable(vs, bs, slopes=d[:, 1])


def _prepend_origin(t: MonotoneTable) -> MonotoneTable:
    return MonotoneTable(np.concatenate([[0.0], t.xs]), np.concatenate([[0.0], t.ys]),
                         np.concatenate([[0.0], t.slopes]))


def mixed_equilibrium(spec: ContestSpec, grid_size: int = DEFAULT_GRID, eps_start: float = 1e-4):
    """Equilibrium with general and group prizes.

    Returns ``(link, alpha, beta)``.  With no group prizes both groups face the
    same incentives and the link is the identity; with no general prizes (or
    no non-target agents) the non-target output is zero and the link is zero.
    """
    if not 0 < eps_start <= 1e-3:
        raise ValueError("eps_start must lie in (0, 1e-3]")
    pr = spec.prizes
    if not (pr.has_general or pr.has_group):
        raise InvalidRegime("mixed_equilibrium needs at least one positive prize")
    mu = spec.mu
    ctx = MixedOdeContext(spec)
    pop = spec.population
    F, G = pop.target, pop.nontarget

    if not pr.has_group:
        grid = _strategy_grid(grid_size, pop.knots)

        def slope(y, side):
            return y * pop.mixture_pdf(y, side) * ctx.A(y, y)

        vals, right, left = _cumulative_table(slope, grid)
        table = MonotoneTable(grid, vals, right, left)
        return (LinkFunction.identity(), TabulatedStrategy(table, Group.TARGET),
                TabulatedStrategy(table, Group.NONTARGET))

    if mu == 0.0:
        raise InvalidRegime("group prizes need a target group (mu > 0)")

    if not pr.has_general or mu == 1.0:
        grid = _strategy_grid(grid_size, F.knots)

        def slope(y, side):
            return mu * F.pdf(y, side) * ctx.C(y) * y

        vals, right, left = _cumulative_table(slope, grid)
        alpha = TabulatedStrategy(MonotoneTable(grid, vals, right, left), Group.TARGET)
        return LinkFunction.zero(), alpha, TabulatedStrategy.zero(Group.NONTARGET)

    if F.pdf(eps_start) <= 0:
        raise OdeStartupFailure("the link equation needs a positive target density near 0")
    k0 = _startup(ctx, eps_start)
    kp0, bp0, _ = ctx.derivatives(eps_start, k0)
    beta0 = 0.5 * eps_start * bp0
    # k and beta grow like powers of v whose degree scales with n; bound relative steps
    rel = min(0.02, 0.1 / spec.n)
    ctl = StepControl(max_step=min(1.0 / 256, 2.0 / grid_size), max_rel_step=rel,
                      max_steps=4 * grid_size + math.ceil(20 / rel))
    inner = np.linspace(0.0, 1.0, 4097)[1:-1]
    gap = bool(np.any(F.pdf(inner) <= 0))
    try:
        k_tab, b_tab = solve_ivp(ctx.rhs, eps_start, np.array([k0, beta0]), 1.0, ctl)
    except (StiffnessError, NonMonotone) as exc:
        if gap:
            raise OdeStartupFailure(f"link equation could not be integrated: {exc}; the target density "
                                    "vanishes on part of (0, 1), which the link equation cannot cross") from exc
        try:
            k_tab, b_tab = _implicit_link(ctx, eps_start, [k0, beta0], grid_size)
        except (StiffnessError, NonMonotone) as exc2:
            hint = ""
            if np.any(G.pdf(inner) <= 0):
                hint = ("; the non-target density vanishes inside (0, 1), where the link stalls "
                        "and meets the singular curve")
            raise OdeStartupFailure(f"link equation could not be integrated: {exc}; {exc2}{hint}") from exc2
    k_tab = _prepend_origin(k_tab)
    b_tab = _prepend_origin(b_tab)
    link = LinkFunction(k_tab)
    beta = TabulatedStrategy(b_tab, Group.NONTARGET)
    k_bar = link.k_at_1
    beta_bar = float(b_tab.ys[-1])

    # lower branch: alpha(k(v)) = beta(v), parametrised by the ODE nodes
    ks, bs = k_tab.ys, b_tab.ys
    kps, bps = k_tab.slopes, b_tab.slopes
    keep = np.concatenate([[True], np.diff(ks) > 0])
    ks, bs, kps, bps = ks[keep], bs[keep], kps[keep], bps[keep]
    with np.errstate(divide="ignore", invalid="ignore"):
        a_slopes = np.where(kps > 0, bps / kps, 0.0)

    xs, ys, right, left = ks, bs, a_slopes, a_slopes.copy()
    if k_bar < 1.0 - 1e-12:
        grid = _strategy_grid(grid_size, F.knots, k_bar, 1.0)

        def slope(y, side):
            return mu * F.pdf(y, side) * ctx.C(y) * y

        up_vals, up_right, up_left = _cumulative_table(slope, grid, offset=beta_bar)
        if abs(ys[-1] - up_vals[0]) > 1e-6:
            raise StitchingError(f"alpha branches disagree at k(1)={k_bar:.6g}")
        xs = np.concatenate([xs, grid[1:]])
        ys = np.concatenate([ys, up_vals[1:]])
        right = np.concatenate([right[:-1], up_right])
        left = np.concatenate([left, up_left[1:]])
    alpha = TabulatedStrategy(MonotoneTable(xs, ys, right, left), Group.TARGET)
    return link, alpha, beta


@dataclass(frozen=True)
class Equilibrium:
    spec: ContestSpec
    regime: str
    alpha: TabulatedStrategy
    beta: TabulatedStrategy
    link: LinkFunction

    @property
    def k_at_1(self) -> float:
        return self.link.k_at_1

    def expected_target_output(self) -> float:
        return expected_group_output(self.alpha, self.spec.population.target)

    def expected_nontarget_output(self) -> float:
        return expected_group_output(self.beta, self.spec.population.nontarget)

    def target_group_total(self) -> float:
        """Expected total output of target agents in one contest."""
        return self.spec.mu * self.spec.n * self.expected_target_output()


def solve_equilibrium(spec: ContestSpec, grid_size: int = DEFAULT_GRID,
                      eps_start: float = 1e-4) -> Equilibrium:
    """Dispatch on the prize regime and return both strategies and the link."""
    regime = spec.regime
    if regime == "none":
        return Equilibrium(spec, regime, TabulatedStrategy.zero(Group.TARGET),
                           TabulatedStrategy.zero(Group.NONTARGET), LinkFunction.identity())
    if regime == "general":
        a = general_equilibrium(spec, grid_size)
        return Equilibrium(spec, regime, a, TabulatedStrategy(a.table, Group.NONTARGET),
                           LinkFunction.identity())
    if regime == "group":
        a = group_equilibrium(spec, grid_size)
        return Equilibrium(spec, regime, a, TabulatedStrategy.zero(Group.NONTARGET), LinkFunction.zero())
    link, a, b = mixed_equilibrium(spec, grid_size, eps_start)
    return Equilibrium(spec, regime, a, b, link)


def expected_group_output(strategy: TabulatedStrategy, d: AbilityDistribution) -> float:
    """``E[strategy(v)]`` for v drawn from ``d``."""
    if strategy.is_zero:
        return 0.0
    knots = sorted(set(d.knots) | set(strategy.table.xs[1:-1].tolist()))
    return integrate(lambda v: strategy(v) * d.pdf(v), 0.0, 1.0, knots)
