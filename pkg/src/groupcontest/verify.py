"""Monte Carlo oracle for contest equilibria.

Contests are simulated from first principles: draw labels and abilities,
map abilities to outputs with the candidate strategies, rank the outputs
(ties broken uniformly at random) and pay the prizes.  Nothing here reuses
the order-statistic formulas of the analytic solvers, except
:func:`foc_residual`, which checks the first-order condition pointwise
from the tabulated strategies alone.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibrium import ContestSpec, Equilibrium, Group, TabulatedStrategy
from .orderstats import psi_kernel

__all__ = [
    "AgentDraw",
    "AllocationOutcome",
    "draw_agents",
    "allocate",
    "simulate_utility",
    "simulate_group_output",
    "best_response_check",
    "foc_residual",
    "DeviationResult",
]

BATCH = 1 << 16


@dataclass
class AgentDraw:
    """A batch of contests: arrays of shape ``(samples, agents)``."""

    is_target: np.ndarray
    ability: np.ndarray
    output: np.ndarray


@dataclass
class AllocationOutcome:
    general_rank: np.ndarray   # 0 = highest output
    group_rank: np.ndarray     # rank among target agents, -1 for non-target
    prize_paid: np.ndarray


def _split(strategies):
    if isinstance(strategies, Equilibrium):
        return strategies.alpha, strategies.beta
    alpha, beta = strategies
    return alpha, beta


def _batches(samples, seed):
    counts = [BATCH] * (samples // BATCH)
    if samples % BATCH:
        counts.append(samples % BATCH)
    streams = np.random.SeedSequence(seed).spawn(len(counts))
    return [(c, np.random.default_rng(s)) for c, s in zip(counts, streams)]


def draw_agents(spec: ContestSpec, strategies, size, rng) -> AgentDraw:
    alpha, beta = _split(strategies)
    pop = spec.population
    is_target = rng.random(size) < pop.mu
    va = pop.target.sample(rng, size)
    vb = pop.nontarget.sample(rng, size)
    ability = np.where(is_target, va, vb)
    output = np.where(is_target, alpha(va), beta(vb))
    return AgentDraw(is_target, ability, output)


def allocate(outputs, is_target, spec: ContestSpec, rng) -> AllocationOutcome:
    """Rank every row of ``outputs`` and pay general and group prizes."""
    outputs = np.asarray(outputs, dtype=float)
    w = np.asarray(spec.prizes.general)
    om = np.asarray(spec.prizes.group)
    order = np.lexsort((rng.random(outputs.shape), -outputs), axis=-1)
    rows = np.arange(outputs.shape[0])[:, None]
    general_rank = np.empty_like(order)
    general_rank[rows, order] = np.arange(outputs.shape[1])[None, :]
    sorted_target = np.take_along_axis(is_target, order, axis=-1)
    sorted_group = np.where(sorted_target, np.cumsum(sorted_target, axis=-1) - 1, -1)
    group_rank = np.empty_like(order)
    group_rank[rows, order] = sorted_group
    prize = w[general_rank] + np.where(group_rank >= 0, om[np.maximum(group_rank, 0)], 0.0)
    return AllocationOutcome(general_rank, group_rank, prize)


def _focal_prizes(spec, opp: AgentDraw, outputs, focal_target, rng):
    """Prize won by a focal agent for each candidate output, per sample."""
    w = np.asarray(spec.prizes.general)
    om = np.asarray(spec.prizes.group)
    u = rng.random(opp.output.shape[0])
    out = np.empty((opp.output.shape[0], len(outputs)))
    for c, b in enumerate(outputs):
        above = opp.output > b
        tied = opp.output == b
        rank = above.sum(axis=1) + np.floor(u * (tied.sum(axis=1) + 1)).astype(int)
        prize = w[rank]
        if focal_target:
            t_above = (above & opp.is_target).sum(axis=1)
            t_tied = (tied & opp.is_target).sum(axis=1)
            prize = prize + om[t_above + np.floor(u * (t_tied + 1)).astype(int)]
        out[:, c] = prize
    return out


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    se = float(x.std(ddof=1) / np.sqrt(len(x))) if len(x) > 1 else float("inf")
    return float(x.mean()), se


def simulate_utility(spec: ContestSpec, strategies, focal_ability: float, focal_label: Group,
                     focal_output: float, samples: int, seed: int):
    """Mean and standard error of the focal agent's utility ``v * prize - output``."""
    focal_target = Group(focal_label) is Group.TARGET
    vals = []
    for count, rng in _batches(samples, seed):
        opp = draw_agents(spec, strategies, (count, spec.n - 1), rng)
        prize = _focal_prizes(spec, opp, [focal_output], focal_target, rng)[:, 0]
        vals.append(focal_ability * prize - focal_output)
    return _mean_se(np.concatenate(vals))


def simulate_group_output(spec: ContestSpec, strategies, samples: int, seed: int):
    """Mean and standard error of the total target-group output per contest."""
    totals = []
    for count, rng in _batches(samples, seed):
        d = draw_agents(spec, strategies, (count, spec.n), rng)
        totals.append(np.where(d.is_target, d.output, 0.0).sum(axis=1))
    return _mean_se(np.concatenate(totals))


@dataclass
class DeviationResult:
    ability: float
    group: Group
    equilibrium_output: float
    equilibrium_utility: float
    best_deviation: float
    best_gain: float
    gain_se: float

    @property
    def passed(self) -> bool:
        return self.best_gain <= 3.0 * self.gain_se + 1e-3


def best_response_check(spec: ContestSpec, strategies, abilities=None, group=Group.TARGET,
                        samples: int = 100_000, seed: int = 0, n_dev: int = 21):
    """Compare the equilibrium output with ``n_dev`` multiplicative deviations
    in ``[0.5, 1.5]`` times it, plus output 0, on common random numbers."""
    alpha, beta = _split(strategies)
    strat = alpha if Group(group) is Group.TARGET else beta
    if abilities is None:
        abilities = np.round(np.arange(1, 10) / 10, 10)
    focal_target = Group(group) is Group.TARGET
    factors = np.concatenate([np.linspace(0.5, 1.5, n_dev), [0.0]])
    eq_index = int(np.argmin(np.abs(factors - 1.0)))
    candidates = [(v, strat(v) * factors) for v in abilities]
    flat = np.concatenate([c for _, c in candidates])

    prizes = []
    for count, rng in _batches(samples, seed):
        opp = draw_agents(spec, strategies, (count, spec.n - 1), rng)
        prizes.append(_focal_prizes(spec, opp, flat, focal_target, rng))
    prizes = np.concatenate(prizes)

    results = []
    for i, (v, outs) in enumerate(candidates):
        block = prizes[:, i * len(factors):(i + 1) * len(factors)]
        util = v * block - outs[None, :]
        gain = util - util[:, [eq_index]]
        means = gain.mean(axis=0)
        ses = gain.std(axis=0, ddof=1) / np.sqrt(gain.shape[0])
        best = int(np.argmax(np.where(np.arange(len(factors)) == eq_index, -np.inf, means)))
        results.append(DeviationResult(float(v), Group(group), float(outs[eq_index]),
                                       float(util[:, eq_index].mean()), float(outs[best]),
                                       float(means[best]), float(ses[best])))
    return results


def foc_residual(spec: ContestSpec, strategies, v_grid, group=Group.TARGET):
    """``|LHS - 1|`` of the first-order condition at ``x = strategy(v)``.

    For a target agent the left side is
    ``v * (sum_j w_j dp_j^{H_out}/dx + sum_j omega_j dp_j^{H_tgt}/dx)``, where
    ``H_out`` is the output distribution of a random agent and ``H_tgt`` that of
    a random agent with non-target outputs collapsed to 0.  For a non-target
    agent only the general term appears.  Both distributions and their
    derivatives are read off the tabulated strategies.  Where a strategy is
    flat (its ability density vanishes) the condition is undefined and the
    residual is NaN.
    """
    alpha, beta = _split(strategies)
    pop = spec.population
    mu, n = pop.mu, spec.n
    w, om = spec.prizes.general, spec.prizes.group
    target = Group(group) is Group.TARGET
    v = np.asarray(v_grid, dtype=float)
    strat = alpha if target else beta
    x = strat(v)

    beta_bar = beta.max_output
    alpha_bar = alpha.max_output
    if target:
        va = v
        ub = beta.inverse(np.minimum(x, beta_bar)) if beta_bar > 0 else np.ones_like(v)
    else:
        ub = v
        va = alpha.inverse(np.minimum(x, alpha_bar))
    below = x < beta_bar
    da = alpha.derivative(va)
    db = np.where(below, beta.derivative(np.where(below, ub, 1.0)), 1.0)
    fa = pop.target.pdf(va)
    gb = pop.nontarget.pdf(ub)

    flat = (da <= 0) | (np.where(below, db, 1.0) <= 0)
    da = np.where(flat, 1.0, da)
    db = np.where(db > 0, db, 1.0)
    H_out = mu * pop.target.cdf(va) + (1 - mu) * pop.nontarget.cdf(ub)
    dH_out = mu * fa / da + np.where(below, (1 - mu) * gb / db, 0.0)
    H_tgt = mu * pop.target.cdf(va) + (1 - mu)
    dH_tgt = mu * fa / da

    general = sum(wj * psi_kernel(j, n, H_out) for j, wj in enumerate(w, 1) if wj) + 0 * v
    lhs = v * general * dH_out
    if target:
        grp = sum(oj * psi_kernel(j, n, H_tgt) for j, oj in enumerate(om, 1) if oj) + 0 * v
        lhs = lhs + v * grp * dH_tgt
    return np.where(flat, np.nan, np.abs(lhs - 1.0))
