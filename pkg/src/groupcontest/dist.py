"""Ability distributions on [0, 1] and the two-group population mixture."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidDistribution, ScenarioError
from .numerics import cumulative_integrate, integrate

__all__ = [
    "AbilityDistribution",
    "Uniform",
    "Power",
    "Polynomial",
    "Segment",
    "PiecewiseSurvival",
    "ResidualMixture",
    "PopulationModel",
    "cdf",
    "pdf",
    "mixture_cdf",
    "shifted_mixture_cdf",
    "fos_dominates",
    "sos_dominates",
    "distribution_from_dict",
]

_GRID = np.linspace(0.0, 1.0, 10_001)


def _as_unit(v):
    x = np.asarray(v, dtype=float)
    if np.any(~((x >= 0.0) & (x <= 1.0))):
        raise DomainError(f"ability must lie in [0, 1], got {v!r}")
    return x


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


class AbilityDistribution:
    """A continuous CDF on [0, 1] with a (one-sided) density.

    Subclasses implement ``_cdf``, ``_sf`` and ``_pdf`` on validated arrays.
    ``knots`` lists interior points where the density may jump; quadrature
    splits its panels there.
    """

    kind = "abstract"
    knots: tuple = ()

    def cdf(self, v):
        x = _as_unit(v)
        return _out(self._cdf(x), v)

    def sf(self, v):
        """Survival function ``1 - cdf``, evaluated without cancellation where possible."""
        x = _as_unit(v)
        return _out(self._sf(x), v)

    def pdf(self, v, side="right"):
        """Density; at a knot ``side`` picks the one-sided derivative."""
        x = _as_unit(v)
        return _out(self._pdf(x, side), v)

    def _sf(self, x):
        return 1.0 - self._cdf(x)

    def ppf(self, u):
        """Smallest v with ``cdf(v) >= u`` (vectorised bisection)."""
        u = np.asarray(u, dtype=float)
        lo = np.zeros_like(u)
        hi = np.ones_like(u)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = self._cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return _out(hi, u)

    def sample(self, rng: np.random.Generator, size):
        return self.ppf(rng.random(size))

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _validate(self):
        grid = np.unique(np.concatenate([_GRID, np.asarray(self.knots, dtype=float)]))
        c = self._cdf(grid)
        if not np.all(np.isfinite(c)):
            raise InvalidDistribution(f"{self.kind}: cdf is not finite on [0, 1]")
        if abs(c[0]) > 1e-12 or abs(c[-1] - 1.0) > 1e-12:
            raise InvalidDistribution(f"{self.kind}: cdf(0)={c[0]!r}, cdf(1)={c[-1]!r}")
        if np.any(np.diff(c) < -1e-12):
            raise InvalidDistribution(f"{self.kind}: cdf decreases somewhere on [0, 1]")
        p = np.concatenate([self._pdf(grid, "right"), self._pdf(grid, "left")])
        if np.any(np.isnan(p)) or np.any(p < -1e-12):
            raise InvalidDistribution(f"{self.kind}: negative or undefined density")
        # densities with an integrable singularity (power law, s < 1) are normalised analytically
        if np.all(np.isfinite(p)):
            mass = integrate(lambda t: self._pdf(t, "right"), 0.0, 1.0, self.knots)
            if abs(mass - 1.0) > 1e-8:
                raise InvalidDistribution(f"{self.kind}: density integrates to {mass!r}")


@dataclass(frozen=True)
class Power(AbilityDistribution):
    """``F(v) = v**s``."""

    s: float = 1.0
    kind = "power"

    def __post_init__(self):
        if not self.s > 0:
            raise InvalidDistribution(f"power exponent must be positive, got {self.s}")

    def _cdf(self, x):
        return x ** self.s

    def _sf(self, x):
        with np.errstate(divide="ignore"):
            return -np.expm1(self.s * np.log(x))

    def _pdf(self, x, side="right"):
        if self.s == 1.0:
            return np.ones_like(x)
        with np.errstate(divide="ignore"):
            return self.s * x ** (self.s - 1.0)

    def ppf(self, u):
        return _out(np.asarray(u, dtype=float) ** (1.0 / self.s), u)

    def to_dict(self):
        return {"kind": "power", "s": self.s}


@dataclass(frozen=True)
class Uniform(Power):
    s: float = field(default=1.0, init=False)
    kind = "uniform"

    def to_dict(self):
        return {"kind": "uniform"}


@dataclass(frozen=True)
class Polynomial(AbilityDistribution):
    """CDF given by polynomial coefficients in v, lowest degree first."""

    coeffs: tuple
    kind = "polynomial"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        self._validate()

    def _cdf(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def _pdf(self, x, side="right"):
        return np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(self.coeffs))

    def to_dict(self):
        return {"kind": "polynomial", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class Segment:
    """Survival function ``sum(c * t**p for c, p in terms)`` on ``[start, next start)``,
    where ``t = v`` (basis ``"x"``) or ``t = 1 - v`` (basis ``"1-x"``)."""

    start: float
    terms: tuple
    basis: str = "x"

    def __post_init__(self):
        if self.basis not in ("x", "1-x"):
            raise InvalidDistribution(f"segment basis must be 'x' or '1-x', got {self.basis!r}")
        terms = tuple((float(c), int(p)) for c, p in self.terms)
        if any(p < 0 for _, p in terms):
            raise InvalidDistribution("segment powers must be nonnegative")
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "terms", terms)

    def _t(self, x):
        return x if self.basis == "x" else 1.0 - x

    def survival(self, x):
        t = self._t(x)
        return sum(c * t ** p for c, p in self.terms)

    def density(self, x):
        t = self._t(x)
        sign = -1.0 if self.basis == "x" else 1.0
        return sign * sum(c * p * t ** (p - 1) for c, p in self.terms if p > 0) + 0.0 * x

    def to_dict(self):
        return {"start": self.start, "terms": [list(t) for t in self.terms], "basis": self.basis}


@dataclass(frozen=True)
class PiecewiseSurvival(AbilityDistribution):
    """``F = 1 - S`` with S polynomial on each segment."""

    segments: tuple
    kind = "piecewise_survival"

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(**s) for s in self.segments)
        if not segs or segs[0].start != 0.0:
            raise InvalidDistribution("first segment must start at 0")
        starts = [s.start for s in segs]
        if any(b <= a for a, b in zip(starts, starts[1:])) or starts[-1] >= 1.0:
            raise InvalidDistribution("segment starts must be strictly increasing in [0, 1)")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "knots", tuple(starts[1:]))
        object.__setattr__(self, "_starts", np.array(starts))
        for left, right in zip(segs, segs[1:]):
            gap = abs(left.survival(right.start) - right.survival(right.start))
            if gap > 1e-12:
                raise InvalidDistribution(f"cdf jumps by {gap:.3e} at v={right.start}")
        self._validate()

    def _index(self, x, side):
        return np.clip(np.searchsorted(self._starts, x, side=side) - 1, 0, len(self.segments) - 1)

    def _piecewise(self, x, side, fn):
        x = np.asarray(x, dtype=float)
        idx = self._index(x, side)
        out = np.empty_like(x)
        for i, seg in enumerate(self.segments):
            m = idx == i
            if np.any(m):
                out[m] = fn(seg, x[m])
        return out

    def _sf(self, x):
        return self._piecewise(x, "right", Segment.survival)

    def _cdf(self, x):
        return 1.0 - self._sf(x)

    def _pdf(self, x, side="right"):
        return self._piecewise(x, side, Segment.density)

    def to_dict(self):
        return {"kind": "piecewise_survival", "segments": [s.to_dict() for s in self.segments]}


@dataclass(frozen=True)
class ResidualMixture(AbilityDistribution):
    """``(base - weight * other) / (1 - weight)``: the component left over when
    ``other`` makes up a share ``weight`` of ``base``."""

    base: AbilityDistribution
    other: AbilityDistribution
    weight: float
    kind = "residual"

    def __post_init__(self):
        if not 0.0 <= self.weight < 1.0:
            raise InvalidDistribution(f"residual weight must lie in [0, 1), got {self.weight}")
        object.__setattr__(self, "knots", tuple(sorted(set(self.base.knots) | set(self.other.knots))))
        self._validate()

    def _cdf(self, x):
        return (self.base._cdf(x) - self.weight * self.other._cdf(x)) / (1.0 - self.weight)

    def _sf(self, x):
        return (self.base._sf(x) - self.weight * self.other._sf(x)) / (1.0 - self.weight)

    def _pdf(self, x, side="right"):
        return (self.base._pdf(x, side) - self.weight * self.other._pdf(x, side)) / (1.0 - self.weight)

    def to_dict(self):
        return {"kind": "residual", "mu": self.weight,
                "base": self.base.to_dict(), "other": self.other.to_dict()}


def cdf(d: AbilityDistribution, v):
    return d.cdf(v)


def pdf(d: AbilityDistribution, v):
    return d.pdf(v)


@dataclass(frozen=True)
class PopulationModel:
    """Target-group share ``mu`` with target abilities ~ F and the rest ~ G."""

    mu: float
    target: AbilityDistribution
    nontarget: AbilityDistribution

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise InvalidDistribution(f"mu must lie in [0, 1], got {self.mu}")
        c = self.mixture_cdf(_GRID)
        if abs(c[0]) > 1e-12 or abs(c[-1] - 1) > 1e-12 or np.any(np.diff(c) < -1e-12):
            raise InvalidDistribution("population mixture is not a valid CDF")

    @property
    def knots(self):
        return tuple(sorted(set(self.target.knots) | set(self.nontarget.knots)))

    def mixture_cdf(self, v):
        """``H = mu F + (1 - mu) G``: ability CDF of a random agent."""
        return self.mu * self.target.cdf(v) + (1.0 - self.mu) * self.nontarget.cdf(v)

    def mixture_sf(self, v):
        return self.mu * self.target.sf(v) + (1.0 - self.mu) * self.nontarget.sf(v)

    def mixture_pdf(self, v, side="right"):
        return self.mu * self.target.pdf(v, side) + (1.0 - self.mu) * self.nontarget.pdf(v, side)

    def shifted_mixture_cdf(self, v):
        """``mu F + (1 - mu)``: non-target agents collapsed onto a point mass at 0."""
        return self.mu * self.target.cdf(v) + (1.0 - self.mu)

    def shifted_mixture_sf(self, v):
        return self.mu * self.target.sf(v)

    def shifted_mixture_pdf(self, v, side="right"):
        return self.mu * self.target.pdf(v, side)

    def to_dict(self):
        return {"mu": self.mu, "F": self.target.to_dict(), "G": self.nontarget.to_dict()}


def mixture_cdf(p: PopulationModel, v):
    return p.mixture_cdf(v)


def shifted_mixture_cdf(p: PopulationModel, v):
    return p.shifted_mixture_cdf(v)


def _grid_for(*ds, n_grid=10_001):
    knots = [k for d in ds for k in d.knots]
    return np.unique(np.concatenate([np.linspace(0, 1, n_grid), knots]))


def fos_dominates(a, b, n_grid: int = 10_001, tol: float = 1e-12, strict: bool = False) -> bool:
    """True when ``a`` first-order dominates ``b``: ``a.cdf <= b.cdf`` on a grid.

    With ``strict=True`` the inequality must also be strict somewhere.
    ``a`` and ``b`` are anything with a vectorised ``cdf``.
    """
    x = _grid_for(a, b, n_grid=n_grid)
    diff = np.asarray(a.cdf(x)) - np.asarray(b.cdf(x))
    ok = bool(np.all(diff <= tol))
    return ok and bool(np.any(diff < -tol)) if strict else ok


def sos_dominates(a, b, n_grid: int = 10_001, tol: float = 1e-12) -> bool:
    """True when ``int_0^x (a.cdf - b.cdf) <= 0`` for every grid point x."""
    x = _grid_for(a, b, n_grid=n_grid)
    running = cumulative_integrate(lambda t: a.cdf(t) - b.cdf(t), x, nodes=4)
    return bool(np.all(running <= tol))


def distribution_from_dict(spec: dict) -> AbilityDistribution:
    """Build a distribution from its tagged-record form (see ``to_dict``)."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ScenarioError(f"distribution descriptor needs a 'kind': {spec!r}")
    kind = spec["kind"]
    fields = {
        "uniform": set(),
        "power": {"s"},
        "polynomial": {"coeffs"},
        "piecewise_survival": {"segments"},
        "residual": {"mu", "base", "other"},
    }
    if kind not in fields:
        raise ScenarioError(f"unknown distribution kind {kind!r}")
    extra = set(spec) - fields[kind] - {"kind"}
    missing = fields[kind] - set(spec)
    if extra or missing:
        raise ScenarioError(f"{kind}: unexpected fields {sorted(extra)}, missing {sorted(missing)}")
    if kind == "uniform":
        return Uniform()
    if kind == "power":
        return Power(float(spec["s"]))
    if kind == "polynomial":
        return Polynomial(tuple(spec["coeffs"]))
    if kind == "piecewise_survival":
        segs = []
        for s in spec["segments"]:
            unknown = set(s) - {"start", "terms", "basis"}
            if unknown:
                raise ScenarioError(f"segment: unexpected fields {sorted(unknown)}")
            segs.append(Segment(s["start"], tuple(map(tuple, s["terms"])), s.get("basis", "x")))
        return PiecewiseSurvival(tuple(segs))
    return ResidualMixture(distribution_from_dict(spec["base"]),
                           distribution_from_dict(spec["other"]), float(spec["mu"]))
