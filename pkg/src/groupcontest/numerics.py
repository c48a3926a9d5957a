"""Numerical substrate: quadrature, ODE integration, monotone tables, roots.

Everything here works on plain callables that accept and return numpy arrays
(quadrature, tables) or scalars/1-D state vectors (ODE right-hand sides).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    DomainError,
    NoSignChange,
    NonMonotone,
    RangeError,
    StiffnessError,
    ToleranceNotMet,
)

__all__ = [
    "QuadratureConfig",
    "StepControl",
    "StepRejected",
    "MonotoneTable",
    "integrate",
    "cumulative_integrate",
    "solve_ivp",
    "evaluate",
    "invert",
    "find_root",
    "breakpoints",
]


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureConfig:
    panels_per_unit: int = 64
    nodes_per_panel: int = 16
    target_rel_tol: float = 1e-9
    endpoint_levels: int = 58  # geometric refinement toward a and b, ratio 0.2 per level

    def __post_init__(self):
        if self.panels_per_unit < 1:
            raise ValueError("panels_per_unit must be >= 1")
        if self.nodes_per_panel not in (4, 8, 16, 32):
            raise ValueError("nodes_per_panel must be one of 4, 8, 16, 32")


DEFAULT_QUADRATURE = QuadratureConfig()


@lru_cache(maxsize=None)
def _gauss_legendre(m: int):
    t, w = np.polynomial.legendre.leggauss(m)
    t.flags.writeable = False
    w.flags.writeable = False
    return t, w


def breakpoints(a, b, knots=()):
    """Sorted, de-duplicated ``[a, knots inside (a, b)..., b]``."""
    inner = [float(k) for k in knots if a < k < b]
    return np.unique(np.array([float(a), *inner, float(b)]))


def _panel_edges(bps, panels_per_unit):
    lefts, rights = [], []
    for p, q in zip(bps[:-1], bps[1:]):
        m = max(1, math.ceil(panels_per_unit * (q - p) - 1e-9))
        e = np.linspace(p, q, m + 1)
        lefts.append(e[:-1])
        rights.append(e[1:])
    return np.concatenate(lefts), np.concatenate(rights)


def _graded(lefts, rights, levels):
    # split the outermost panels geometrically so x^p endpoint singularities stay accurate
    if levels <= 0:
        return lefts, rights
    e = np.concatenate([lefts, rights[-1:]])
    if len(e) == 2:
        e = np.array([e[0], 0.5 * (e[0] + e[1]), e[1]])
    frac = 0.2 ** np.arange(levels, 0, -1)
    head = e[0] + (e[1] - e[0]) * frac
    tail = e[-1] - (e[-1] - e[-2]) * frac[::-1]
    # Gauss nodes in panels narrower than ~1e3 ulps of the endpoint would round onto it
    head = head[(head - e[0]) > 1e3 * np.spacing(e[0])]
    tail = tail[(e[-1] - tail) > 1e3 * np.spacing(e[-1])]
    edges = np.concatenate([e[:1], head, e[1:-1], tail, e[-1:]])
    return edges[:-1], edges[1:]


def _gl_apply(f, lefts, rights, m):
    t, w = _gauss_legendre(m)
    half = 0.5 * (rights - lefts)
    mid = 0.5 * (rights + lefts)
    x = mid[:, None] + half[:, None] * t[None, :]
    vals = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    return vals, half[:, None] * w[None, :]


def integrate(f, a, b, knots=(), cfg: QuadratureConfig = DEFAULT_QUADRATURE):
    """Composite Gauss-Legendre integral of a vectorised ``f`` over [a, b].

    Panels never straddle a knot.  The panel count is doubled until two
    successive estimates agree to ``cfg.target_rel_tol * (1 + |I|)``.
    """
    if a > b:
        raise DomainError(f"integration bounds reversed: a={a} > b={b}")
    if a == b:
        return 0.0
    bps = breakpoints(a, b, knots)
    ppu = cfg.panels_per_unit
    prev = None
    for _ in range(5):
        edges = _graded(*_panel_edges(bps, ppu), cfg.endpoint_levels)
        vals, wts = _gl_apply(f, *edges, cfg.nodes_per_panel)
        cur = float(np.sum(vals * wts))
        if prev is not None and abs(cur - prev) <= cfg.target_rel_tol * (1.0 + abs(cur)):
            return cur
        prev = cur
        ppu *= 2
    raise ToleranceNotMet(
        f"panel doubling did not converge on [{a}, {b}]: last change {abs(cur - prev):.3e}"
    )


def cumulative_integrate(f, xs, nodes: int = 16):
    """Running integral ``I[i] = int_{xs[0]}^{xs[i]} f``; one Gauss panel per cell.

    Callers put every non-smooth point of ``f`` into ``xs``.
    """
    xs = np.asarray(xs, dtype=float)
    vals, wts = _gl_apply(f, xs[:-1], xs[1:], nodes)
    return np.concatenate([[0.0], np.cumsum(np.sum(vals * wts, axis=1))])


# ---------------------------------------------------------------------------
# Monotone piecewise-cubic tables
# ---------------------------------------------------------------------------

def _pchip_slopes(xs, ys):
    h = np.diff(xs)
    delta = np.diff(ys) / h
    d = np.zeros_like(ys)
    if len(xs) == 2:
        d[:] = delta[0]
        return d
    w1 = 2 * h[1:] + h[:-1]
    w2 = h[1:] + 2 * h[:-1]
    prod = delta[:-1] * delta[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        hm = (w1 + w2) / (w1 / delta[:-1] + w2 / delta[1:])
    d[1:-1] = np.where(prod > 0, hm, 0.0)
    d[0] = max(0.0, ((2 * h[0] + h[1]) * delta[0] - h[0] * delta[1]) / (h[0] + h[1]))
    d[-1] = max(0.0, ((2 * h[-1] + h[-2]) * delta[-1] - h[-1] * delta[-2]) / (h[-1] + h[-2]))
    return d


class MonotoneTable:
    """Nondecreasing data on a strictly increasing grid, interpolated by a
    shape-preserving cubic Hermite spline.

    ``slopes`` are derivatives at the nodes; when the function has a kink at a
    node, ``left_slopes`` gives the derivative from the left there.  Without
    slopes a Fritsch-Butland estimate is used.  Supplied slopes are clipped to
    the Fritsch-Carlson region, so they only change where they would break
    monotonicity.
    """

    def __init__(self, xs, ys, slopes=None, left_slopes=None):
        xs = np.array(xs, dtype=float)
        ys = np.array(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
            raise ValueError("xs and ys must be 1-D arrays of equal length >= 2")
        if not np.all(np.diff(xs) > 0):
            raise ValueError("xs must be strictly increasing")
        if not np.all(np.isfinite(ys)):
            raise ValueError("ys must be finite")
        drops = np.diff(ys)
        if np.any(drops < -1e-12):
            i = int(np.argmin(drops))
            raise NonMonotone(f"table decreases by {-drops[i]:.3e} at x={xs[i + 1]:.6g}")
        ys = np.maximum.accumulate(ys)

        if slopes is None:
            right = _pchip_slopes(xs, ys)
            left = right.copy()
        else:
            right = np.maximum(np.array(slopes, dtype=float), 0.0)
            left = right.copy() if left_slopes is None else np.maximum(
                np.array(left_slopes, dtype=float), 0.0)

        self._right, self._left = right, left
        right.flags.writeable = False
        left.flags.writeable = False
        h = np.diff(xs)
        delta = np.diff(ys) / h
        d0 = right[:-1].copy()   # slope at the left end of each interval
        d1 = left[1:].copy()     # slope at the right end of each interval
        flat = delta <= 0
        d0[flat] = 0.0
        d1[flat] = 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(flat, 0.0, d0 / delta)
            b = np.where(flat, 0.0, d1 / delta)
        r2 = a * a + b * b
        scale = np.where(r2 > 9.0, 3.0 / np.sqrt(np.where(r2 > 0, r2, 1.0)), 1.0)
        self._xs, self._ys = xs, ys
        self._h = h
        self._d0 = d0 * scale
        self._d1 = d1 * scale
        self._xs.flags.writeable = False
        self._ys.flags.writeable = False

    @property
    def xs(self):
        return self._xs

    @property
    def ys(self):
        return self._ys

    @property
    def slopes(self):
        """Node derivatives as supplied (from the right at kinks)."""
        return self._right

    @property
    def left_slopes(self):
        return self._left

    @property
    def domain(self):
        return float(self._xs[0]), float(self._xs[-1])

    def _locate(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        if np.any((x < lo - 1e-12) | (x > hi + 1e-12)):
            raise DomainError(f"table evaluated outside [{lo}, {hi}]")
        x = np.clip(x, lo, hi)
        i = np.clip(np.searchsorted(self._xs, x, side="right") - 1, 0, len(self._xs) - 2)
        t = (x - self._xs[i]) / self._h[i]
        return x, i, t

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        _, i, t = self._locate(x)
        h = self._h[i]
        t2, t3 = t * t, t * t * t
        y = ((2 * t3 - 3 * t2 + 1) * self._ys[i] + (-2 * t3 + 3 * t2) * self._ys[i + 1]
             + (t3 - 2 * t2 + t) * h * self._d0[i] + (t3 - t2) * h * self._d1[i])
        return float(y) if scalar else y

    def derivative(self, x):
        scalar = np.ndim(x) == 0
        _, i, t = self._locate(x)
        h = self._h[i]
        t2 = t * t
        dy = ((6 * t2 - 6 * t) * (self._ys[i] - self._ys[i + 1]) / h
              + (3 * t2 - 4 * t + 1) * self._d0[i] + (3 * t2 - 2 * t) * self._d1[i])
        return float(dy) if scalar else dy

    def invert(self, y, tol: float = 1e-13):
        """Smallest x with ``self(x) == y``; vectorised bisection inside the bracketing cell."""
        scalar = np.ndim(y) == 0
        y = np.atleast_1d(np.asarray(y, dtype=float))
        y0, y1 = self._ys[0], self._ys[-1]
        if np.any((y < y0 - 1e-12) | (y > y1 + 1e-12)):
            raise RangeError(f"value outside table range [{y0}, {y1}]")
        y = np.clip(y, y0, y1)
        i = np.clip(np.searchsorted(self._ys, y, side="left") - 1, 0, len(self._xs) - 2)
        lo = self._xs[i].copy()
        hi = self._xs[i + 1].copy()
        exact = self._ys[i + 1] == y
        for _ in range(200):
            if np.all(hi - lo <= tol):
                break
            mid = 0.5 * (lo + hi)
            below = self(mid) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        x = np.where(exact & (self._ys[i] < y), self._xs[i + 1], 0.5 * (lo + hi))
        x = np.where(self._ys[i] == y, self._xs[i], x)
        return float(x[0]) if scalar else x

    def __repr__(self):
        lo, hi = self.domain
        return f"MonotoneTable({len(self._xs)} nodes on [{lo:g}, {hi:g}])"


def evaluate(t: MonotoneTable, x):
    return t(x)


def invert(t: MonotoneTable, y):
    """Inverse of a monotone table; ``RangeError`` outside ``[ys[0], ys[-1]]``."""
    return t.invert(y)


# ---------------------------------------------------------------------------
# Initial-value problems
# ---------------------------------------------------------------------------

class StepRejected(Exception):
    """Raised by a right-hand side to ask the integrator for a smaller step."""


@dataclass(frozen=True)
class StepControl:
    atol: float = 1e-10
    rtol: float = 0.0
    first_step: float | None = None
    max_step: float = 1.0 / 512
    min_step: float = 1e-12
    max_halvings: int = 40
    require_monotone: bool = True
    max_rel_step: float | None = None  # also cap the step at this multiple of |v|
    max_steps: int = 1_000_000


# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def solve_ivp(rhs, v0, y0, v1, step_ctrl: StepControl = StepControl()):
    """Integrate ``y' = rhs(v, y)`` from ``v0`` to ``v1`` with adaptive
    Dormand-Prince steps and return the trajectory as monotone table(s).

    A scalar ``y0`` gives one :class:`MonotoneTable`; an array ``y0`` gives a
    list with one table per component.  ``rhs`` may raise
    :class:`StepRejected` to force a step halving.
    """
    if not v0 < v1:
        raise DomainError("solve_ivp needs v0 < v1")
    scalar = np.ndim(y0) == 0
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()

    def f(v, yy):
        out = rhs(v, float(yy[0]) if scalar else yy)
        out = np.atleast_1d(np.asarray(out, dtype=float))
        if not np.all(np.isfinite(out)):
            raise StepRejected(f"non-finite derivative at v={v}")
        return out

    ctl = step_ctrl
    v = float(v0)
    k1 = f(v, y)
    h = ctl.first_step or min(ctl.max_step, (v1 - v0) / 64)
    vs, ys, ds = [v], [y.copy()], [k1.copy()]
    halvings = 0
    attempts = 0
    while v < v1:
        attempts += 1
        if attempts > ctl.max_steps:
            raise StiffnessError(f"step budget of {ctl.max_steps} exhausted at v={v:.6g}")
        h = min(h, v1 - v, ctl.max_step)
        if ctl.max_rel_step is not None:
            h = min(h, max(ctl.max_rel_step * abs(v), ctl.min_step))
        if h < ctl.min_step and v1 - v > ctl.min_step:
            raise StiffnessError(f"step size underflow at v={v:.6g}")
        try:
            K = [k1]
            for s in range(1, 7):
                ys_ = y + h * sum(a * K[r] for r, a in enumerate(_A[s]) if a != 0.0)
                K.append(f(v + _C[s] * h, ys_))
        except StepRejected:
            halvings += 1
            if halvings > ctl.max_halvings:
                raise StiffnessError(
                    f"right-hand side rejected {halvings} consecutive step halvings at v={v:.6g}")
            h *= 0.5
            continue
        y_new = ys_
        err = h * sum(e * K[r] for r, e in enumerate(_E) if e != 0.0)
        scale = ctl.atol + ctl.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.max(np.abs(err) / scale))
        if err_norm <= 1.0:
            if ctl.require_monotone and np.any(y_new < y - 1e-10):
                raise NonMonotone(f"solution decreases at v={v + h:.6g}")
            v = v1 if v1 - (v + h) < 1e-15 else v + h
            y = y_new
            k1 = K[6]
            vs.append(v)
            ys.append(y.copy())
            ds.append(k1.copy())
            halvings = 0
            factor = 5.0 if err_norm == 0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
        else:
            factor = max(0.2, 0.9 * err_norm ** -0.2)
        h *= factor

    vs = np.array(vs)
    Y = np.array(ys)
    D = np.array(ds)
    tables = []
    for c in range(Y.shape[1]):
        col = np.maximum.accumulate(Y[:, c]) if ctl.require_monotone else Y[:, c]
        tables.append(MonotoneTable(vs, col, slopes=D[:, c]))
    return tables[0] if scalar else tables


# ---------------------------------------------------------------------------
# Scalar roots
# ---------------------------------------------------------------------------

def find_root(f, lo, hi, ftol: float = 1e-10, xtol: float = 1e-12, max_iter: int = 200):
    """Bisection root of ``f`` on ``[lo, hi]``."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    if flo * fhi > 0:
        raise NoSignChange(f"f({lo})={flo:.3e} and f({hi})={fhi:.3e} share a sign")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= ftol or hi - lo <= xtol:
            return float(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return float(0.5 * (lo + hi))
