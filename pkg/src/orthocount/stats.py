"""Empirical verification statistics: exponential fits, uniformity and
product-measure tests on perpendicular endpoint data, and the pushforward of
the cusp normal bundle against normalized hyperbolic area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .groups import GroupSpec, NonModularGroup, reduce_batch


class StatsError(Exception):
    pass


class DegenerateData(StatsError):
    pass


class RatiosAlreadyConverged(StatsError):
    pass


@dataclass
class CountReport:
    t_grid: list
    N_values: list
    prediction_values: list
    ratios: list
    fitted_log_c: Optional[float]
    fitted_delta: Optional[float]
    fitted_kappa: Optional[float] = None
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "t_grid": list(self.t_grid),
            "N_values": list(self.N_values),
            "prediction_values": list(self.prediction_values),
            "ratios": list(self.ratios),
            "fitted": {"log_c": self.fitted_log_c, "delta": self.fitted_delta},
            "fitted_kappa": self.fitted_kappa,
            "provenance": dict(self.provenance),
        }


def exponential_fit(t, N):
    """Least squares of log N against t; returns (log_c, delta, residual)
    with residual the max absolute deviation of log N from the fit."""
    t = np.asarray(t, dtype=np.float64)
    N = np.asarray(N, dtype=np.float64)
    if len(t) < 4:
        raise DegenerateData("need at least 4 points")
    if (N <= 0).any():
        raise DegenerateData("counts must be positive")
    if np.ptp(t) <= 0:
        raise DegenerateData("degenerate t grid")
    y = np.log(N)
    A = np.stack([t, np.ones_like(t)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.abs(y - A @ coef).max())
    return float(coef[1]), float(coef[0]), resid


def make_count_report(t_grid, N_values, prediction_values, provenance=None) -> CountReport:
    t_grid = [float(x) for x in t_grid]
    N_values = [float(x) for x in N_values]
    prediction_values = [float(x) for x in prediction_values]
    ratios = [n / p if p != 0 else float("inf") for n, p in zip(N_values, prediction_values)]
    try:
        log_c, delta, _ = exponential_fit(t_grid, N_values)
    except DegenerateData:
        log_c = delta = None  # fit needs 4 positive points; ratios still stand
    return CountReport(t_grid, N_values, prediction_values, ratios, log_c, delta, None, provenance or {})


def ks_uniform(samples, weights=None) -> float:
    """Kolmogorov-Smirnov sup-gap of the (weighted) empirical CDF against the
    uniform law on [0, 1)."""
    x = np.asarray(samples, dtype=np.float64)
    if len(x) == 0:
        raise StatsError("empty sample")
    if weights is None:
        w = np.full(len(x), 1.0 / len(x))
    else:
        w = np.asarray(weights, dtype=np.float64)
        w = w / w.sum()
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order]
    cdf = np.cumsum(ws)
    gap_hi = np.abs(cdf - xs)
    gap_lo = np.abs(np.concatenate([[0.0], cdf[:-1]]) - xs)
    return float(max(gap_hi.max(), gap_lo.max()))


@dataclass
class PairSample:
    """Initial/terminal vector pairs with weights."""

    pairs: list  # (v_minus: UnitTangent, v_plus: UnitTangent, weight)

    def arrays(self, coord_minus, coord_plus):
        xm = np.array([coord_minus(v) for v, _, _ in self.pairs])
        xp = np.array([coord_plus(w) for _, w, _ in self.pairs])
        wt = np.array([w for _, _, w in self.pairs], dtype=np.float64)
        if (wt <= 0).any():
            raise StatsError("pair weights must be positive")
        return xm, xp, wt


def pair_product_check(xm, xp=None, weights=None, bins_minus=8, bins_plus=8, range_m=(0.0, 1.0), range_p=(0.0, 1.0),
                       coord_minus=None, coord_plus=None):
    """Total-variation distance between the weighted 2D histogram of
    (initial, terminal) coordinates and the product of its marginals.
    Accepts coordinate arrays or a PairSample plus coordinate maps."""
    if isinstance(xm, PairSample):
        default = lambda v: float(np.real(v.base.z))
        xm, xp, weights = xm.arrays(coord_minus or default, coord_plus or default)
    xm = np.asarray(xm, dtype=np.float64)
    xp = np.asarray(xp, dtype=np.float64)
    H, _, _ = np.histogram2d(xm, xp, bins=[bins_minus, bins_plus], range=[range_m, range_p], weights=weights)
    total = H.sum()
    if total <= 0:
        raise StatsError("empty histogram")
    H = H / total
    row = H.sum(axis=1, keepdims=True)
    col = H.sum(axis=0, keepdims=True)
    if (row == 0).any() or (col == 0).any():
        pass  # empty marginal bins are allowed, flagged by the caller if needed
    return float(0.5 * np.abs(H - row * col).sum())


# ---------------------------------------------------------------------------
# pushforward of the cusp normal bundle vs normalized hyperbolic area


def _fundamental_cells(nx=8, y_max=10.0):
    """Cell decomposition of the modular fundamental domain truncated at
    y <= y_max: nx columns in x, 8 bands in y (a boundary sliver between the
    unit circle and y=1, then geometric bands), plus the analytic cusp tail."""
    xs = np.linspace(-0.5, 0.5, nx + 1)
    ys = np.concatenate([[math.sqrt(3.0) / 2.0, 1.0], np.geomspace(1.0, y_max, 8)[1:]])
    return xs, ys  # 8 bands x nx columns (64 cells by default) + analytic tail


def _cell_mass(x0, x1, ylo, yhi):
    """Hyperbolic area of {x0<=x<x1, max(ylo, sqrt(1-x^2)) <= y < yhi} for the
    dx dy / y^2 measure, in closed form (arcsin for the circle boundary)."""

    def flo(x0_, x1_, y):
        # integral over [x0_, x1_] of 1/max(y, circ(x)) dx
        a = math.sqrt(max(1.0 - y * y, 0.0)) if y < 1.0 else 0.0
        lo, hi = max(x0_, -a), min(x1_, a)
        total = 0.0
        if hi > lo:
            total += math.asin(hi) - math.asin(lo)  # 1/sqrt(1-x^2) part
            total += (max(lo - x0_, 0.0) + max(x1_ - hi, 0.0)) / y
        else:
            total += (x1_ - x0_) / y
        return total

    return flo(x0, x1, ylo) - (x1 - x0) / yhi


def fundamental_cell_masses(nx=8, y_max=10.0):
    """Normalized reference masses: nx*8 cells plus the cusp tail (last)."""
    xs, ys = _fundamental_cells(nx, y_max)
    masses = []
    for j in range(len(ys) - 1):
        for i in range(nx):
            masses.append(_cell_mass(xs[i], xs[i + 1], ys[j], ys[j + 1]))
    masses.append(1.0 / y_max)  # cusp tail: integral of dx dy/y^2 over y > y_max
    masses = np.array(masses)
    total = masses.sum()
    assert abs(total - math.pi / 3.0) < 1e-9, "fundamental domain area check"
    return masses / total


def flow_pushforward_check(family, G: GroupSpec, t: float, n_samples: int, nx=8, y_max=10.0, seed=0):
    """Push the uniform measure on the canonical piece of the cusp family's
    outer normal bundle forward by the time-t flow, reduce to the fundamental
    domain, and return the total-variation distance of the cell histogram from
    normalized hyperbolic area."""
    if G.kind != "modular":
        raise NonModularGroup("pushforward check needs the modular preset")
    if family.kind != "cusp":
        raise StatsError("pushforward check needs a cusp family")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, family.period, size=n_samples)
    # downward normals on the height-level horosphere flow to height e^{-t}
    level = family.base.level
    y = np.full(n_samples, level * math.exp(-t))
    xr, yr = reduce_batch(x, y)
    xs, ys = _fundamental_cells(nx, y_max)
    masses = fundamental_cell_masses(nx, y_max)
    xi = np.clip(np.searchsorted(xs, xr, side="right") - 1, 0, nx - 1)
    yi = np.searchsorted(ys, yr, side="right") - 1
    counts = np.zeros(len(masses))
    tail = yi >= len(ys) - 1
    inside = ~tail & (yi >= 0)
    idx = yi[inside] * nx + xi[inside]
    np.add.at(counts, idx, 1.0)
    counts[-1] = tail.sum()
    counts /= counts.sum()
    return float(0.5 * np.abs(counts - masses).sum())


def convergence_rate(report: CountReport, threshold=1e-12):
    """Fitted decay rate of |ratio - 1| against t (diagnostic only)."""
    t = np.asarray(report.t_grid, dtype=np.float64)
    r = np.abs(np.asarray(report.ratios, dtype=np.float64) - 1.0)
    mask = r > threshold
    if not mask.any():
        raise RatiosAlreadyConverged("all ratios within threshold of 1")
    if mask.sum() < 2:
        raise RatiosAlreadyConverged("not enough unconverged ratios to fit")
    tt, rr = t[mask], np.log(r[mask])
    A = np.stack([tt, np.ones_like(tt)], axis=1)
    coef, *_ = np.linalg.lstsq(A, rr, rcond=None)
    return float(-coef[0])
