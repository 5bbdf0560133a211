"""Classical Fisher information of the excited/ground emitter measurement."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundstates import _check_analytic, analytic_bound_energy, analytic_overlap
from .dynamics import TimeGrid, population_from_spectral
from .model import ModelParams, ParameterDomainError, build_hamiltonian, emitter_spectral_data

PARAMETERS = ("g", "delta")
#: points with P1 (1 - P1) below this are masked
MASK_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class FisherTrace:
    grid: TimeGrid
    values: np.ndarray  # nan where masked
    parameter_name: str
    mask: np.ndarray  # True where valid


def _check_which(which: str):
    if which not in PARAMETERS:
        raise ValueError(f"parameter must be one of {PARAMETERS}, got {which!r}")


def bound_energy_derivative(params: ModelParams, which: str) -> float:
    """d E_B / d g or d E_B / d delta from the closed form for E_B."""
    _check_which(which)
    a, c, _ = _check_analytic(params)
    g = params.g
    den = g * g - c * c
    u = 1.0 + a * a / den
    if which == "g":
        du = -2.0 * g * a * a / den ** 2
        return float(np.sign(g) * np.sqrt(u) + abs(g) * du / (2 * np.sqrt(u)))
    # a = 1 - s delta, c = 1 + s delta; s = -1 when the emitter sits on the right
    s = -1.0 if params.reflected else 1.0
    da, dc = -s, s
    du = (2 * a * da * den + 2 * a * a * c * dc) / den ** 2
    return float(abs(g) * du / (2 * np.sqrt(u)))


def dip_factor(params: ModelParams, t):
    """A(t) = 4b^4 sin^2(E_B t) / (1 - 4b^4 cos^2(E_B t)); lies in [0, 4b^4]."""
    E = analytic_bound_energy(params)
    b4 = 4 * analytic_overlap(params) ** 4
    phase = E * np.asarray(t, dtype=float)
    return b4 * np.sin(phase) ** 2 / (1.0 - b4 * np.cos(phase) ** 2)


def fisher_approx(params: ModelParams, which: str, t):
    """4 (dE_B/dx)^2 A(t) t^2."""
    t = np.asarray(t, dtype=float)
    return 4 * bound_energy_derivative(params, which) ** 2 * dip_factor(params, t) * t ** 2


def rabi_fisher(params: ModelParams, which: str, t):
    """Fisher information of an ideal Rabi oscillation, 4 (dE_B/dx)^2 t^2."""
    t = np.asarray(t, dtype=float)
    return 4 * bound_energy_derivative(params, which) ** 2 * t ** 2


def population(params: ModelParams, t, disorder=None) -> np.ndarray:
    energies, weights = emitter_spectral_data(build_hamiltonian(params, disorder))
    return population_from_spectral(energies, weights, t)


def fisher_numeric(params: ModelParams, which: str, grid: TimeGrid, step: float = 1e-5,
                   require_gap: bool = True) -> FisherTrace:
    """Fisher information from the exact P1 with a central-difference derivative.

    Two extra diagonalizations at x +/- step. With ``require_gap`` both shifted
    points must satisfy the in-gap condition.
    """
    _check_which(which)
    if step <= 0:
        raise ParameterDomainError("finite-difference step must be positive")
    x = getattr(params, which)
    lo, hi = params.with_value(which, x - step), params.with_value(which, x + step)
    if require_gap:
        for p in (lo, hi):
            if p.g == 0 or abs(p.g) >= 2 * abs(p.delta):
                raise ParameterDomainError(
                    f"{which} +/- {step} leaves the in-gap domain (g={p.g}, delta={p.delta})")
    t = grid.t
    dp = (population(hi, t) - population(lo, t)) / (2 * step)
    p1 = population(params, t)
    var = p1 * (1.0 - p1)
    mask = var >= MASK_FLOOR
    values = np.full(t.shape, np.nan)
    values[mask] = dp[mask] ** 2 / var[mask]
    return FisherTrace(grid, values, which, mask)


def period_maxima(trace: FisherTrace, period: float, t_min: float, t_max: float):
    """(time, value) of the largest valid Fisher value between consecutive
    dips k * period, restricted to [t_min, t_max]."""
    t = trace.grid.t
    v = np.where(trace.mask, trace.values, -np.inf)
    edges = np.arange(0.0, t_max + period, period)
    edges = np.unique(np.clip(edges, t_min, t_max))
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (t >= lo) & (t <= hi)
        if sel.sum() < 3:
            continue
        k = np.flatnonzero(sel)[np.argmax(v[sel])]
        out.append((t[k], trace.values[k]))
    return np.array(out)


def envelope(trace: FisherTrace, t_lo: float, t_hi: float) -> float:
    """Largest valid Fisher value within [t_lo, t_hi]."""
    t = trace.grid.t
    sel = (t >= t_lo) & (t <= t_hi) & trace.mask
    return float(np.max(trace.values[sel]))


def locate_dips(trace: FisherTrace, period: float, t_max: float | None = None,
                half_width: float | None = None) -> np.ndarray:
    """Refined positions of the Fisher minima near t = k * period, k >= 1.

    The grid minimum inside +/- ``half_width`` (default period / 4) of each
    predicted dip is refined by a parabola through it and its neighbours.
    Masked points count as zeros.
    """
    t = trace.grid.t
    v = np.where(trace.mask, trace.values, 0.0)
    t_max = t[-1] if t_max is None else t_max
    half_width = period / 4 if half_width is None else half_width
    out = []
    for k in range(1, int(t_max / period) + 1):
        sel = np.flatnonzero(np.abs(t - k * period) <= half_width)
        if sel.size < 3:
            continue
        i = sel[np.argmin(v[sel])]
        if 0 < i < t.size - 1:
            x0, x1, x2 = t[i - 1:i + 2]
            y0, y1, y2 = v[i - 1:i + 2]
            den = (x0 - x1) * (x0 - x2) * (x1 - x2)
            a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
            bq = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den
            out.append(-bq / (2 * a) if a > 0 else t[i])
        else:
            out.append(t[i])
    return np.array(out)
