"""Emitter population dynamics: exact unitary evolution, closed-form
approximations, and pure dephasing of the emitter.

The initial state is always the excited emitter with an empty chain (basis
index 0). The global ground state is not part of the state space; neither the
Hamiltonian nor the dephasing jump operator couples to it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .boundstates import analytic_bound_energy, analytic_overlap
from .model import Hamiltonian, ModelParams, NumericalError, ParameterDomainError, Spectrum

PROB_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing, finite, nonnegative evolution times."""

    t: np.ndarray

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.t, dtype=float))
        if t.ndim != 1 or t.size == 0:
            raise ParameterDomainError("time grid must be a non-empty 1-d array")
        if not np.all(np.isfinite(t)) or t[0] < 0:
            raise ParameterDomainError("times must be finite and nonnegative")
        if np.any(np.diff(t) <= 0):
            raise ParameterDomainError("times must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    @classmethod
    def linspace(cls, t_max: float, n: int, t_min: float = 0.0) -> "TimeGrid":
        return cls(np.linspace(t_min, t_max, n))

    @property
    def step(self) -> float:
        return float(np.min(np.diff(self.t))) if self.t.size > 1 else 0.0

    def __len__(self):
        return self.t.size


@dataclass(frozen=True, eq=False)
class OccupationTrace:
    """Excited-emitter population on a time grid.

    ``p1`` is clamped to [0, 1]; ``raw`` keeps the unclamped values.
    """

    grid: TimeGrid
    p1: np.ndarray
    raw: np.ndarray = field(repr=False, default=None)

    @classmethod
    def from_raw(cls, grid: TimeGrid, raw: np.ndarray) -> "OccupationTrace":
        raw = np.asarray(raw, dtype=float)
        bad = (raw < -PROB_TOL) | (raw > 1 + PROB_TOL)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise NumericalError(f"population {raw[k]!r} out of range at t = {grid.t[k]}")
        return cls(grid, np.clip(raw, 0.0, 1.0), raw)


def population_from_spectral(energies: np.ndarray, weights: np.ndarray, t) -> np.ndarray:
    """|sum_k w_k exp(-i E_k t)|^2 for (stacks of) spectra and times.

    ``energies``/``weights`` have shape (..., dim); the result has shape
    (..., len(t)) for array ``t`` and (...) for scalar ``t``.
    """
    t = np.asarray(t, dtype=float)
    phase = np.exp(-1j * energies[..., None, :] * np.atleast_1d(t)[:, None])
    amp = phase @ weights[..., :, None]
    p = np.abs(amp[..., 0]) ** 2
    return p[..., 0] if t.ndim == 0 else p


def survival_amplitude(spectrum: Spectrum, t):
    """S(t) = sum_k |c_k|^2 exp(-i E_k t); scalar or array ``t``."""
    t_arr = np.asarray(t, dtype=float)
    S = np.exp(-1j * np.multiply.outer(t_arr, spectrum.energies)) @ spectrum.emitter_weights
    return complex(S) if t_arr.ndim == 0 else S


def excited_population(spectrum: Spectrum, grid: TimeGrid) -> OccupationTrace:
    S = survival_amplitude(spectrum, grid.t)
    return OccupationTrace.from_raw(grid, np.abs(S) ** 2)


def approx_survival(params: ModelParams, t):
    """Two-level approximation 2 b^2 cos(E_B t), bulk states dropped."""
    b = analytic_overlap(params)
    return 2 * b * b * np.cos(analytic_bound_energy(params) * np.asarray(t, dtype=float))


def approx_population(params: ModelParams, t):
    """4 b^4 cos^2(E_B t)."""
    return approx_survival(params, t) ** 2


def rabi_reference(params: ModelParams, t):
    """Ideal Rabi population cos^2(E_B t) used as a baseline."""
    return np.cos(analytic_bound_energy(params) * np.asarray(t, dtype=float)) ** 2


# -- dephasing ---------------------------------------------------------------

def _lindblad_rhs(H: Hamiltonian, rho: np.ndarray, gamma: float) -> np.ndarray:
    A = H.matmul(rho)
    out = -1j * (A - A.conj().T)
    # gamma (P rho P - {P, rho}/2) with P = |0><0| only damps row/column 0
    if gamma:
        out[0, 1:] -= 0.5 * gamma * rho[0, 1:]
        out[1:, 0] -= 0.5 * gamma * rho[1:, 0]
    return out


def _rk4_populations(H: Hamiltonian, gamma: float, times: np.ndarray, h: float):
    rho = np.zeros((H.dim, H.dim), dtype=complex)
    rho[0, 0] = 1.0
    out = np.empty(times.size)
    t_now = 0.0
    max_trace_err = 0.0
    for i, T in enumerate(times):
        span = T - t_now
        if span > 0:
            n = int(np.ceil(span / h - 1e-9))
            dt = span / n
            if dt < 1e-9:
                raise NumericalError(f"step underflow at t = {t_now}")
            for _ in range(n):
                k1 = _lindblad_rhs(H, rho, gamma)
                k2 = _lindblad_rhs(H, rho + 0.5 * dt * k1, gamma)
                k3 = _lindblad_rhs(H, rho + 0.5 * dt * k2, gamma)
                k4 = _lindblad_rhs(H, rho + dt * k3, gamma)
                rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(rho[0])):
                raise NumericalError(f"integration diverged at t = {T}")
            t_now = T
        out[i] = rho[0, 0].real
        max_trace_err = max(max_trace_err, abs(np.trace(rho).real - 1.0))
    herm_err = float(np.abs(rho - rho.conj().T).max())
    return out, max_trace_err, herm_err


def default_lindblad_step(H: Hamiltonian, gamma: float) -> float:
    return min(0.01, 0.1 / max(H.norm(), gamma))


def lindblad_evolve(H: Hamiltonian, gamma: float, grid: TimeGrid, step: float | None = None,
                    check: bool = True, rtol: float = 1e-7) -> OccupationTrace:
    """Integrate the emitter-dephasing master equation with fixed-step RK4.

    The step defaults to min(0.01, 0.1 / max(||H||, gamma)). With ``check``
    the run is repeated at half the step and the final-time populations must
    agree within ``rtol``; otherwise the step is halved again (down to 1e-6).
    The returned populations come from the finest accepted run.
    """
    if gamma < 0:
        raise ParameterDomainError(f"dephasing rate must be >= 0, got {gamma}")
    h = default_lindblad_step(H, gamma) if step is None else float(step)
    p, trace_err, herm_err = _rk4_populations(H, gamma, grid.t, h)
    while check:
        p_half, trace_err, herm_err = _rk4_populations(H, gamma, grid.t, h / 2)
        if abs(p_half[-1] - p[-1]) < rtol:
            p = p_half
            break
        h /= 2
        p = p_half
        if h < 1e-6:
            raise NumericalError(f"step underflow: no convergence at t = {grid.t[-1]}")
    if trace_err > 1e-9 or herm_err > 1e-9:
        raise NumericalError(
            f"density matrix drifted (trace err {trace_err:.2e}, hermiticity err {herm_err:.2e})")
    return OccupationTrace.from_raw(grid, p)


def no_jump_population(H: Hamiltonian, gamma: float, t: np.ndarray) -> np.ndarray:
    """|<0| exp(-i H_eff t) |0>|^2 with H_eff = H - i gamma/2 |0><0|."""
    from scipy.linalg import eig

    h_eff = H.matrix.astype(complex)
    h_eff[0, 0] -= 0.5j * gamma
    try:
        lam, V = eig(h_eff)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"non-Hermitian eigensolver failed: {exc}") from exc
    # complex-symmetric matrix: left eigenvectors are the transposed right ones
    norm = np.einsum("ik,ik->k", V, V)
    w = V[0] ** 2 / norm
    amp = np.exp(-1j * np.multiply.outer(t, lam)) @ w
    return np.abs(amp) ** 2


def renewal_population(H: Hamiltonian, gamma: float, grid: TimeGrid,
                       dt: float = 0.01) -> np.ndarray:
    """Dephased emitter population from the renewal equation.

    Each dephasing jump projects the state back onto the initial state
    |0><0|, so P(t) = f(t) + gamma * int_0^t f(t - s) P(s) ds with f the
    no-jump population. The integral is solved with the trapezoid rule on a
    uniform mesh of step ``dt`` and interpolated onto ``grid``.

    This is exact up to quadrature error and much cheaper than integrating
    the density matrix, which makes it usable for whole posterior grids.
    """
    if gamma < 0:
        raise ParameterDomainError(f"dephasing rate must be >= 0, got {gamma}")
    t_max = float(grid.t[-1])
    n = max(int(np.ceil(t_max / dt)), 4)
    mesh = np.linspace(0.0, t_max, n + 1)
    h = mesh[1]
    f = no_jump_population(H, gamma, mesh)
    if gamma == 0:
        P = f
    else:
        P = np.empty_like(f)
        P[0] = f[0]
        denom = 1.0 - 0.5 * gamma * h * f[0]
        for k in range(1, n + 1):
            # sum_{j=1}^{k-1} f[k-j] P[j]
            inner = np.dot(f[k - 1:0:-1], P[1:k]) if k > 1 else 0.0
            P[k] = (f[k] + gamma * h * (0.5 * f[k] * P[0] + inner)) / denom
    return CubicSpline(mesh, P)(grid.t)


def dephased_population(H: Hamiltonian, gamma: float, grid: TimeGrid,
                        dt: float = 0.01) -> OccupationTrace:
    return OccupationTrace.from_raw(grid, renewal_population(H, gamma, grid, dt))
