"""Closed-form and numerical description of the in-gap bound-state pair."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import (ModelParams, ParameterDomainError, Spectrum,
                    TopologyMismatchError, in_gap_mask)


class OutOfGapError(ParameterDomainError):
    """The emitter frequency is not inside the middle gap (|g| >= 2|delta|)."""


class FiniteSizeWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class BoundStatePair:
    """The two bound states at energies +E_B and -E_B.

    ``amplitudes_plus``/``amplitudes_minus`` are unit vectors in the
    single-excitation basis, gauge-fixed so that the emitter entry is >= 0.
    """

    E_B: float
    b: float
    q: float
    d1: float
    d2: float
    amplitudes_plus: np.ndarray
    amplitudes_minus: np.ndarray


def _check_analytic(params: ModelParams) -> tuple[float, float, float]:
    if params.Delta != 0:
        raise ParameterDomainError("closed-form bound states require Delta = 0")
    g = params.g
    if g == 0:
        raise ParameterDomainError("g = 0: emitter decoupled, bound-state pair undefined")
    if abs(g) >= 2 * abs(params.delta):
        raise OutOfGapError(
            f"|g| = {abs(g)} must be below the gap half-width 2|delta| = {2 * abs(params.delta)}")
    a, c = params.emitter_bonds()
    q = a * c / (g * g - c * c)
    if abs(q) >= 1:
        raise TopologyMismatchError(
            "no zero mode on the emitter side of the chain (even N with delta < 0)")
    return a, c, q


def siegert_factor(params: ModelParams) -> float:
    """Per-unit-cell decay factor q = J_- J_+ / (g^2 - J_+^2)."""
    return _check_analytic(params)[2]


def analytic_bound_energy(params: ModelParams) -> float:
    a, c, _ = _check_analytic(params)
    g = params.g
    return abs(g) * np.sqrt(1.0 + a * a / (g * g - c * c))


def analytic_overlap(params: ModelParams) -> float:
    """Magnitude b of the overlap between each bound state and the excited emitter."""
    a, c, q = _check_analytic(params)
    g = params.g
    E = analytic_bound_energy(params)
    bracket = E * E + ((g * g - E * E) / a) ** 2
    return 1.0 / np.sqrt(1.0 + bracket / (g * g * (1.0 - q * q)))


def _amplitudes(params: ModelParams, sign: int, E: float, b: float, q: float) -> np.ndarray:
    a, _ = params.emitter_bonds()
    g = params.g
    energy = sign * E
    d1 = energy * b / (q * g)
    d2 = (g * g - energy * energy) / a * b / (q * g)
    n = np.arange(1, params.N + 1)
    # sites (n, n+1) for odd n carry q^((n+1)/2) * (d1, d2)
    cells = np.where(n % 2 == 1, (n + 1) // 2, n // 2)
    vec = np.empty(params.N + 1)
    vec[0] = b
    vec[1:] = np.where(n % 2 == 1, d1, d2) * q ** cells
    return vec / np.linalg.norm(vec)


def analytic_wavefunction(params: ModelParams, sign: int = +1) -> np.ndarray:
    """Siegert-ansatz amplitudes of the bound state at energy sign * E_B.

    The ansatz is exact on a semi-infinite chain; on N sites the tail is cut
    and the vector renormalized. A FiniteSizeWarning is issued when the
    truncated weight is not negligible.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    _, _, q = _check_analytic(params)
    if abs(q) ** (params.N / 2) >= 1e-8:
        warnings.warn(
            f"N = {params.N} too short for |q| = {abs(q):.3f}; truncation is not negligible",
            FiniteSizeWarning, stacklevel=2)
    E = analytic_bound_energy(params)
    b = analytic_overlap(params)
    return _amplitudes(params, sign, E, b, q)


def analytic_pair(params: ModelParams) -> BoundStatePair:
    a, c, q = _check_analytic(params)
    E = analytic_bound_energy(params)
    b = analytic_overlap(params)
    g = params.g
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FiniteSizeWarning)
        plus = analytic_wavefunction(params, +1)
        minus = analytic_wavefunction(params, -1)
    d1 = E * b / (q * g)
    d2 = (g * g - E * E) / a * b / (q * g)
    return BoundStatePair(E, b, q, d1, d2, plus, minus)


def expected_in_gap_count(params: ModelParams) -> int:
    if params.N % 2 == 1:
        return 2
    if params.delta > 0:
        return 3
    raise TopologyMismatchError("even N with delta <= 0 has no zero mode next to the emitter")


def numeric_bound_states(spectrum: Spectrum, params: ModelParams) -> BoundStatePair:
    """Pick the bound-state pair out of an exact spectrum.

    Among the in-gap states the positive- and negative-energy states with the
    largest emitter component are selected. For even N this skips the
    far-edge zero mode, which has no weight on the emitter. Couplings with
    |g| >= 2|delta| are rejected: a state pair can survive inside the gap
    there, but it is no longer the weak-coupling pair this module describes.
    """
    if abs(params.g) >= 2 * abs(params.delta):
        raise TopologyMismatchError(
            f"|g| = {abs(params.g)} is outside the gap regime |g| < {2 * abs(params.delta)}")
    expected = expected_in_gap_count(params)
    mask = in_gap_mask(spectrum.energies, params.delta)
    found = int(mask.sum())
    if found != expected:
        raise TopologyMismatchError(
            f"expected {expected} in-gap eigenvalues, found {found}")
    idx = np.flatnonzero(mask)
    amp = np.abs(spectrum.emitter_amplitudes)
    pos = [k for k in idx if spectrum.energies[k] > 0]
    neg = [k for k in idx if spectrum.energies[k] < 0]
    if not pos or not neg:
        raise TopologyMismatchError("in-gap states do not form a +/- pair")
    kp = max(pos, key=lambda k: amp[k])
    km = max(neg, key=lambda k: amp[k])

    def gauge(v):
        return v if v[0] >= 0 else -v

    plus = gauge(spectrum.vectors[:, kp].copy())
    minus = gauge(spectrum.vectors[:, km].copy())
    E = 0.5 * (spectrum.energies[kp] - spectrum.energies[km])
    b = 0.5 * (amp[kp] + amp[km])
    q = plus[3] / plus[1]
    return BoundStatePair(float(E), float(b), float(q), plus[1] / q, plus[2] / q, plus, minus)
