"""Emitter + SSH chain Hamiltonian in the single-excitation sector.

Energies are in units of the bare hopping J (J = 1), times in units of 1/J.
Basis ordering is fixed: index 0 is the excited emitter with an empty chain,
index n (1..N) is the emitter in its ground state with one boson on site n.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np


class ParameterDomainError(ValueError):
    """Raised when model parameters fall outside their allowed domain."""


class TopologyMismatchError(ValueError):
    """Raised when the spectrum does not have the expected in-gap structure."""


class NumericalError(RuntimeError):
    """Raised when a numerical routine fails (non-convergence, underflow...)."""


#: states with |E| < 2|delta| - GAP_EPS are counted as in-gap
GAP_EPS = 1e-6


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless system description.

    Parameters
    ----------
    N : int
        Number of chain sites.
    delta : float
        Dimerization; bonds alternate 1 - delta (odd bonds), 1 + delta (even).
    g : float
        Emitter-chain coupling.
    Delta : float
        Emitter transition frequency.
    """

    N: int = 201
    delta: float = 0.2
    g: float = 0.1
    Delta: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ParameterDomainError(f"N must be an integer >= 2, got {self.N!r}")
        if not np.isfinite(self.delta) or abs(self.delta) >= 1:
            raise ParameterDomainError(f"|delta| must be < 1, got {self.delta!r}")
        if not (np.isfinite(self.g) and np.isfinite(self.Delta)):
            raise ParameterDomainError("g and Delta must be finite")
        object.__setattr__(self, "N", int(self.N))

    @property
    def J_minus(self) -> float:
        return 1.0 - self.delta

    @property
    def J_plus(self) -> float:
        return 1.0 + self.delta

    @property
    def reflected(self) -> bool:
        """True when the emitter sits on the right end of the chain.

        For odd N and delta < 0 the zero mode lives on the right edge, so the
        emitter is attached to site N instead of site 1.
        """
        return self.N % 2 == 1 and self.delta < 0

    def emitter_bonds(self) -> tuple[float, float]:
        """Magnitudes of the first and second bond seen from the emitter."""
        if self.reflected:
            return self.J_plus, self.J_minus
        return self.J_minus, self.J_plus

    def with_value(self, which: str, value: float) -> "ModelParams":
        """Copy with ``g`` or ``delta`` replaced."""
        if which not in ("g", "delta"):
            raise ValueError(f"which must be 'g' or 'delta', got {which!r}")
        return dataclasses.replace(self, **{which: value})


@dataclass(frozen=True)
class DisorderSpec:
    """Off-diagonal disorder: one uniform draw in [-W/2, W/2] per bond."""

    W: float
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.W) or self.W < 0:
            raise ParameterDomainError(f"disorder strength must be >= 0, got {self.W!r}")

    def draw(self, n_bonds: int) -> np.ndarray:
        if self.W == 0:
            return np.zeros(n_bonds)
        rng = np.random.Generator(np.random.Philox(self.seed))
        return rng.uniform(-self.W / 2, self.W / 2, size=n_bonds)


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """Real symmetric tridiagonal (N+1)x(N+1) single-excitation Hamiltonian.

    ``diagonal`` and ``offdiagonal`` hold the band; ``bonds`` are the chain
    hoppings in site order (bond n couples sites n and n+1), including any
    disorder contribution.
    """

    params: ModelParams
    diagonal: np.ndarray
    offdiagonal: np.ndarray
    bonds: np.ndarray
    disorder: Optional[DisorderSpec] = None

    @property
    def dim(self) -> int:
        return self.diagonal.size

    @property
    def matrix(self) -> np.ndarray:
        h = np.diag(self.diagonal)
        idx = np.arange(self.dim - 1)
        h[idx, idx + 1] = self.offdiagonal
        h[idx + 1, idx] = self.offdiagonal
        return h

    def norm(self) -> float:
        """Cheap upper bound on the spectral norm (max absolute row sum)."""
        rows = np.abs(self.diagonal).copy()
        rows[:-1] += np.abs(self.offdiagonal)
        rows[1:] += np.abs(self.offdiagonal)
        return float(rows.max())

    def matmul(self, rho: np.ndarray) -> np.ndarray:
        """H @ rho using the band structure."""
        d = self.diagonal.reshape((-1,) + (1,) * (rho.ndim - 1))
        e = self.offdiagonal.reshape((-1,) + (1,) * (rho.ndim - 1))
        out = d * rho
        out[:-1] += e * rho[1:]
        out[1:] += e * rho[:-1]
        return out


def build_hamiltonian(params: ModelParams,
                      disorder: Optional[DisorderSpec] = None) -> Hamiltonian:
    """Assemble the single-excitation Hamiltonian.

    Bond n carries the matrix element -J_n + w_n with w_n the disorder draw.
    For odd N with delta < 0 the emitter couples to site N; the basis is then
    indexed from the right end (index 1 = site N), which keeps the matrix
    tridiagonal with the coupling adjacent to the emitter entry.
    """
    N = params.N
    n = np.arange(1, N)
    bonds = -np.where(n % 2 == 1, params.J_minus, params.J_plus)
    if disorder is not None:
        bonds = bonds + disorder.draw(N - 1)
    chain = bonds[::-1] if params.reflected else bonds
    diagonal = np.zeros(N + 1)
    diagonal[0] = params.Delta
    offdiagonal = np.concatenate(([params.g], chain))
    for arr in (diagonal, offdiagonal, bonds):
        arr.setflags(write=False)
    return Hamiltonian(params, diagonal, offdiagonal, bonds, disorder)


def chiral_operator(N: int) -> np.ndarray:
    """Diagonal of the sublattice operator: +1 on the emitter, (-1)^n on site n."""
    if N < 2:
        raise ParameterDomainError(f"N must be >= 2, got {N}")
    signs = np.ones(N + 1)
    signs[1::2] = -1.0
    return signs


def chiral_residual(H: Hamiltonian) -> float:
    """max |C H C + H| over all entries."""
    # reflected basis: index n is site N+1-n and (-1)^(N+1-n) = (-1)^n for odd N
    c = chiral_operator(H.params.N)
    h = H.matrix
    return float(np.abs(c[:, None] * h * c[None, :] + h).max())


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenpairs with ascending energies; column k of ``vectors`` is state k."""

    energies: np.ndarray
    vectors: np.ndarray

    @property
    def emitter_amplitudes(self) -> np.ndarray:
        return self.vectors[0]

    @property
    def emitter_weights(self) -> np.ndarray:
        """|c_k|^2, overlap of each eigenstate with the excited emitter."""
        return self.vectors[0] ** 2


def eigendecompose(H: Hamiltonian) -> Spectrum:
    """Dense symmetric eigendecomposition."""
    try:
        energies, vectors = np.linalg.eigh(H.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    return Spectrum(energies, vectors)


def in_gap_mask(energies: np.ndarray, delta: float, eps: float = GAP_EPS) -> np.ndarray:
    return np.abs(energies) < 2 * abs(delta) - eps


def emitter_spectral_data(H: Hamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """Energies and emitter weights via the tridiagonal solver.

    This is the fast route used when many Hamiltonians must be diagonalized
    (posterior grids, finite-difference Fisher information).
    """
    from scipy.linalg import eigh_tridiagonal

    try:
        energies, vectors = eigh_tridiagonal(
            np.array(H.diagonal), np.array(H.offdiagonal), lapack_driver="stemr")
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"tridiagonal eigensolver failed: {exc}") from exc
    return energies, vectors[0] ** 2
