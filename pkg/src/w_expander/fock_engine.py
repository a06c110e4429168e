"""Multi-photon transition amplitudes of passive linear optics.

Modes are polarization-resolved: spatial mode ``j`` (1-based) carries an H and a
V mode, flattened spatial-major with H first, so ``flat = 2*(j-1) + pol``.
A mode unitary ``U`` maps input creation operators to output ones,
``a_c^dagger -> sum_r U[r, c] b_r^dagger``.
"""

from __future__ import annotations

import enum
import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "Polarization",
    "PolarizedMode",
    "FockState",
    "ModeUnitary",
    "UnitarityViolation",
    "PhotonNumberWarning",
    "permanent",
    "transition_amplitude",
    "check_unitary",
    "fock_states",
]


class Polarization(enum.IntEnum):
    H = 0
    V = 1


@dataclass(frozen=True)
class PolarizedMode:
    spatial: int
    polarization: Polarization

    def __post_init__(self) -> None:
        if self.spatial < 1:
            raise DomainError(f"spatial mode index must be >= 1, got {self.spatial}")
        object.__setattr__(self, "polarization", Polarization(self.polarization))

    @property
    def flat(self) -> int:
        return 2 * (self.spatial - 1) + int(self.polarization)

    @classmethod
    def from_flat(cls, index: int) -> "PolarizedMode":
        if index < 0:
            raise DomainError(f"flat mode index must be >= 0, got {index}")
        return cls(index // 2 + 1, Polarization(index % 2))

    def __str__(self) -> str:
        return f"{self.spatial}{self.polarization.name}"


@dataclass(frozen=True)
class FockState:
    """Occupation numbers indexed by flat mode."""

    occupations: tuple[int, ...]

    def __post_init__(self) -> None:
        occ = tuple(int(k) for k in self.occupations)
        if any(k < 0 for k in occ):
            raise DomainError(f"occupations must be non-negative, got {occ}")
        object.__setattr__(self, "occupations", occ)

    @property
    def total_photons(self) -> int:
        return sum(self.occupations)

    @property
    def dim(self) -> int:
        return len(self.occupations)

    @classmethod
    def from_modes(cls, dim: int, photons: dict[int | PolarizedMode, int]) -> "FockState":
        """Build a state of ``dim`` flat modes from ``{mode: count}``."""
        occ = [0] * dim
        for mode, count in photons.items():
            index = mode.flat if isinstance(mode, PolarizedMode) else int(mode)
            if not 0 <= index < dim:
                raise DimensionError(f"mode {mode} outside 0..{dim - 1}")
            occ[index] += count
        return cls(tuple(occ))

    def mode_list(self) -> list[int]:
        """Flat mode indices with multiplicity, e.g. (2, 0, 1) -> [0, 0, 2]."""
        return [i for i, k in enumerate(self.occupations) for _ in range(k)]


class ModeUnitary:
    """Square complex matrix over ``2L`` polarization modes."""

    __slots__ = ("_matrix",)

    def __init__(self, matrix) -> None:
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"mode unitary must be square, got shape {m.shape}")
        if m.shape[0] % 2:
            raise DimensionError(f"mode unitary must cover H and V of each spatial mode, got dim {m.shape[0]}")
        m.setflags(write=False)
        self._matrix = m

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @property
    def L(self) -> int:
        return self.dim // 2

    def dagger(self) -> "ModeUnitary":
        return ModeUnitary(self._matrix.conj().T)

    def column(self, mode: PolarizedMode | int) -> np.ndarray:
        index = mode.flat if isinstance(mode, PolarizedMode) else mode
        return self._matrix[:, index].copy()

    def __matmul__(self, other: "ModeUnitary") -> "ModeUnitary":
        return ModeUnitary(self._matrix @ other._matrix)

    def __repr__(self) -> str:
        return f"ModeUnitary(L={self.L})"


@dataclass(frozen=True)
class UnitarityViolation:
    i: int
    j: int
    magnitude: float


class PhotonNumberWarning(UserWarning):
    """Raised (as a warning) when input and output photon numbers differ."""


def permanent(matrix) -> complex:
    """Permanent via Ryser's formula with Gray-code subset iteration.

    Runs in O(2^d * d). Successive column subsets differ by one column, so the
    row sums are updated incrementally instead of recomputed.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"permanent needs a square matrix, got shape {m.shape}")
    d = m.shape[0]
    if d == 0:
        return 1.0 + 0.0j
    if d == 1:
        return complex(m[0, 0])
    if d == 2:
        return complex(m[0, 0] * m[1, 1] + m[0, 1] * m[1, 0])

    cols = [m[:, k] for k in range(d)]
    row_sums = np.zeros(d, dtype=complex)
    total = 0.0 + 0.0j
    prev_gray = 0
    # per(M) = (-1)^d * sum_{S} (-1)^{|S|} prod_i sum_{k in S} M[i, k]
    for step in range(1, 1 << d):
        gray = step ^ (step >> 1)
        changed = gray ^ prev_gray
        k = changed.bit_length() - 1
        if gray & changed:
            row_sums += cols[k]
        else:
            row_sums -= cols[k]
        prev_gray = gray
        term = row_sums.prod()
        if bin(gray).count("1") & 1:
            total -= term
        else:
            total += term
    return complex(total if d % 2 == 0 else -total)


def _as_matrix(U) -> np.ndarray:
    return U.matrix if isinstance(U, ModeUnitary) else np.asarray(U, dtype=complex)


def transition_amplitude(U, input_state: FockState, output_state: FockState) -> complex:
    """<output| U |input> for normalized Fock states.

    The submatrix repeats column ``c`` ``n_c`` times and row ``r`` ``m_r`` times;
    its permanent is divided by sqrt(prod n_c! * prod m_r!).
    """
    mat = _as_matrix(U)
    dim = mat.shape[0]
    if input_state.dim != dim or output_state.dim != dim:
        raise DimensionError(
            f"states over {input_state.dim}/{output_state.dim} modes, unitary over {dim}"
        )
    if input_state.total_photons != output_state.total_photons:
        warnings.warn(
            f"photon number mismatch ({input_state.total_photons} in, "
            f"{output_state.total_photons} out); passive optics gives 0",
            PhotonNumberWarning,
            stacklevel=2,
        )
        return 0.0 + 0.0j
    rows = output_state.mode_list()
    cols = input_state.mode_list()
    sub = mat[np.ix_(rows, cols)]
    norm = 1.0
    for k in itertools.chain(input_state.occupations, output_state.occupations):
        if k > 1:
            norm *= math.factorial(k)
    return permanent(sub) / math.sqrt(norm)


def check_unitary(U, tol: float = 1e-12) -> list[UnitarityViolation]:
    """Entries of U^dagger U - I exceeding ``tol`` in magnitude."""
    mat = _as_matrix(U)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionError(f"unitarity check needs a square matrix, got shape {mat.shape}")
    dev = np.abs(mat.conj().T @ mat - np.eye(mat.shape[0]))
    bad = np.argwhere(dev > tol)
    return [UnitarityViolation(int(i), int(j), float(dev[i, j])) for i, j in bad]


def fock_states(photons: int, dim: int) -> Iterator[FockState]:
    """All Fock states with ``photons`` photons over ``dim`` flat modes."""
    for combo in itertools.combinations_with_replacement(range(dim), photons):
        occ = [0] * dim
        for index in combo:
            occ[index] += 1
        yield FockState(tuple(occ))
