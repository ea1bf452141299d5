"""
Statevector storage, qubit binary coding and initial-state construction.

Momentum n lives in the window (-N/2, N/2] and is stored at slot n mod N.
Qubit i (1 = least significant, n_q = most significant) carries bit i-1
of the slot index.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ArgumentError, DomainError, MomentumIndexError, SizeError

# --- Constants ---
MIN_QUBITS = 2
MAX_QUBITS = 26  # memory guard: 2**26 complex128 amplitudes is 1 GiB
NORM_TOLERANCE = 1e-10


class BasisTag(Enum):
    MOMENTUM = "momentum"
    ANGLE = "angle"


@dataclass(frozen=True, eq=False)
class StateVector:
    """N = 2**n_q complex amplitudes of unit norm, tagged with the basis they are expressed in."""

    amplitudes: np.ndarray
    n_q: int
    basis_tag: BasisTag = BasisTag.MOMENTUM

    def __post_init__(self):
        check_qubit_count(self.n_q)
        amplitudes = np.array(self.amplitudes, dtype=np.complex128, copy=True)
        if amplitudes.shape != (1 << self.n_q,):
            raise SizeError(
                f"Expected {1 << self.n_q} amplitudes for n_q={self.n_q}, got shape {amplitudes.shape}."
            )
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)
        self.check_normalized()

    @property
    def dim(self) -> int:
        return 1 << self.n_q

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def check_normalized(self, tolerance: float = NORM_TOLERANCE) -> "StateVector":
        norm_sq = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if not abs(norm_sq - 1.0) <= tolerance:
            raise DomainError(f"State norm squared {norm_sq!r} deviates from 1 by more than {tolerance}.")
        return self

    def with_amplitudes(self, amplitudes: np.ndarray, basis_tag: BasisTag | None = None) -> "StateVector":
        return StateVector(amplitudes, self.n_q, self.basis_tag if basis_tag is None else basis_tag)


def check_qubit_count(n_q: int) -> None:
    if not isinstance(n_q, (int, np.integer)) or not MIN_QUBITS <= n_q <= MAX_QUBITS:
        raise SizeError(f"n_q must be an integer in [{MIN_QUBITS}, {MAX_QUBITS}], got {n_q!r}.")


# --- Momentum indexing ---

def momentum_window(n_q: int) -> tuple[int, int]:
    """Inclusive bounds (lowest, highest) of the signed momentum window."""
    half = 1 << (n_q - 1)
    return -half + 1, half


def slot(n: int, n_q: int) -> int:
    low, high = momentum_window(n_q)
    if not low <= n <= high:
        raise MomentumIndexError(f"Momentum {n} outside window ({low - 1}, {high}] for n_q={n_q}.")
    return n % (1 << n_q)


def momentum(s: int, n_q: int) -> int:
    dim = 1 << n_q
    if not 0 <= s < dim:
        raise MomentumIndexError(f"Slot {s} outside [0, {dim}).")
    return s if s <= dim // 2 else s - dim


def signed_momenta(n_q: int) -> np.ndarray:
    """Signed momentum n(s) for every storage slot, as an int64 array."""
    dim = 1 << n_q
    slots = np.arange(dim, dtype=np.int64)
    return np.where(slots <= dim // 2, slots, slots - dim)


def qubit_bit(s: int, i: int) -> int:
    """alpha_i of slot s."""
    return (s >> (i - 1)) & 1


def coarse_graining_distance(i: int, j: int) -> int:
    """|2**(j-1) - 2**(i-1)|, the difference of the binary-coding weights of two qubits."""
    if i < 1 or j < 1:
        raise ArgumentError(f"Qubit labels start at 1, got ({i}, {j}).")
    if i == j:
        raise ArgumentError(f"Coarse graining distance needs two distinct qubits, got i == j == {i}.")
    return abs((1 << (j - 1)) - (1 << (i - 1)))


# --- Constructors ---

def momentum_eigenstate(n_q: int, n0: int) -> StateVector:
    check_qubit_count(n_q)
    amplitudes = np.zeros(1 << n_q, dtype=np.complex128)
    amplitudes[slot(n0, n_q)] = 1.0
    return StateVector(amplitudes, n_q)


def uniform_state(n_q: int) -> StateVector:
    check_qubit_count(n_q)
    dim = 1 << n_q
    return StateVector(np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128), n_q)


def random_state(n_q: int, seed: int) -> StateVector:
    """Haar-like random state from complex Gaussian amplitudes (PCG64 generator)."""
    check_qubit_count(n_q)
    rng = np.random.Generator(np.random.PCG64(seed))
    dim = 1 << n_q
    amplitudes = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    amplitudes /= np.linalg.norm(amplitudes)
    return StateVector(amplitudes, n_q)


def flat_phase_localized_state(n_q: int, ell: float, center: int, seed: int) -> StateVector:
    """
    Flat random-phase state over ceil(ell) consecutive momenta starting at `center`.

    Phases are drawn uniformly on [0, 2*pi) from numpy's PCG64 bit generator
    seeded with `seed`, so a given seed always yields the same state.
    """
    check_qubit_count(n_q)
    if not ell >= 1:
        raise DomainError(f"Flat-phase width ell must be >= 1, got {ell!r}.")
    count = math.ceil(ell)
    low, high = momentum_window(n_q)
    last = center + count - 1
    if center < low or last > high:
        raise DomainError(
            f"Window [{center}, {last}] does not fit inside the momentum window [{low}, {high}]."
        )

    rng = np.random.Generator(np.random.PCG64(seed))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=count)
    slots = np.arange(center, last + 1, dtype=np.int64) % (1 << n_q)

    amplitudes = np.zeros(1 << n_q, dtype=np.complex128)
    amplitudes[slots] = np.exp(1j * phases) / math.sqrt(count)
    return StateVector(amplitudes, n_q).check_normalized(1e-12)


def exponential_localized_state(n_q: int, ell: float, center: int = 0, seed: int | None = None) -> StateVector:
    """
    Normalized profile |psi(n)| proportional to exp(-|n - center| / ell).

    Distances are circular on the momentum ring. With a seed the amplitudes
    carry random phases, otherwise they are real and positive.
    """
    check_qubit_count(n_q)
    if not ell > 0:
        raise DomainError(f"Localization length must be positive, got {ell!r}.")
    slot(center, n_q)

    dim = 1 << n_q
    distance = np.abs(signed_momenta(n_q) - center) % dim
    distance = np.minimum(distance, dim - distance)
    amplitudes = np.exp(-distance / ell).astype(np.complex128)
    if seed is not None:
        rng = np.random.Generator(np.random.PCG64(seed))
        amplitudes *= np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=dim))
    amplitudes /= np.linalg.norm(amplitudes)
    logging.debug(f"Built exponential profile: n_q={n_q}, ell={ell}, center={center}")
    return StateVector(amplitudes, n_q)
