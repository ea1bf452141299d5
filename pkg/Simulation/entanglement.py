"""
Reduced density matrices, Wootters concurrence and Von Neumann entropy.

Partial traces never build the N x N projector: the amplitude vector is
viewed as an n_q-axis tensor (axis 0 = qubit n_q, last axis = qubit 1), the
kept qubits are moved to the front, and rho = A @ A^dagger on the resulting
(2**m, N / 2**m) matrix.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ArgumentError, BasisError, DegenerateTraceError, NumericalDegradationError
from .statevec import BasisTag, StateVector

# --- Numerical floors ---
EIGEN_FLOOR = 1e-10
# eigenvalues under this fraction of the largest one are rounding noise
SPECTRUM_RELATIVE_CUTOFF = 64 * np.finfo(np.float64).eps
ENTROPY_CUTOFF = 1e-14
INVARIANT_TOLERANCE = 1e-10

SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SPIN_FLIP = np.kron(SIGMA_Y, SIGMA_Y)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    Reduced state of `subject_qubits`.

    With lsb_first the first listed qubit is the least significant bit of the
    basis index (block convention); otherwise it is the most significant
    (pair convention, basis |alpha_i alpha_j> = 00, 01, 10, 11).
    """

    entries: np.ndarray
    subject_qubits: tuple[int, ...]
    lsb_first: bool = True

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def validate(self, tolerance: float = INVARIANT_TOLERANCE) -> "DensityMatrix":
        rho = self.entries
        hermitian_error = float(np.max(np.abs(rho - rho.conj().T)))
        if hermitian_error > tolerance:
            raise NumericalDegradationError(f"Density matrix is not Hermitian (max deviation {hermitian_error:.3e}).")
        trace = complex(np.trace(rho))
        if abs(trace - 1.0) > tolerance:
            raise NumericalDegradationError(f"Density matrix trace is {trace!r}, expected 1.")
        lowest = float(linalg.eigvalsh(rho)[0])
        if lowest < -tolerance:
            raise NumericalDegradationError(f"Density matrix has negative eigenvalue {lowest:.3e}.")
        return self

    def partial_trace(self, keep: Sequence[int]) -> "DensityMatrix":
        """Traces out every subject qubit not in `keep`; the result keeps this matrix's ordering."""
        keep = tuple(keep)
        unknown = set(keep) - set(self.subject_qubits)
        if unknown or len(set(keep)) != len(keep):
            raise ArgumentError(f"Cannot keep {keep} from subject qubits {self.subject_qubits}.")
        if not keep:
            raise DegenerateTraceError("Keeping no qubits leaves nothing to return.")

        m = len(self.subject_qubits)
        # axis order of the reshaped tensor, most significant first
        axis_qubits = list(reversed(self.subject_qubits)) if self.lsb_first else list(self.subject_qubits)
        kept = [q for q in axis_qubits if q in keep]
        traced = [q for q in axis_qubits if q not in keep]

        tensor = self.entries.reshape([2] * (2 * m))
        row_axes = [axis_qubits.index(q) for q in kept + traced]
        col_axes = [m + axis_qubits.index(q) for q in kept + traced]
        tensor = tensor.transpose(row_axes + col_axes)
        d_keep, d_traced = 1 << len(kept), 1 << len(traced)
        reduced = np.einsum("atbt->ab", tensor.reshape(d_keep, d_traced, d_keep, d_traced))

        ordered = tuple(reversed(kept)) if self.lsb_first else tuple(kept)
        return DensityMatrix(reduced, ordered, self.lsb_first)


@dataclass(frozen=True)
class ConcurrenceResult:
    value: float
    lambdas: tuple[float, float, float, float]


def _check_labels(psi: StateVector, qubits: Sequence[int]) -> None:
    if psi.basis_tag is not BasisTag.MOMENTUM:
        raise BasisError(f"Entanglement measures need a momentum-basis state, got {psi.basis_tag.value}.")
    for q in qubits:
        if not 1 <= q <= psi.n_q:
            raise ArgumentError(f"Qubit label {q} outside [1, {psi.n_q}].")


def _kept_rows(psi: StateVector, axis_qubits: Sequence[int]) -> np.ndarray:
    """Amplitudes reshaped to (2**m, rest) with rows indexed by `axis_qubits`, most significant first."""
    n_q = psi.n_q
    tensor = psi.amplitudes.reshape([2] * n_q)
    source = [n_q - q for q in axis_qubits]
    moved = np.moveaxis(tensor, source, list(range(len(source))))
    return moved.reshape(1 << len(source), -1)


def reduce_to_pair(psi: StateVector, i: int, j: int) -> DensityMatrix:
    """4x4 reduced matrix of qubits (i, j), basis |alpha_i alpha_j> with qubit i first."""
    _check_labels(psi, (i, j))
    if i >= j:
        raise ArgumentError(f"Pair labels must satisfy i < j, got ({i}, {j}).")
    rows = _kept_rows(psi, (i, j))
    return DensityMatrix(rows @ rows.conj().T, (i, j), lsb_first=False)


def reduce_to_block(psi: StateVector, qubits: Sequence[int]) -> DensityMatrix:
    """2**m x 2**m reduced matrix; the first listed qubit is the least significant basis bit."""
    qubits = tuple(qubits)
    _check_labels(psi, qubits)
    if not qubits:
        raise ArgumentError("A block needs at least one qubit.")
    if any(a >= b for a, b in zip(qubits, qubits[1:])):
        raise ArgumentError(f"Block labels must be distinct and ascending, got {qubits}.")
    if len(qubits) >= psi.n_q:
        raise DegenerateTraceError(f"Block {qubits} covers all {psi.n_q} qubits; nothing left to trace.")
    rows = _kept_rows(psi, tuple(reversed(qubits)))
    return DensityMatrix(rows @ rows.conj().T, qubits, lsb_first=True)


def _clamped_spectrum(values: np.ndarray, what: str) -> np.ndarray:
    """
    Zeroes the rounding noise of a positive semidefinite spectrum.

    Small positive eigenvalues survive as long as they are above
    SPECTRUM_RELATIVE_CUTOFF of the largest one, so a weakly entangled
    pure state keeps its tiny concurrence. Anything below -EIGEN_FLOOR is an error.
    """
    lowest = float(values.min())
    if lowest < -EIGEN_FLOOR:
        raise NumericalDegradationError(f"{what} has eigenvalue {lowest:.3e} below the floor -{EIGEN_FLOOR}.")
    cutoff = SPECTRUM_RELATIVE_CUTOFF * float(np.abs(values).max())
    return np.where(values > cutoff, values, 0.0)


def spin_flip(rho: DensityMatrix) -> np.ndarray:
    return SPIN_FLIP @ rho.entries.conj() @ SPIN_FLIP


def concurrence(rho: DensityMatrix) -> ConcurrenceResult:
    """
    Wootters concurrence from the Hermitian form sqrt(rho) rho~ sqrt(rho).

    Its eigenvalues equal those of R = rho rho~, so lambda_k are their square
    roots in descending order.
    """
    if rho.dim != 4:
        raise ArgumentError(f"Concurrence needs a 4x4 two-qubit matrix, got {rho.dim}x{rho.dim}.")
    rho.validate()

    weights, vectors = linalg.eigh(rho.entries)
    weights = _clamped_spectrum(weights, "rho")
    sqrt_rho = (vectors * np.sqrt(weights)) @ vectors.conj().T

    hermitian_form = sqrt_rho @ spin_flip(rho) @ sqrt_rho
    hermitian_form = 0.5 * (hermitian_form + hermitian_form.conj().T)
    spectrum = _clamped_spectrum(linalg.eigvalsh(hermitian_form), "sqrt(rho) rho~ sqrt(rho)")

    lambdas = np.sort(np.sqrt(spectrum))[::-1]
    value = max(lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3], 0.0)
    return ConcurrenceResult(float(value), tuple(float(x) for x in lambdas))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """S = -sum lambda log2 lambda, eigenvalues below 1e-14 dropped."""
    eigenvalues = linalg.eigvalsh(rho.entries)
    kept = eigenvalues[eigenvalues > ENTROPY_CUTOFF]
    entropy = float(-np.sum(kept * np.log2(kept)))
    return max(entropy, 0.0)


def concurrence_of_pair(psi: StateVector, i: int, j: int) -> float:
    return concurrence(reduce_to_pair(psi, i, j)).value


def block_entropy(psi: StateVector, qubits: Sequence[int]) -> float:
    return von_neumann_entropy(reduce_to_block(psi, qubits))


def single_qubit_entropy(psi: StateVector, m: int) -> float:
    entropy = block_entropy(psi, (m,))
    logging.debug(f"Single-qubit entropy of qubit {m}: {entropy:.6g}")
    return entropy
