"""
Slow reference implementations used to cross-check the fast kernels.

Everything here is deliberately naive (O(N^2) sums, full projectors, direct
eigen-solves) and only meant for small n_q. The `selftest` harness command
runs `run_oracle_suite` over these.
"""

import logging
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy import linalg

from .dynamics import dft_angle_to_momentum, dft_momentum_to_angle
from .entanglement import SPIN_FLIP, DensityMatrix, concurrence, reduce_to_block, reduce_to_pair
from .statevec import StateVector, random_state


def direct_dft(values: np.ndarray, sign: int) -> np.ndarray:
    dim = values.shape[0]
    index = np.arange(dim)
    kernel = np.exp(sign * 2j * np.pi * np.outer(index, index) / dim)
    return kernel @ values / np.sqrt(dim)


def dense_reduced_matrix(psi: StateVector, qubits: tuple[int, ...], lsb_first: bool = True) -> np.ndarray:
    """Reduced matrix from the full N x N projector, traced index by index."""
    n_q = psi.n_q
    projector = np.outer(psi.amplitudes, psi.amplitudes.conj())
    traced = [q for q in range(1, n_q + 1) if q not in qubits]
    ordered = list(qubits) if lsb_first else list(reversed(qubits))
    m = len(qubits)

    def slot_of(kept_bits: int, traced_bits: tuple[int, ...]) -> int:
        s = 0
        for position, q in enumerate(ordered):
            s |= ((kept_bits >> position) & 1) << (q - 1)
        for bit, q in zip(traced_bits, traced):
            s |= bit << (q - 1)
        return s

    reduced = np.zeros((1 << m, 1 << m), dtype=np.complex128)
    for row in range(1 << m):
        for col in range(1 << m):
            for traced_bits in product((0, 1), repeat=len(traced)):
                reduced[row, col] += projector[slot_of(row, traced_bits), slot_of(col, traced_bits)]
    return reduced


def direct_concurrence(rho: np.ndarray) -> float:
    """Concurrence from the non-Hermitian product R = rho rho~ solved directly."""
    rho_tilde = SPIN_FLIP @ rho.conj() @ SPIN_FLIP
    eigenvalues = np.sort(np.abs(linalg.eigvals(rho @ rho_tilde).real))[::-1]
    lambdas = np.sqrt(eigenvalues)
    return float(max(lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3], 0.0))


def werner_state(p: float) -> DensityMatrix:
    bell = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)
    entries = p * np.outer(bell, bell) + (1.0 - p) * np.eye(4) / 4.0
    return DensityMatrix(entries.astype(np.complex128), (1, 2), lsb_first=False)


@dataclass(frozen=True)
class OracleCheck:
    name: str
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def run_oracle_suite(max_qubits: int = 6, seed: int = 2024) -> list[OracleCheck]:
    """Fast kernels against the references above, for every n_q in [2, max_qubits]."""
    checks = []
    for n_q in range(2, max_qubits + 1):
        psi = random_state(n_q, seed + n_q)

        angle = dft_momentum_to_angle(psi)
        dft_error = float(np.max(np.abs(angle.amplitudes - direct_dft(psi.amplitudes, +1))))
        back_error = float(np.max(np.abs(dft_angle_to_momentum(angle).amplitudes - psi.amplitudes)))
        checks.append(OracleCheck(f"dft n_q={n_q}", max(dft_error, back_error), 1e-10))

        trace_error = 0.0
        for i in range(1, n_q + 1):
            for j in range(i + 1, n_q + 1):
                fast = reduce_to_pair(psi, i, j).entries
                slow = dense_reduced_matrix(psi, (i, j), lsb_first=False)
                trace_error = max(trace_error, float(np.max(np.abs(fast - slow))))
        for first in range(1, n_q + 1):
            for last in range(first, n_q + 1):
                block = tuple(range(first, last + 1))
                if len(block) >= n_q:
                    continue
                fast = reduce_to_block(psi, block).entries
                slow = dense_reduced_matrix(psi, block)
                trace_error = max(trace_error, float(np.max(np.abs(fast - slow))))
        checks.append(OracleCheck(f"partial trace n_q={n_q}", trace_error, 1e-12))

        if n_q >= 3:
            rho = reduce_to_pair(psi, 1, 3)
            error = abs(concurrence(rho).value - direct_concurrence(rho.entries))
            # rank-deficient marginal: the direct solve carries sqrt(eps) noise on its null eigenvalues
            checks.append(OracleCheck(f"concurrence n_q={n_q}", error, 1e-6))

    werner = werner_state(0.8)
    checks.append(OracleCheck("werner p=0.8 direct", abs(direct_concurrence(werner.entries) - 0.7), 1e-9))
    checks.append(OracleCheck("werner p=0.8 hermitian", abs(concurrence(werner).value - 0.7), 1e-9))

    for check in checks:
        logging.debug(f"Oracle check '{check.name}': error {check.max_error:.3e} (tolerance {check.tolerance:g})")
    return checks
