"""
Split-operator evolution under the quantum sawtooth map.

One period is U = exp(i k (theta - pi)^2) exp(-i T n^2 / 2): the kinetic
factor is diagonal in momentum, the kick factor is diagonal in angle, and a
unitary radix-2 transform moves the state between the two bases.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import lru_cache
from typing import Any

import numpy as np

from .errors import ArgumentError, BasisError, DomainError
from .statevec import BasisTag, StateVector, check_qubit_count, signed_momenta

Observer = Callable[[int, StateVector], Any]


@dataclass(frozen=True)
class MapParams:
    """Map parameters (n_q, K, M); T = 2*pi*M / 2**n_q and k = K / T are derived."""

    n_q: int
    K: float
    M: int

    def __post_init__(self):
        check_qubit_count(self.n_q)
        if not self.K > 0:
            raise DomainError(f"K must be > 0 (chaotic regime), got {self.K!r}.")
        if not isinstance(self.M, (int, np.integer)) or self.M < 1:
            raise DomainError(f"M must be a positive integer, got {self.M!r}.")

    @property
    def T(self) -> float:
        return 2.0 * math.pi * self.M / (1 << self.n_q)

    @property
    def k(self) -> float:
        return self.K / self.T


# --- Radix-2 transform ---

@lru_cache(maxsize=32)
def _bit_reversal(n_bits: int) -> np.ndarray:
    index = np.arange(1 << n_bits, dtype=np.int64)
    reversed_index = np.zeros_like(index)
    for b in range(n_bits):
        reversed_index |= ((index >> b) & 1) << (n_bits - 1 - b)
    reversed_index.setflags(write=False)
    return reversed_index


@lru_cache(maxsize=64)
def _twiddles(half: int, sign: int) -> np.ndarray:
    factors = np.exp(sign * 1j * np.pi * np.arange(half) / half)
    factors.setflags(write=False)
    return factors


def fft_radix2(values: np.ndarray, sign: int) -> np.ndarray:
    """
    Unitary transform out[j] = N**-0.5 * sum_s values[s] * exp(sign * 2*pi*i*j*s / N).

    Iterative decimation in time: bit-reversal permutation followed by
    log2(N) butterfly stages, each stage vectorized over all its blocks.
    """
    dim = values.shape[0]
    n_bits = dim.bit_length() - 1
    if dim < 1 or (1 << n_bits) != dim:
        raise ArgumentError(f"Radix-2 transform needs a power-of-two length, got {dim}.")

    data = np.asarray(values, dtype=np.complex128)[_bit_reversal(n_bits)]
    half = 1
    while half < dim:
        blocks = data.reshape(-1, 2, half)
        even = blocks[:, 0, :]
        odd = blocks[:, 1, :] * _twiddles(half, sign)
        data = np.concatenate((even + odd, even - odd), axis=1).reshape(dim)
        half <<= 1
    return data / math.sqrt(dim)


def dft_momentum_to_angle(psi: StateVector) -> StateVector:
    if psi.basis_tag is not BasisTag.MOMENTUM:
        raise BasisError(f"dft_momentum_to_angle needs a momentum-basis state, got {psi.basis_tag.value}.")
    return psi.with_amplitudes(fft_radix2(psi.amplitudes, +1), BasisTag.ANGLE)


def dft_angle_to_momentum(psi: StateVector) -> StateVector:
    if psi.basis_tag is not BasisTag.ANGLE:
        raise BasisError(f"dft_angle_to_momentum needs an angle-basis state, got {psi.basis_tag.value}.")
    return psi.with_amplitudes(fft_radix2(psi.amplitudes, -1), BasisTag.MOMENTUM)


# --- Floquet operator ---

def kinetic_phases(p: MapParams) -> np.ndarray:
    """exp(-i T n(s)^2 / 2) per storage slot, using the signed momentum."""
    n = signed_momenta(p.n_q).astype(np.float64)
    return np.exp(-0.5j * p.T * n * n)


def kick_phases(p: MapParams) -> np.ndarray:
    """exp(+i k (theta_j - pi)^2) on the angle grid theta_j = 2*pi*j / N."""
    dim = 1 << p.n_q
    theta = 2.0 * np.pi * np.arange(dim) / dim
    return np.exp(1j * p.k * (theta - np.pi) ** 2)


def apply_phases(amplitudes: np.ndarray, kinetic: np.ndarray, kick: np.ndarray) -> np.ndarray:
    """One split-operator period on raw momentum amplitudes: kinetic, DFT, kick, inverse DFT."""
    angle = fft_radix2(amplitudes * kinetic, +1)
    return fft_radix2(angle * kick, -1)


class FloquetOperator:
    """Phase tables for one MapParams, computed once and reused by every step."""

    def __init__(self, params: MapParams):
        self.params = params
        self.kinetic = kinetic_phases(params)
        self.kick = kick_phases(params)
        self.kinetic.setflags(write=False)
        self.kick.setflags(write=False)

    def apply(self, psi: StateVector) -> StateVector:
        self._check(psi)
        return psi.with_amplitudes(apply_phases(psi.amplitudes, self.kinetic, self.kick))

    def _check(self, psi: StateVector) -> None:
        if psi.basis_tag is not BasisTag.MOMENTUM:
            raise BasisError(f"Floquet step needs a momentum-basis state, got {psi.basis_tag.value}.")
        if psi.n_q != self.params.n_q:
            raise ArgumentError(f"State has n_q={psi.n_q} but map parameters have n_q={self.params.n_q}.")


@lru_cache(maxsize=64)
def floquet_operator(p: MapParams) -> FloquetOperator:
    logging.debug(f"Precomputing phase tables for n_q={p.n_q}, K={p.K}, M={p.M} (T={p.T:.6g}, k={p.k:.6g})")
    return FloquetOperator(p)


def apply_floquet(psi: StateVector, p: MapParams) -> StateVector:
    return floquet_operator(p).apply(psi)


def evolve(
    psi0: StateVector,
    p: MapParams,
    steps: int,
    observers: Sequence[Observer] = (),
) -> tuple[StateVector, list[list[Any]]]:
    """
    Applies the Floquet operator `steps` times.

    After step t (1-based) every observer is called as observer(t, state).
    Returns the final state and, per observer, the list of values it
    returned (None results are skipped).
    """
    if steps < 0:
        raise ArgumentError(f"steps must be >= 0, got {steps}.")
    operator = floquet_operator(p)
    operator._check(psi0)

    outputs: list[list[Any]] = [[] for _ in observers]
    amplitudes = psi0.amplitudes
    state = psi0
    for step in range(1, steps + 1):
        amplitudes = apply_phases(amplitudes, operator.kinetic, operator.kick)
        state = psi0.with_amplitudes(amplitudes)
        for collected, observer in zip(outputs, observers):
            value = observer(step, state)
            if value is not None:
                collected.append(value)
    return state, outputs
