"""
Localization-length estimation, theory curves, saturation windows and
scaling-law fits.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats

from .dynamics import MapParams
from .entanglement import block_entropy
from .errors import ArgumentError, DomainError, InsufficientSupportError, WindowError
from .statevec import BasisTag, StateVector, check_qubit_count, signed_momenta

# --- Constants ---
LOCALIZATION_TIME_FACTOR = 2
LOCALIZATION_TIME_MIN = 50
SATURATION_WINDOW = 200
PROFILE_WINDOW = 100
PROFILE_FLOOR = 1e-12
MIN_FIT_POINTS = 3
# Profile fit window: below N / PROFILE_WINDOW_FRACTION from the peak, cut where the tail climbs PROFILE_RISE_FACTOR-fold.
PROFILE_WINDOW_FRACTION = 8
PROFILE_RISE_FACTOR = 10.0
# Measured localization lengths at n_q = 10 follow ell = 16 * pi^2 k^2 / 3 (M=300 -> 31, M=1000 -> 2.8).
ELL_CALIBRATION = 16.0


class FitModel(Enum):
    POWER_LAW = "power_law"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class LocalizationEstimate:
    ell_fit: float
    peak_slot: int
    fit_window: tuple[int, int]
    residual: float
    r_squared: float
    points_used: int


@dataclass(frozen=True)
class FitReport:
    model: FitModel
    coefficient: float
    exponent_or_rate: float
    r_squared: float
    points_used: int


# --- Theory ---

def theoretical_ell(k: float) -> float:
    if not k > 0:
        raise DomainError(f"Kick strength must be positive, got {k!r}.")
    return math.pi ** 2 * k ** 2 / 3.0


def localization_time(ell: float) -> int:
    if not ell > 0:
        raise DomainError(f"Localization length must be positive, got {ell!r}.")
    return max(math.ceil(LOCALIZATION_TIME_FACTOR * ell), LOCALIZATION_TIME_MIN)


def map_params_for_ell(n_q: int, K: float, ell: float, calibration: float = ELL_CALIBRATION) -> MapParams:
    """
    Chooses M so that calibration * pi^2 k^2 / 3 is closest to `ell`.

    Only a grid-placement heuristic: the localization length a run actually
    reaches is whatever estimate_ell measures on it.
    """
    check_qubit_count(n_q)
    if not ell > 0 or not calibration > 0:
        raise DomainError(f"Need ell > 0 and calibration > 0, got ell={ell!r}, calibration={calibration!r}.")
    k = math.sqrt(3.0 * ell / (calibration * math.pi ** 2))
    T = K / k
    M = max(1, round(T * (1 << n_q) / (2.0 * math.pi)))
    return MapParams(n_q=n_q, K=K, M=int(M))


def geometric_ell_grid(ell_min: float, ell_max: float, points_per_decade: int) -> np.ndarray:
    if not 0 < ell_min < ell_max:
        raise DomainError(f"Need 0 < ell_min < ell_max, got [{ell_min}, {ell_max}].")
    if points_per_decade < 1:
        raise DomainError(f"points_per_decade must be >= 1, got {points_per_decade}.")
    decades = math.log10(ell_max / ell_min)
    count = max(2, math.ceil(decades * points_per_decade) + 1)
    return np.geomspace(ell_min, ell_max, count)


# --- Localization length ---

def _decaying_side(probabilities: np.ndarray, peak_slot: int, direction: int, floor: float) -> list[int]:
    """Offsets 1, 2, ... from the peak in one direction while the tail keeps decaying."""
    dim = probabilities.shape[0]
    offsets = []
    lowest = probabilities[peak_slot]
    for offset in range(1, dim // PROFILE_WINDOW_FRACTION):
        value = probabilities[(peak_slot + direction * offset) % dim]
        if value <= floor or value > PROFILE_RISE_FACTOR * lowest:
            break
        offsets.append(offset)
        lowest = min(lowest, value)
    return offsets


def estimate_ell_from_profile(probabilities: np.ndarray) -> LocalizationEstimate:
    """
    Least-squares fit of ln P(n) = a - 2 |n - n_peak| / ell.

    Only the contiguous stretch around the peak enters the fit. Each side
    stops at the first slot at or below PROFILE_FLOOR times the peak, at
    the first slot that climbs above PROFILE_RISE_FACTOR times the lowest
    value already seen on that side, or when |n - n_peak| reaches N / 8.
    fit_window holds the unwrapped momenta at both ends of that stretch.
    A flat profile yields ell_fit = inf.
    """
    probabilities = np.asarray(probabilities, dtype=np.float64)
    dim = probabilities.shape[0]
    n_q = dim.bit_length() - 1
    check_qubit_count(n_q)

    peak_slot = int(np.argmax(probabilities))
    floor = PROFILE_FLOOR * probabilities[peak_slot]
    left = _decaying_side(probabilities, peak_slot, -1, floor)
    right = _decaying_side(probabilities, peak_slot, +1, floor)
    offsets = np.array([-offset for offset in reversed(left)] + [0] + right, dtype=np.int64)
    if offsets.size < MIN_FIT_POINTS:
        raise InsufficientSupportError(
            f"Only {offsets.size} slot(s) in the decaying window around the peak; need {MIN_FIT_POINTS}."
        )

    distance = np.abs(offsets).astype(np.float64)
    log_profile = np.log(probabilities[(peak_slot + offsets) % dim])
    fit = stats.linregress(distance, log_profile)
    predicted = fit.intercept + fit.slope * distance
    residual = float(np.sqrt(np.mean((log_profile - predicted) ** 2)))

    if fit.slope < 0:
        ell_fit = -2.0 / fit.slope
    else:
        logging.warning(f"Profile does not decay away from the peak (slope {fit.slope:.3g}); reporting ell = inf.")
        ell_fit = math.inf

    peak_momentum = int(signed_momenta(n_q)[peak_slot])
    return LocalizationEstimate(
        ell_fit=float(ell_fit),
        peak_slot=peak_slot,
        fit_window=(peak_momentum + int(offsets[0]), peak_momentum + int(offsets[-1])),
        residual=residual,
        r_squared=float(fit.rvalue ** 2),
        points_used=int(offsets.size),
    )


def estimate_ell(psi: StateVector) -> LocalizationEstimate:
    if psi.basis_tag is not BasisTag.MOMENTUM:
        raise ArgumentError("estimate_ell needs a momentum-basis state.")
    return estimate_ell_from_profile(psi.probabilities())


class ProfileAverager:
    """Observer summing |psi|^2 over steps >= start_step; `profile()` returns the average."""

    def __init__(self, start_step: int):
        self.start_step = start_step
        self.total: np.ndarray | None = None
        self.count = 0

    def __call__(self, step: int, state: StateVector) -> None:
        if step < self.start_step:
            return None
        probabilities = state.probabilities()
        self.total = probabilities.copy() if self.total is None else self.total + probabilities
        self.count += 1
        return None

    def profile(self) -> np.ndarray:
        if self.total is None:
            raise WindowError(f"No steps at or after step {self.start_step} were observed.")
        return self.total / self.count


# --- Saturation ---

def _saturation_window(values: Sequence[float], ell: float, total_steps: int | None = None) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    length = values.shape[0] if total_steps is None else total_steps
    if values.shape[0] < SATURATION_WINDOW:
        raise WindowError(f"Need the last {SATURATION_WINDOW} values, got {values.shape[0]}.")
    t_star = localization_time(ell)
    if length < t_star + SATURATION_WINDOW:
        raise WindowError(
            f"Series of length {length} is shorter than t* + {SATURATION_WINDOW} = "
            f"{t_star + SATURATION_WINDOW} for ell={ell:.4g}."
        )
    if length - SATURATION_WINDOW < 2 * t_star:
        logging.warning(f"Saturation window starts before 2*t* = {2 * t_star} for ell={ell:.4g}.")
    return values[-SATURATION_WINDOW:]


def saturation_value(values: Sequence[float], ell: float, total_steps: int | None = None) -> float:
    """
    Mean of the last SATURATION_WINDOW recorded values of one observable.

    `total_steps` is the length of the underlying run when `values` only
    holds its tail (sweeps record the final window only).
    """
    window = _saturation_window(values, ell, total_steps)
    return math.fsum(window) / window.shape[0]


def saturation_halfwidth(values: Sequence[float], ell: float, total_steps: int | None = None) -> float:
    """95% normal-approximation half-width of the saturation mean."""
    window = _saturation_window(values, ell, total_steps)
    return float(1.96 * np.std(window, ddof=1) / math.sqrt(window.shape[0]))


# --- Scaling fits ---

def _sorted_points(points: Sequence[tuple[float, float]]) -> np.ndarray:
    array = np.asarray(sorted((float(x), float(y)) for x, y in points), dtype=np.float64)
    if array.shape[0] < MIN_FIT_POINTS:
        raise InsufficientSupportError(f"Need at least {MIN_FIT_POINTS} points, got {array.shape[0]}.")
    return array


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    fit = stats.linregress(x, y)
    r_squared = float(fit.rvalue ** 2) if np.isfinite(fit.rvalue) else 0.0
    return float(fit.slope), float(fit.intercept), min(max(r_squared, 0.0), 1.0)


def fit_power_law(points: Sequence[tuple[float, float]]) -> FitReport:
    """C = a * ell**b by linear regression in log-log space."""
    array = _sorted_points(points)
    if np.any(array <= 0):
        raise DomainError("Power-law fit needs strictly positive ell and C values.")
    slope, intercept, r_squared = _linear_fit(np.log(array[:, 0]), np.log(array[:, 1]))
    return FitReport(FitModel.POWER_LAW, math.exp(intercept), slope, r_squared, array.shape[0])


def fit_exponential(points: Sequence[tuple[float, float]]) -> FitReport:
    """C = a * exp(-A * ell); the reported rate is A."""
    array = _sorted_points(points)
    if np.any(array[:, 1] <= 0):
        raise DomainError("Exponential fit needs C > 0; drop zero-concurrence points first.")
    slope, intercept, r_squared = _linear_fit(array[:, 0], np.log(array[:, 1]))
    rate = -slope if slope != 0 else 0.0
    return FitReport(FitModel.EXPONENTIAL, math.exp(intercept), rate, r_squared, array.shape[0])


def small_ell_concurrence_model(ell: float, i: int, j: int) -> float:
    """
    sqrt(ell) / G with G = 4**(max(i, j) - 1). Shape only: no prefactor.

    The coarse-graining scale of a pair i < j is Delta(i, j) * 2**(j-1). Delta
    is replaced by its leading term 2**(j-1), so the model depends
    on the upper label alone: pairs (1, 4) and (3, 4) get the same value.
    """
    if i < 1 or j < 1 or i == j:
        raise ArgumentError(f"Need two distinct positive qubit labels, got ({i}, {j}).")
    if not ell > 0:
        raise DomainError(f"Localization length must be positive, got {ell!r}.")
    upper = max(i, j)
    return math.sqrt(ell) / float(4 ** (upper - 1))


def anchored_small_ell_curve(
    ells: Sequence[float], i: int, j: int, anchor_ell: float, anchor_value: float
) -> np.ndarray:
    scale = anchor_value / small_ell_concurrence_model(anchor_ell, i, j)
    return np.array([scale * small_ell_concurrence_model(ell, i, j) for ell in ells])


def critical_ell(i: int) -> float:
    if i < 1:
        raise ArgumentError(f"Qubit label must be >= 1, got {i}.")
    return float(2 ** i)


def locate_peak(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """(ell, C) of the largest C on a sweep grid; ties go to the smaller ell."""
    if not points:
        raise InsufficientSupportError("Cannot locate a peak on an empty sweep.")
    ordered = sorted((float(x), float(y)) for x, y in points)
    best = max(range(len(ordered)), key=lambda index: (ordered[index][1], -index))
    return ordered[best]


# --- Block entanglement ---

def count_entangled_qubits(psi: StateVector, S_c: float) -> int:
    """Largest m < n_q with S(block 1..m) > S_c, or 0."""
    count = 0
    for m in range(1, psi.n_q):
        if block_entropy(psi, tuple(range(1, m + 1))) > S_c:
            count = m
    return count
