"""Closed-form gains used as fast evaluators and as Monte Carlo oracles.

sinc is the normalized sinc, sin(pi x) / (pi x), as provided by np.sinc.
"""
import math
from dataclasses import dataclass

import numpy as np

from ris_feedback.channel import array_factor, is_pure_los
from ris_feedback.codebook import PhaseConfig
from ris_feedback.utils import from_db, to_db

HPBW_CONSTANT = 1.772
SINGULARITY_TOLERANCE = 1e-9
RICIAN_FACTOR_DB_AT_ZERO_M = 13.0
RICIAN_FACTOR_DB_PER_M = 0.03


@dataclass(frozen=True)
class GainBreakdown:
    """Expected channel gain split into its separately derived terms (linear power)."""
    los_term: float
    nlos_term: float = 0.0
    static_term: float = 0.0
    cross_term: float = 0.0

    @property
    def total(self) -> float:
        return self.los_term + self.nlos_term + self.static_term + self.cross_term

    def expected_snr(self, P: float, sigma2: float) -> float:
        return snr(P, sigma2, self.total)


# ============================================================================
# ARRAY GAIN
# ============================================================================
def array_gain_exact(N: int, delta):
    """Geometric-sum array gain |1 - e^{-j N pi delta}|^2 / |1 - e^{-j pi delta}|^2.

    delta is the angle-sum error sin(theta1) + sin(theta2) - Theta_hat; scalars
    and arrays are accepted. At e^{-j pi delta} = 1 the removable singularity is
    evaluated through the sinc ratio, which tends to N^2.
    """
    delta = np.asarray(delta, dtype=float)
    numerator = np.abs(1.0 - np.exp(-1j * N * np.pi * delta)) ** 2
    denominator = np.abs(1.0 - np.exp(-1j * np.pi * delta)) ** 2
    # The gain is 2-periodic in delta; reduce before taking the sinc ratio.
    reduced = delta - 2.0 * np.round(delta / 2.0)
    limit = N**2 * (np.sinc(N * reduced / 2.0) / np.sinc(reduced / 2.0)) ** 2
    singular = np.sqrt(denominator) < SINGULARITY_TOLERANCE
    gain = np.where(singular, limit, numerator / np.where(singular, 1.0, denominator))
    if gain.ndim == 0:
        return float(gain)
    return gain


def array_gain_approx(N: int, delta):
    """Small-error approximation N^2 sinc^2(N delta / 2)."""
    gain = N**2 * np.sinc(N * np.asarray(delta, dtype=float) / 2.0) ** 2
    if np.ndim(gain) == 0:
        return float(gain)
    return gain


def array_gain_of_config(theta1: float, theta2: float, config: PhaseConfig) -> float:
    """Squared magnitude of the RIS array factor; phi plays no part."""
    return abs(array_factor(theta1, theta2, config)) ** 2


def hpbw(N: int) -> float:
    """Half-power beamwidth in the angle-sum domain."""
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    return HPBW_CONSTANT / N


def codebook_worst_case_gain(N: int, l: int) -> float:
    """Array gain at the largest angle-sum error an l-bit codebook can leave, 2^(1-l)."""
    return array_gain_exact(N, 2.0 ** (1 - l))


# ============================================================================
# EXPECTED GAINS
# ============================================================================
def lemma1_expected_gain(N: int, b: int) -> float:
    """Expected array gain with b-bit element-wise quantization of uniform phases."""
    s2 = float(np.sinc(2.0**-b)) ** 2
    return N**2 * s2 + N * (1.0 - s2)


def lemma1_approx_gain(N: int, b: int) -> float:
    """Large-N form of lemma1_expected_gain, dropping the O(N) term."""
    return N**2 * float(np.sinc(2.0**-b)) ** 2


def rician_expected_gain(K: int, N: int, kappa: float, beta_r: float, beta_t: float) -> GainBreakdown:
    """E{||h||^2} with phases matched to the LoS part of a Rician UE-RIS link."""
    full = K * beta_r * beta_t
    if is_pure_los(kappa):
        return GainBreakdown(los_term=N**2 * full)
    return GainBreakdown(
        los_term=kappa / (kappa + 1.0) * N**2 * full,
        nlos_term=1.0 / (kappa + 1.0) * N * full,
    )


def static_expected_gain(K: int, N: int, beta_r: float, beta_t: float, rho: float,
                         d: int | None) -> GainBreakdown:
    """E{||h||^2} for pure LoS with a Rayleigh static path and a d-bit common phase.

    d = None means the common phase is applied unquantized.
    """
    aligned = N * math.sqrt(math.pi * beta_r * beta_t * K * rho)
    if d is None:
        cross = aligned
    elif d < 0:
        raise ValueError(f"d must be non-negative, got {d}")
    elif d == 0:
        cross = 0.0
    else:
        cross = float(np.sinc(2.0**-d)) * aligned
    return GainBreakdown(los_term=N**2 * K * beta_r * beta_t, static_term=K * rho, cross_term=cross)


def rician_factor_3gpp(distance_m: float) -> float:
    """Linear Rician factor of the 13 - 0.03 m [dB] rule."""
    if distance_m < 0:
        raise ValueError(f"Distance must be non-negative, got {distance_m}")
    return from_db(RICIAN_FACTOR_DB_AT_ZERO_M - RICIAN_FACTOR_DB_PER_M * distance_m)


# ============================================================================
# SNR
# ============================================================================
def snr(P: float, sigma2: float, gain: float) -> float:
    """Linear SNR (P / sigma^2) ||h||^2."""
    if not sigma2 > 0:
        raise ValueError(f"Noise power must be positive, got {sigma2}")
    return P * gain / sigma2


def snr_db(P: float, sigma2: float, gain: float) -> float:
    return to_db(snr(P, sigma2, gain))
