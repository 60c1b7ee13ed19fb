import math

import numpy as np


# ============================================================================
# UNITS
# ============================================================================
def to_db(value: float) -> float:
    """Linear power ratio to dB. Zero maps to -inf."""
    if value < 0:
        raise ValueError(f"Power ratio must be non-negative, got {value}")
    if value == 0:
        return -math.inf
    return 10.0 * math.log10(value)


def from_db(value_db: float) -> float:
    """dB to linear power ratio. -inf maps to 0."""
    if value_db == -math.inf:
        return 0.0
    return 10.0 ** (value_db / 10.0)


def dbm_to_watts(value_dbm: float) -> float:
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


def watts_to_dbm(value_w: float) -> float:
    return to_db(value_w) + 30.0


# ============================================================================
# PHASES & RANDOM DRAWS
# ============================================================================
def wrap_phase(phase):
    """Reduce phases to [-pi, pi); pi itself maps to -pi."""
    wrapped = np.mod(np.asarray(phase, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    # np.mod can round up to exactly 2*pi for inputs just below a multiple of 2*pi
    wrapped = np.where(wrapped >= np.pi, wrapped - 2.0 * np.pi, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def complex_gaussian(gen: np.random.Generator, size: int, variance: float = 1.0) -> np.ndarray:
    """Circularly symmetric CN(0, variance) draws; real and imaginary parts each carry variance/2."""
    scale = math.sqrt(variance / 2.0)
    real = gen.standard_normal(size)
    imag = gen.standard_normal(size)
    return scale * (real + 1j * imag)
