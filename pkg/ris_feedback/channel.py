"""Array responses, channel realizations and end-to-end channel evaluation.

The BS-RIS channel H_r = sqrt(beta_r) a_K(varphi) a_N(theta1)^T is rank one and
is kept factored; the K x N matrix is never built.
"""
import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from ris_feedback.codebook import PhaseConfig
from ris_feedback.utils import complex_gaussian

PURE_LOS = math.inf
"""Rician factor of a pure line-of-sight link (kappa -> infinity)."""

HALF_PI = math.pi / 2.0


def is_pure_los(kappa: float) -> bool:
    return math.isinf(kappa) and kappa > 0


def _check_angle(name: str, angle: float) -> None:
    if not -HALF_PI < angle < HALF_PI:
        raise ValueError(f"{name} must lie in (-pi/2, pi/2), got {angle}")


# ============================================================================
# TYPES
# ============================================================================
@dataclass(frozen=True)
class Geometry:
    """Angles of one coherence block, in radians."""
    theta1: float  # RIS -> BS departure
    theta2: float  # UE -> RIS arrival
    varphi: float  # arrival at the BS

    def __post_init__(self):
        _check_angle("theta1", self.theta1)
        _check_angle("theta2", self.theta2)
        _check_angle("varphi", self.varphi)

    @property
    def sin_sum(self) -> float:
        return math.sin(self.theta1) + math.sin(self.theta2)


@dataclass(frozen=True)
class LinkGains:
    """Linear average power gains of the three links plus the Rician factor."""
    beta_r: float
    beta_t: float
    rho: float = 0.0
    kappa: float = PURE_LOS

    def __post_init__(self):
        if not self.beta_r > 0:
            raise ValueError(f"beta_r must be positive, got {self.beta_r}")
        if not self.beta_t > 0:
            raise ValueError(f"beta_t must be positive, got {self.beta_t}")
        if not self.rho >= 0:
            raise ValueError(f"rho must be non-negative, got {self.rho}")
        if not self.kappa >= 0:
            raise ValueError(f"kappa must be non-negative, got {self.kappa}")


class Substream(IntEnum):
    """Independent random objects drawn within one trial."""
    GEOMETRY = 0
    UE_RIS = 1
    STATIC_PATH = 2


@dataclass(frozen=True)
class RngStream:
    """Immutable descriptor of a reproducible random stream.

    Each call to `generator()` builds a fresh counter-based Philox generator
    keyed by `master_seed`. The trial number sits in counter word 2 and the
    substream in word 1; draws only advance word 0, so streams never overlap.
    """
    master_seed: int
    stream_index: int
    substream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index", "substream_index"):
            value = getattr(self, name)
            if not 0 <= value < 2**64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def substream(self, index: int) -> "RngStream":
        return RngStream(self.master_seed, self.stream_index, int(index))

    def generator(self) -> np.random.Generator:
        counter = (self.stream_index << 128) | (self.substream_index << 64)
        return np.random.Generator(np.random.Philox(key=self.master_seed, counter=counter))


# ============================================================================
# ARRAY RESPONSES & RANDOM CHANNELS
# ============================================================================
def array_response(size: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response; entry m is exp(-j pi m sin(angle))."""
    if size < 1:
        raise ValueError(f"Array size must be at least 1, got {size}")
    return np.exp(-1j * math.pi * np.arange(size) * math.sin(angle))


def draw_geometry(rng: RngStream) -> Geometry:
    """theta1, theta2 and varphi i.i.d. uniform over (-pi/2, pi/2)."""
    gen = rng.generator()
    # uniform() includes its lower end; the angle interval is open
    theta1, theta2, varphi = gen.uniform(np.nextafter(-HALF_PI, 0.0), HALF_PI, size=3)
    return Geometry(float(theta1), float(theta2), float(varphi))


def sample_rician_ht(N: int, theta2: float, beta_t: float, kappa: float, rng: RngStream) -> np.ndarray:
    """UE-RIS channel: LoS along a_N(theta2) plus a CN(0, I) diffuse part, split by kappa."""
    if not beta_t > 0:
        raise ValueError(f"beta_t must be positive, got {beta_t}")
    if not kappa >= 0:
        raise ValueError(f"kappa must be non-negative, got {kappa}")
    los = array_response(N, theta2)
    if is_pure_los(kappa):
        return math.sqrt(beta_t) * los

    diffuse = complex_gaussian(rng.generator(), N)
    return (math.sqrt(kappa * beta_t / (kappa + 1.0)) * los
            + math.sqrt(beta_t / (kappa + 1.0)) * diffuse)


def sample_static_path(K: int, rho: float, rng: RngStream) -> np.ndarray:
    """Direct UE-BS channel h_s ~ CN(0, rho I_K)."""
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    if not rho >= 0:
        raise ValueError(f"rho must be non-negative, got {rho}")
    if rho == 0:
        return np.zeros(K, dtype=complex)
    return complex_gaussian(rng.generator(), K, variance=rho)


# ============================================================================
# END-TO-END CHANNEL
# ============================================================================
def array_factor(theta1: float, theta2: float, config: PhaseConfig) -> complex:
    """a_N(theta1)^T D_psi a_N(theta2); the common phase is not applied."""
    n = np.arange(config.N)
    sin_sum = math.sin(theta1) + math.sin(theta2)
    return complex(np.sum(np.exp(-1j * (math.pi * n * sin_sum - config.psi))))


def end_to_end_channel(geometry: Geometry, gains: LinkGains, h_t: np.ndarray,
                       h_s: np.ndarray, config: PhaseConfig) -> np.ndarray:
    """h = h_s + sqrt(beta_r) a_K(varphi) a_N(theta1)^T D e^{j phi} h_t.

    h_t already carries sqrt(beta_t); K is taken from the length of h_s.
    """
    h_t = np.asarray(h_t)
    h_s = np.asarray(h_s)
    if config.N != h_t.shape[0]:
        raise ValueError(f"Configuration has {config.N} phases but h_t has {h_t.shape[0]} entries")
    a_n = array_response(config.N, geometry.theta1)
    reflected = np.sum(a_n * np.exp(1j * (config.psi + config.phi)) * h_t)
    a_k = array_response(h_s.shape[0], geometry.varphi)
    return h_s + math.sqrt(gains.beta_r) * reflected * a_k


def channel_gain(h: np.ndarray) -> float:
    """MRC channel gain ||h||^2."""
    h = np.asarray(h)
    return float(np.real(np.vdot(h, h)))
