"""LoS angle-sum codebook, phase quantizers and the feedback message codec.

Indices are 0-based throughout: codebook entry i = 0..2^l-1 and RIS element
n = 0..N-1, so entry i is Theta_i = -2 + 2^(1-l) + i 2^(2-l) and the phase of
element n is pi n Theta_i.

FeedbackMessage payload layout (MSB first, zero padded to a byte boundary):
    codebook    : [l-bit codebook index][d-bit common-phase index]
    elementwise : N consecutive b-bit words in element order
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import bitstruct
import numpy as np

from ris_feedback.utils import wrap_phase

HPBW_BITS_OFFSET = 1.1746
# Values within this fraction of a grid step from a cell boundary count as ties.
TIE_TOLERANCE = 1e-9

Scheme = Literal["codebook", "elementwise"]


class MalformedMessageError(ValueError):
    """Payload does not match the quantizer layout it is decoded with."""


# ============================================================================
# TYPES
# ============================================================================
@dataclass(frozen=True, eq=False)
class PhaseConfig:
    """Per-element phases psi (length N) and the common rotation phi, all in [-pi, pi)."""
    psi: np.ndarray
    phi: float = 0.0

    def __post_init__(self):
        psi = np.atleast_1d(wrap_phase(np.asarray(self.psi, dtype=float)))
        if psi.ndim != 1 or psi.shape[0] < 1:
            raise ValueError(f"psi must be a non-empty vector, got shape {psi.shape}")
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "phi", wrap_phase(float(self.phi)))

    @property
    def N(self) -> int:
        return self.psi.shape[0]

    def with_phi(self, phi: float) -> "PhaseConfig":
        return PhaseConfig(self.psi, phi)


@dataclass(frozen=True)
class LosCodebook:
    """2^l midpoints of equal cells covering the angle-sum range (-2, 2)."""
    l: int
    N: int

    def __post_init__(self):
        if self.l < 0:
            raise ValueError(f"Codebook bits must be non-negative, got {self.l}")
        if self.N < 1:
            raise ValueError(f"N must be at least 1, got {self.N}")

    @property
    def size(self) -> int:
        return 1 << self.l

    @property
    def step(self) -> float:
        return 2.0 ** (2 - self.l)

    def entries(self) -> np.ndarray:
        return -2.0 + 2.0 ** (1 - self.l) + np.arange(self.size) * self.step


@dataclass(frozen=True)
class QuantizerSpec:
    """Bit allocation of one feedback message."""
    scheme: Scheme
    l: int = 0
    d: int = 0
    b: int = 0

    def __post_init__(self):
        if self.scheme not in ("codebook", "elementwise"):
            raise ValueError(f"Unknown feedback scheme '{self.scheme}'")
        for name in ("l", "d", "b"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")

    def t_bits(self, N: int) -> int:
        if self.scheme == "codebook":
            return self.l + self.d
        return N * self.b

    def field_widths(self, N: int) -> list[int]:
        if self.scheme == "codebook":
            return [self.l, self.d]
        return [self.b] * N


@dataclass(frozen=True)
class FeedbackMessage:
    scheme: Scheme
    payload: bytes
    t: int

    @property
    def payload_bits(self) -> str:
        bits = "".join(f"{byte:08b}" for byte in self.payload)
        return bits[:self.t]

    def hex(self) -> str:
        return self.payload.hex()


# ============================================================================
# LOS CODEBOOK
# ============================================================================
def required_bits(N: int) -> int:
    """Smallest codebook size keeping every angle pair inside the half-power beamwidth."""
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    return math.ceil(HPBW_BITS_OFFSET + math.log2(N))


def rule_of_thumb_bits(N: int) -> int:
    """Total control bits for LoS with a static path: log2(N) + 4."""
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    return math.ceil(math.log2(N)) + 4


def codebook_entry(cb: LosCodebook, i: int) -> float:
    if not 0 <= i < cb.size:
        raise ValueError(f"Codebook index {i} out of range [0, {cb.size})")
    return -2.0 + 2.0 ** (1 - cb.l) + i * cb.step


def nearest_entry(cb: LosCodebook, theta_sum):
    """Index of the entry closest to theta_sum; exact cell boundaries go to the lower index.

    Accepts a scalar or an array of angle sums.
    """
    values = np.asarray(theta_sum, dtype=float)
    if np.any(np.abs(values) > 2.0) or np.any(np.isnan(values)):
        raise ValueError(f"Angle sum must lie in [-2, 2], got {theta_sum}")
    position = (values + 2.0) / cb.step - 0.5
    index = np.clip(np.ceil(position - 0.5 - TIE_TOLERANCE), 0, cb.size - 1).astype(np.int64)
    if index.ndim == 0:
        return int(index)
    return index


def expand_entry(i: int, cb: LosCodebook) -> PhaseConfig:
    """Configuration D_i the RIS derives from a received codebook index."""
    theta = codebook_entry(cb, i)
    return PhaseConfig(math.pi * np.arange(cb.N) * theta)


def optimal_phases(theta1: float, theta2: float, N: int) -> PhaseConfig:
    """Phases that co-phase every element for the LoS cascade."""
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    sin_sum = math.sin(theta1) + math.sin(theta2)
    return PhaseConfig(math.pi * np.arange(N) * sin_sum)


# ============================================================================
# UNIT-CIRCLE QUANTIZERS
# ============================================================================
def _grid_index(phase, bits: int):
    """Index k of the nearest point -pi + 2 pi k / 2^bits; ties go to the upper point."""
    levels = 1 << bits
    position = (wrap_phase(phase) + math.pi) * levels / (2.0 * math.pi)
    return np.mod(np.floor(position + 0.5 + TIE_TOLERANCE), levels).astype(np.int64)


def _grid_phase(index, bits: int):
    return -math.pi + 2.0 * math.pi * np.asarray(index, dtype=float) / (1 << bits)


def quantize_elementwise(config: PhaseConfig, b: int) -> PhaseConfig:
    """Round each psi_n to one of 2^b points anchored at -pi; phi is carried over."""
    if b < 1:
        raise ValueError(f"Element-wise quantization needs at least 1 bit, got {b}")
    return PhaseConfig(_grid_phase(_grid_index(config.psi, b), b), config.phi)


def elementwise_indices(config: PhaseConfig, b: int) -> tuple[int, ...]:
    if b < 1:
        raise ValueError(f"Element-wise quantization needs at least 1 bit, got {b}")
    return tuple(int(k) for k in _grid_index(config.psi, b))


def optimal_common_phase(a_K: np.ndarray, h_s: np.ndarray, array_factor: complex = 1.0) -> float:
    """Common RIS rotation aligning the reflected path with the static path.

    With optimal phases the array factor is real and positive and the result is
    arg(a_K^H h_s). A zero static path gives 0.
    """
    inner = complex(np.vdot(a_K, h_s))
    if inner == 0:
        return 0.0
    correction = np.angle(array_factor) if array_factor != 0 else 0.0
    return wrap_phase(np.angle(inner) - correction)


def quantize_common_phase(phi: float, d: int) -> float:
    """Nearest of 2^d points 2 pi k / 2^d - pi; with d = 0 no phase is conveyed and 0 is used."""
    if d < 0:
        raise ValueError(f"d must be non-negative, got {d}")
    if d == 0:
        return 0.0
    return float(_grid_phase(_grid_index(phi, d), d))


def phase_index(phi: float, d: int) -> int:
    if d < 0:
        raise ValueError(f"d must be non-negative, got {d}")
    if d == 0:
        return 0
    return int(_grid_index(phi, d))


# ============================================================================
# FEEDBACK MESSAGE CODEC
# ============================================================================
@lru_cache(maxsize=256)
def _compiled_format(widths: tuple[int, ...]):
    return bitstruct.compile("".join(f"u{w}" for w in widths))


def _checked_values(spec: QuantizerSpec, indices, N: int) -> list[int]:
    widths = spec.field_widths(N)
    values = [int(v) for v in indices]
    if len(values) != len(widths):
        raise ValueError(f"Expected {len(widths)} indices for {spec.scheme} feedback, got {len(values)}")
    for value, width in zip(values, widths, strict=True):
        if not 0 <= value < (1 << width):
            raise ValueError(f"Index {value} does not fit in {width} bits")
    return values


def encode_message(spec: QuantizerSpec, indices) -> FeedbackMessage:
    """Pack indices into a FeedbackMessage.

    codebook: indices = (codebook index, common-phase index).
    elementwise: indices = one b-bit index per RIS element.
    """
    indices = list(indices)
    N = len(indices) if spec.scheme == "elementwise" else 1
    values = _checked_values(spec, indices, N)
    widths = spec.field_widths(N)
    packed = [(w, v) for w, v in zip(widths, values, strict=True) if w > 0]
    t = spec.t_bits(N)
    if not packed:
        return FeedbackMessage(spec.scheme, b"", t)
    fmt = _compiled_format(tuple(w for w, _ in packed))
    return FeedbackMessage(spec.scheme, fmt.pack(*(v for _, v in packed)), t)


def decode_message(msg: FeedbackMessage, spec: QuantizerSpec, N: int) -> tuple[int, ...]:
    """Inverse of encode_message."""
    if msg.scheme != spec.scheme:
        raise MalformedMessageError(f"Message scheme '{msg.scheme}' does not match quantizer '{spec.scheme}'")
    t = spec.t_bits(N)
    if msg.t != t:
        raise MalformedMessageError(f"Message carries {msg.t} bits, quantizer expects {t}")
    if len(msg.payload) != (t + 7) // 8:
        raise MalformedMessageError(f"Payload of {len(msg.payload)} bytes cannot hold exactly {t} bits")
    if t % 8 and msg.payload[-1] & ((1 << (8 - t % 8)) - 1):
        raise MalformedMessageError("Padding bits after the last field must be zero")

    widths = spec.field_widths(N)
    present = tuple(w for w in widths if w > 0)
    unpacked = iter(_compiled_format(present).unpack(msg.payload) if present else ())
    return tuple(int(next(unpacked)) if w > 0 else 0 for w in widths)


def config_from_indices(spec: QuantizerSpec, indices, N: int) -> PhaseConfig:
    """Configuration the RIS controller applies after decoding a message."""
    values = _checked_values(spec, indices, N)
    if spec.scheme == "codebook":
        config = expand_entry(values[0], LosCodebook(spec.l, N))
        if spec.d == 0:
            return config
        return config.with_phi(float(_grid_phase(values[1], spec.d)))
    if spec.b < 1:
        raise ValueError("Element-wise feedback needs at least 1 bit per element")
    return PhaseConfig(_grid_phase(values, spec.b))
