"""Seeded Monte Carlo engine behind the feedback-budget experiments.

Every trial is one coherence block: draw the geometry and fading, let the BS
compute a configuration for the selected feedback scheme, and score the SNR
of the configuration the RIS actually applies. Trial i draws from stream i
only, so results do not depend on scheduling or on the scheme being scored.
"""
import logging
import math
import os
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Annotated, Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ris_feedback.analysis import snr
from ris_feedback.channel import (
    PURE_LOS,
    Geometry,
    LinkGains,
    RngStream,
    Substream,
    array_factor,
    array_response,
    channel_gain,
    draw_geometry,
    end_to_end_channel,
    sample_rician_ht,
    sample_static_path,
)
from ris_feedback.codebook import (
    LosCodebook,
    PhaseConfig,
    QuantizerSpec,
    elementwise_indices,
    expand_entry,
    nearest_entry,
    optimal_common_phase,
    optimal_phases,
    phase_index,
    quantize_common_phase,
    quantize_elementwise,
    required_bits,
)
from ris_feedback.utils import dbm_to_watts, from_db, to_db

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = 10_000
DEFAULT_SEED = 42
CI95_Z = 1.96
CSV_COLUMNS = [
    "scheme", "l", "d", "b", "t_bits", "trials", "seed",
    "mean_snr_db", "mean_snr_linear", "std", "ci95",
]


# ============================================================================
# FEEDBACK SCHEMES
# ============================================================================
class IdealScheme(BaseModel):
    """Unquantized optimal phases; no control-channel limit."""
    model_config = ConfigDict(frozen=True)
    kind: Literal["ideal"] = "ideal"

    @property
    def label(self) -> str:
        return "ideal"

    def t_bits(self, N: int) -> int | None:
        return None


class CodebookScheme(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["codebook"] = "codebook"
    l: int = Field(ge=0, le=52)
    d: int = Field(default=0, ge=0, le=32)

    @property
    def label(self) -> str:
        return f"codebook(l={self.l},d={self.d})"

    def t_bits(self, N: int) -> int:
        return self.l + self.d

    def quantizer(self) -> QuantizerSpec:
        return QuantizerSpec("codebook", l=self.l, d=self.d)


class ElementwiseScheme(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["elementwise"] = "elementwise"
    b: int = Field(ge=1, le=32)

    @property
    def label(self) -> str:
        return f"elementwise(b={self.b})"

    def t_bits(self, N: int) -> int:
        return N * self.b

    def quantizer(self) -> QuantizerSpec:
        return QuantizerSpec("elementwise", b=self.b)


FeedbackScheme = Annotated[IdealScheme | CodebookScheme | ElementwiseScheme, Field(discriminator="kind")]


def codebook_budgets(l_values, d: int = 0) -> list[CodebookScheme]:
    return [CodebookScheme(l=l, d=d) for l in l_values]


def split_budgets(totals, splits=(0, 1, 2)) -> list[CodebookScheme]:
    """Codebook schemes spending d of t total bits on the common phase and l = t - d on the index."""
    return [CodebookScheme(l=t - d, d=d) for d in splits for t in totals if t - d >= 0]


def elementwise_budgets(b_values) -> list[ElementwiseScheme]:
    return [ElementwiseScheme(b=b) for b in b_values]


# ============================================================================
# SCENARIO
# ============================================================================
class Scenario(BaseModel):
    """Full parameterization of one experiment; defaults follow the simulation table."""
    model_config = ConfigDict(frozen=True)

    K: int = Field(default=4, ge=1)
    N: int = Field(default=128, ge=1)
    P: float = Field(default=0.1, gt=0)
    sigma2: float = Field(default=dbm_to_watts(-100.9), gt=0)
    beta_r: float = Field(default=from_db(-80.0), gt=0)
    beta_t: float = Field(default=from_db(-80.0), gt=0)
    rho: float = Field(default=from_db(-120.0), ge=0)
    kappa: float = Field(default=from_db(10.0), ge=0)
    scheme: FeedbackScheme = Field(default_factory=IdealScheme)
    trials: int = Field(default=DEFAULT_TRIALS, ge=1)
    master_seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2**64)
    # Fixed angles replace the uniform draw of the corresponding angle.
    theta1: float | None = None
    theta2: float | None = None
    varphi: float | None = None

    @field_validator("P", "sigma2", "beta_r", "beta_t", "rho")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @field_validator("theta1", "theta2", "varphi")
    @classmethod
    def _open_half_circle(cls, value: float | None) -> float | None:
        if value is not None and not -math.pi / 2 < value < math.pi / 2:
            raise ValueError("angle must lie in (-pi/2, pi/2) radians")
        return value

    @property
    def pure_los(self) -> bool:
        return self.kappa == PURE_LOS

    def link_gains(self) -> LinkGains:
        return LinkGains(beta_r=self.beta_r, beta_t=self.beta_t, rho=self.rho, kappa=self.kappa)

    def with_scheme(self, scheme) -> "Scenario":
        return self.model_copy(update={"scheme": scheme})


@dataclass(frozen=True)
class Aggregate:
    mean_snr_linear: float
    mean_snr_db: float
    sample_std: float
    ci95_halfwidth: float
    trials: int

    @classmethod
    def from_samples(cls, snrs: np.ndarray) -> "Aggregate":
        snrs = np.asarray(snrs, dtype=float)
        trials = snrs.shape[0]
        if trials < 1:
            raise ValueError("Cannot aggregate zero trials")
        mean = float(np.mean(snrs))
        std = float(np.std(snrs, ddof=1)) if trials > 1 else 0.0
        return cls(mean, to_db(mean), std, CI95_Z * std / math.sqrt(trials), trials)


@dataclass(frozen=True)
class SweepRow:
    scheme: IdealScheme | CodebookScheme | ElementwiseScheme
    t_bits: int | None
    aggregate: Aggregate
    hpbw_marked: bool = False


@dataclass
class SweepResult:
    scenario: Scenario
    rows: list[SweepRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def row_for(self, scheme) -> SweepRow:
        for row in self.rows:
            if row.scheme == scheme:
                return row
        raise KeyError(f"No sweep row for {scheme.label}")

    def to_frame(self) -> pd.DataFrame:
        """Rows in the fixed CSV column order; absent bit fields are <NA>."""
        records = []
        for row in self.rows:
            agg = row.aggregate
            records.append({
                "scheme": row.scheme.kind,
                "l": getattr(row.scheme, "l", None),
                "d": getattr(row.scheme, "d", None),
                "b": getattr(row.scheme, "b", None),
                "t_bits": row.t_bits,
                "trials": agg.trials,
                "seed": self.scenario.master_seed,
                "mean_snr_db": agg.mean_snr_db,
                "mean_snr_linear": agg.mean_snr_linear,
                "std": agg.sample_std,
                "ci95": agg.ci95_halfwidth,
            })
        frame = pd.DataFrame.from_records(records, columns=CSV_COLUMNS)
        for column in ("l", "d", "b", "t_bits", "trials"):
            frame[column] = pd.array(frame[column].tolist(), dtype="Int64")
        return frame


# ============================================================================
# SINGLE TRIAL
# ============================================================================
def _realize(scenario: Scenario, trial_index: int):
    stream = RngStream(scenario.master_seed, trial_index)
    drawn = draw_geometry(stream.substream(Substream.GEOMETRY))
    geometry = Geometry(
        drawn.theta1 if scenario.theta1 is None else scenario.theta1,
        drawn.theta2 if scenario.theta2 is None else scenario.theta2,
        drawn.varphi if scenario.varphi is None else scenario.varphi,
    )
    h_t = sample_rician_ht(scenario.N, geometry.theta2, scenario.beta_t, scenario.kappa,
                           stream.substream(Substream.UE_RIS))
    h_s = sample_static_path(scenario.K, scenario.rho, stream.substream(Substream.STATIC_PATH))
    return geometry, h_t, h_s


def _configure(scenario: Scenario, geometry: Geometry, h_s: np.ndarray):
    """Configuration applied at the RIS and the indices the BS feeds back (None for ideal)."""
    scheme = scenario.scheme
    static = scenario.rho > 0
    a_k = array_response(scenario.K, geometry.varphi) if static else None

    if scheme.kind == "codebook":
        cb = LosCodebook(scheme.l, scenario.N)
        index = nearest_entry(cb, geometry.sin_sum)
        config = expand_entry(index, cb)
        phi = 0.0
        if static:
            # align with the reflected path the chosen entry actually produces
            phi = optimal_common_phase(a_k, h_s, array_factor(geometry.theta1, geometry.theta2, config))
        applied = config.with_phi(quantize_common_phase(phi, scheme.d))
        return applied, (index, phase_index(phi, scheme.d))

    ideal = optimal_phases(geometry.theta1, geometry.theta2, scenario.N)
    phi = optimal_common_phase(a_k, h_s) if static else 0.0
    if scheme.kind == "ideal":
        return ideal.with_phi(phi), None

    # element-wise messages have no common-phase field: fold the rotation into every element
    rotated = PhaseConfig(ideal.psi + phi)
    return quantize_elementwise(rotated, scheme.b), elementwise_indices(rotated, scheme.b)


def run_trial(scenario: Scenario, trial_index: int) -> float:
    """Linear SNR of one coherence block."""
    geometry, h_t, h_s = _realize(scenario, trial_index)
    config, _ = _configure(scenario, geometry, h_s)
    h = end_to_end_channel(geometry, scenario.link_gains(), h_t, h_s, config)
    return snr(scenario.P, scenario.sigma2, channel_gain(h))


def trial_feedback(scenario: Scenario, trial_index: int) -> tuple[QuantizerSpec, tuple[int, ...]]:
    """Control message content the BS sends in the given coherence block."""
    if scenario.scheme.kind == "ideal":
        raise ValueError("The ideal scheme has no finite feedback message")
    geometry, _, h_s = _realize(scenario, trial_index)
    _, indices = _configure(scenario, geometry, h_s)
    return scenario.scheme.quantizer(), tuple(indices)


def _run_chunk(task) -> np.ndarray:
    scenario, start, stop = task
    return np.array([run_trial(scenario, i) for i in range(start, stop)], dtype=float)


# ============================================================================
# ENGINE
# ============================================================================
def resolve_workers(threads: int) -> int:
    if threads < 0:
        raise ValueError(f"threads must be >= 0, got {threads}")
    if threads == 0:
        return os.cpu_count() or 1
    return threads


class MonteCarloEngine:
    """Runs scenarios sequentially or on a process pool shared across a sweep.

    Per-trial SNRs are gathered in trial order before aggregation, so parallel
    and sequential runs produce identical aggregates.
    """

    def __init__(self, threads: int = 1):
        self.workers = resolve_workers(threads)
        self._pool = None

    def __enter__(self):
        if self.workers > 1:
            self._pool = Pool(processes=self.workers)
        return self

    def __exit__(self, *exc):
        if self._pool is not None:
            self._pool.close()
            self._pool.join()
            self._pool = None

    def trial_snrs(self, scenario: Scenario) -> np.ndarray:
        if self._pool is None or scenario.trials < 2 * self.workers:
            return _run_chunk((scenario, 0, scenario.trials))
        bounds = np.linspace(0, scenario.trials, 4 * self.workers + 1).astype(int)
        tasks = [(scenario, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:], strict=True) if b > a]
        logger.debug(f"Dispatching {len(tasks)} chunks to {self.workers} workers")
        return np.concatenate(self._pool.map(_run_chunk, tasks))

    def run(self, scenario: Scenario) -> Aggregate:
        aggregate = Aggregate.from_samples(self.trial_snrs(scenario))
        logger.info(f"✓ {scenario.scheme.label}: {aggregate.trials} trials, "
                    f"mean SNR {aggregate.mean_snr_db:.3f} dB")
        return aggregate

    def sweep(self, scenario: Scenario, budgets) -> SweepResult:
        result = SweepResult(scenario)
        hpbw_l = required_bits(scenario.N)
        for scheme in budgets:
            aggregate = self.run(scenario.with_scheme(scheme))
            marked = scheme.kind == "codebook" and scheme.l == hpbw_l
            result.rows.append(SweepRow(scheme, scheme.t_bits(scenario.N), aggregate, marked))
        return result


def run(scenario: Scenario, threads: int = 1) -> Aggregate:
    with MonteCarloEngine(threads) as engine:
        return engine.run(scenario)


def sweep(scenario: Scenario, budgets, threads: int = 1) -> SweepResult:
    with MonteCarloEngine(threads) as engine:
        return engine.sweep(scenario, budgets)
