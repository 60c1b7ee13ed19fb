"""Command-line front end.

    python app.py fig2 --out results/fig2.csv --threads 0
    python app.py fig3 --trials 2000 --seed 7
    python app.py run --config scenario.env
    python app.py encode --l 9 --index 5 --d 2 --phase-index 3
    python app.py decode 02e0 --l 9 --d 2
    python app.py bits --N 256
"""
import argparse
import logging
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ris_feedback import __version__
from ris_feedback.analysis import codebook_worst_case_gain, hpbw
from ris_feedback.channel import PURE_LOS
from ris_feedback.codebook import (
    FeedbackMessage,
    MalformedMessageError,
    QuantizerSpec,
    config_from_indices,
    decode_message,
    encode_message,
    required_bits,
    rule_of_thumb_bits,
)
from ris_feedback.config import ConfigError, apply_overrides, describe, load_config, load_settings
from ris_feedback.database import RunLedger
from ris_feedback.montecarlo import (
    IdealScheme,
    MonteCarloEngine,
    Scenario,
    SweepResult,
    codebook_budgets,
    elementwise_budgets,
    split_budgets,
    trial_feedback,
)
from ris_feedback.utils import from_db

UTC = timezone.utc

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

FIG2_CODEBOOK_BITS = range(1, 13)
FIG2_ELEMENTWISE_BITS = (1, 2, 3)
FIG3_TOTAL_BITS = range(2, 15)
FIG3_COMMON_PHASE_BITS = (0, 1, 2)
FIG3_RHO_DB = -120.0
HPBW_MARKER = "×"


class RunManifest(BaseModel):
    """Provenance written next to every CSV."""
    scenario: Scenario
    pure_los: bool
    version: str
    timestamp: datetime
    command: str
    csv_path: str | None = None
    manifest_path: str | None = None


# ============================================================================
# PRESETS
# ============================================================================
def fig2_scenario(base: Scenario | None = None) -> Scenario:
    """Rician cascaded link only; the static path is neglected."""
    return (base or Scenario()).model_copy(update={"rho": 0.0})


def preset_fig2(base: Scenario | None = None, threads: int = 1) -> SweepResult:
    """Ideal phases, the LoS codebook over l = 1..12 and element-wise b = 1..3 under Rician fading."""
    scenario = fig2_scenario(base)
    budgets = [IdealScheme(), *codebook_budgets(FIG2_CODEBOOK_BITS), *elementwise_budgets(FIG2_ELEMENTWISE_BITS)]
    with MonteCarloEngine(threads) as engine:
        return engine.sweep(scenario, budgets)


def fig3_scenario(base: Scenario | None = None) -> Scenario:
    """Pure LoS UE-RIS link plus a Rayleigh static path (-120 dB unless the base sets one)."""
    scenario = base or Scenario()
    rho = scenario.rho if scenario.rho > 0 else from_db(FIG3_RHO_DB)
    return scenario.model_copy(update={"kappa": PURE_LOS, "rho": rho})


def preset_fig3(base: Scenario | None = None, threads: int = 1) -> SweepResult:
    """Total budget t split into l = t - d codebook bits and d common-phase bits."""
    scenario = fig3_scenario(base)
    budgets = [IdealScheme(), *split_budgets(FIG3_TOTAL_BITS, FIG3_COMMON_PHASE_BITS)]
    with MonteCarloEngine(threads) as engine:
        return engine.sweep(scenario, budgets)


def run_single(scenario: Scenario, threads: int = 1) -> SweepResult:
    with MonteCarloEngine(threads) as engine:
        return engine.sweep(scenario, [scenario.scheme])


# ============================================================================
# OUTPUT
# ============================================================================
def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.6g", lineterminator="\n")
    return path


def manifest_path_for(csv_path: str | Path) -> Path:
    return Path(f"{csv_path}.manifest.json")


def write_manifest(manifest: RunManifest, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def format_summary(result: SweepResult) -> str:
    """Sweep table with the HPBW-satisfying codebook row marked."""
    display = result.to_frame()
    display.insert(0, "hpbw", [HPBW_MARKER if row.hpbw_marked else "" for row in result.rows])
    return display.to_string(index=False, float_format=lambda v: f"{v:.4g}", na_rep="-")


def record_run(result: SweepResult, command: str, csv_path: Path | None, settings) -> RunManifest:
    """Write the manifest (when a CSV was written) and log to the ledger if enabled."""
    manifest = RunManifest(
        scenario=result.scenario,
        pure_los=result.scenario.pure_los,
        version=__version__,
        timestamp=datetime.now(UTC),
        command=command,
        csv_path=str(csv_path) if csv_path else None,
        manifest_path=str(manifest_path_for(csv_path)) if csv_path else None,
    )
    if csv_path:
        write_manifest(manifest, manifest.manifest_path)
        logger.info(f"✓ Wrote {csv_path} and {manifest.manifest_path}")

    if settings.ledger_enabled:
        ledger = RunLedger(settings.ledger_path)
        try:
            ledger.connect()
            ledger.log_run(manifest, result.to_frame())
        except Exception as e:
            logger.warning(f"⚠️  Failed to log run to {settings.ledger_path}: {e}")
        finally:
            ledger.close()
    return manifest


# ============================================================================
# COMMANDS
# ============================================================================
def _scenario_from_args(args) -> Scenario | None:
    base = load_config(args.config) if args.config else None
    if args.trials is None and args.seed is None:
        return base
    return apply_overrides(base or Scenario(), trials=args.trials, master_seed=args.seed)


def _threads(args, settings) -> int:
    return settings.threads if args.threads is None else args.threads


def cmd_sweep(args, settings) -> int:
    scenario = _scenario_from_args(args)
    threads = _threads(args, settings)
    if args.command == "fig2":
        result = preset_fig2(scenario, threads)
    elif args.command == "fig3":
        result = preset_fig3(scenario, threads)
    else:
        result = run_single(scenario or Scenario(), threads)

    logger.info(f"Scenario: {describe(result.scenario)}")
    csv_path = write_csv(result.to_frame(), args.out) if args.out else None
    record_run(result, args.command, csv_path, settings)
    print(format_summary(result))
    return EXIT_OK


def _parse_indices(text: str) -> list[int]:
    try:
        return [int(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError:
        raise ValueError(f"Indices must be comma-separated integers, got '{text}'")


def _spec_from_args(args) -> QuantizerSpec:
    if args.b is not None:
        if args.l is not None or args.d:
            raise ValueError("Give either --b (element-wise) or --l/--d (codebook), not both")
        return QuantizerSpec("elementwise", b=args.b)
    return QuantizerSpec("codebook", l=args.l or 0, d=args.d or 0)


def cmd_encode(args, settings) -> int:
    if args.config:
        scenario = load_config(args.config)
        spec, indices = trial_feedback(scenario, args.trial)
        logger.info(f"Trial {args.trial} of {describe(scenario)}")
    else:
        spec = _spec_from_args(args)
        if spec.scheme == "elementwise":
            if args.indices is None:
                raise ValueError("Element-wise encoding needs --indices")
            indices = _parse_indices(args.indices)
        else:
            indices = (args.index, args.phase_index)
    msg = encode_message(spec, indices)
    print(f"scheme  {msg.scheme}")
    print(f"t       {msg.t}")
    print(f"hex     {msg.hex()}")
    print(f"bits    {msg.payload_bits}")
    return EXIT_OK


def cmd_decode(args, settings) -> int:
    spec = _spec_from_args(args)
    try:
        payload = bytes.fromhex(args.hex)
    except ValueError:
        raise MalformedMessageError(f"'{args.hex}' is not a hex string")
    msg = FeedbackMessage(spec.scheme, payload, spec.t_bits(args.N))
    indices = decode_message(msg, spec, args.N)
    config = config_from_indices(spec, indices, args.N)
    print(f"indices {' '.join(str(i) for i in indices)}")
    print(f"phi     {config.phi:.6f}")
    print("psi     " + np.array2string(config.psi, precision=6, separator=" ", threshold=16))
    return EXIT_OK


def cmd_bits(args, settings) -> int:
    N = args.N
    l = required_bits(N)
    print(f"N                        {N}")
    print(f"required codebook bits   {l}")
    print(f"hpbw                     {hpbw(N):.6g}")
    print(f"worst-case gain / N^2    {codebook_worst_case_gain(N, l) / N**2:.4f}")
    print(f"rule of thumb total bits {rule_of_thumb_bits(N)}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_sweep,
    "fig2": cmd_sweep,
    "fig3": cmd_sweep,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "bits": cmd_bits,
}


# ============================================================================
# PARSER
# ============================================================================
def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {value}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _seed(text: str) -> int:
    value = _non_negative(text)
    if value >= 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def _add_spec_arguments(parser):
    parser.add_argument("--l", type=_non_negative, help="codebook index bits")
    parser.add_argument("--d", type=_non_negative, default=0, help="common-phase bits")
    parser.add_argument("--b", type=_positive, help="bits per element (element-wise scheme)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ris-feedback", description="RIS control-channel feedback simulator")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in (("run", "simulate the scheme of a config document"),
                       ("fig2", "codebook vs element-wise feedback under Rician fading"),
                       ("fig3", "splitting bits between codebook index and common phase")):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", help="scenario document (key = value lines)")
        cmd.add_argument("--out", help="CSV output path; a manifest is written next to it")
        cmd.add_argument("--trials", type=_positive, help="override the number of trials")
        cmd.add_argument("--seed", type=_seed, help="override the master seed")
        cmd.add_argument("--threads", type=_non_negative, help="worker processes, 0 = all cores")

    encode = sub.add_parser("encode", help="pack feedback indices into a message")
    _add_spec_arguments(encode)
    encode.add_argument("--index", type=_non_negative, default=0, help="codebook index")
    encode.add_argument("--phase-index", type=_non_negative, default=0, help="common-phase index")
    encode.add_argument("--indices", help="comma-separated element-wise indices")
    encode.add_argument("--config", help="encode the message of a simulated trial instead")
    encode.add_argument("--trial", type=_non_negative, default=0, help="trial index used with --config")

    decode = sub.add_parser("decode", help="unpack a hex message and rebuild the RIS phases")
    decode.add_argument("hex", help="payload as hex, e.g. 02e0")
    _add_spec_arguments(decode)
    decode.add_argument("--N", type=_positive, default=128, help="number of RIS elements")

    bits = sub.add_parser("bits", help="feedback bit requirements for N elements")
    bits.add_argument("--N", type=_positive, default=128, help="number of RIS elements")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        settings = load_settings()
        return COMMANDS[args.command](args, settings)
    except ConfigError as e:
        logger.error(f"⚠️  Config error: {e}")
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, RuntimeError, OSError) as e:
        logger.error(f"⚠️  {type(e).__name__}: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
