"""Command-line front end: simulate -> spectra -> identify -> compare.

Every subcommand reads an optional JSON ``--config`` file with two optional
sections, ``campaign`` (test matrix for ``simulate``/``campaign``) and
``pipeline`` (processing parameters), and writes plain-text or JSON outputs
that embed the configuration actually used.

Exit codes: 0 success, 1 processing error, 2 invalid configuration,
3 missing input file, 4 no modes found.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    CampaignConfig,
    ModeSet,
    Mode,
    load_modeset,
    load_record,
    default_campaign,
    save_modeset,
    save_record,
)
from .metrics import compare_runs
from .pipeline import PipelineConfig, identify
from .rig import DEFAULT_SENSOR_POSITIONS, case_from_descriptor, default_truth, simulate
from .spectral import anpsd, peak_screen, welch_psd
from .stabilisation import SweepError

logger = logging.getLogger("pvtmodal")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_NO_MODES = 4

CONFIG_SECTIONS = ("campaign", "pipeline", "identify_cases", "baseline_case")


class ConfigError(Exception):
    pass


class MissingFileError(Exception):
    pass


class NoModesError(Exception):
    pass


# ------------------------------------------------------------------ config


def _read_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise MissingFileError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: top level must be a JSON object")
    unknown = set(raw) - set(CONFIG_SECTIONS)
    if unknown:
        raise ConfigError(f"{p}: unknown sections {sorted(unknown)}")
    # validate every section up front so a bad file fails the same way
    # whichever subcommand reads it
    _pipeline_config(raw, None)
    _campaign_config(raw, None)
    return raw


def _parse_range(text: str, what: str, n: int) -> tuple[float, ...]:
    parts = text.split(":")
    if len(parts) != n:
        raise ConfigError(f"{what} must have {n} ':'-separated fields, got {text!r}")
    try:
        return tuple(float(x) for x in parts)
    except ValueError:
        raise ConfigError(f"{what}: non-numeric field in {text!r}") from None


def _pipeline_config(raw: dict, args) -> PipelineConfig:
    try:
        cfg = PipelineConfig.from_dict(raw.get("pipeline", {}))
        stab = cfg.stab
        if getattr(args, "band", None):
            lo, hi = _parse_range(args.band, "--band", 2)
            stab = replace(stab, freq_range=(lo, hi))
            cfg = replace(cfg, peak_band=(lo, hi))
        if getattr(args, "orders", None):
            k_min, k_step, k_max = _parse_range(args.orders, "--orders", 3)
            if any(k != int(k) for k in (k_min, k_step, k_max)):
                raise ConfigError("--orders fields must be integers")
            stab = replace(stab, k_min=int(k_min), k_step=int(k_step), k_max=int(k_max))
        if getattr(args, "reference", None):
            cfg = replace(cfg, reference=args.reference)
        return replace(cfg, stab=stab)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid pipeline configuration: {exc}") from None


def _campaign_config(raw: dict, args) -> CampaignConfig:
    try:
        camp = CampaignConfig.from_dict(raw["campaign"]) if "campaign" in raw else default_campaign()
        if getattr(args, "seed", None) is not None:
            camp = replace(camp, seed=int(args.seed))
        return camp
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid campaign configuration: {exc!r}") from None


def _check_input(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise MissingFileError(f"input file not found: {p}")
    return p


def _header(config: dict) -> str:
    return "# config " + json.dumps(config, sort_keys=True) + "\n"


def _fmt_rows(columns) -> str:
    arr = np.column_stack(columns)
    return "\n".join(" ".join(f"{v:.10e}" for v in row) for row in arr) + "\n"


# ---------------------------------------------------------------- commands


def case_seed(seed: int, index: int) -> int:
    """Independent, reproducible seed for the ``index``-th case of a campaign."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def run_simulate(camp: CampaignConfig, out_dir: Path) -> list[Path]:
    """One record per case plus the ground-truth ModeSet at the sensors."""
    out_dir.mkdir(parents=True, exist_ok=True)
    truth = default_truth()
    snapshot = {"campaign": camp.to_dict(), "sensors": list(DEFAULT_SENSOR_POSITIONS)}
    written = []
    for i, desc in enumerate(camp.cases):
        case = case_from_descriptor(desc)
        pert = camp.shape_perturbation.get(desc.label)
        rec = simulate(truth, case, DEFAULT_SENSOR_POSITIONS, camp.sample_rate,
                       desc.duration, camp.noise_rms, seed=case_seed(camp.seed, i),
                       shape_perturbation=pert)
        rec = replace(rec, config={**snapshot, "case": desc.label})
        path = out_dir / f"case_{desc.label}.txt"
        save_record(rec, path)
        logger.info("wrote %s", path)
        written.append(path)
    shapes = truth.shapes_at(DEFAULT_SENSOR_POSITIONS)
    n_ref = 3
    gt = ModeSet(tuple(
        Mode(float(truth.frequencies[j]), float(truth.damping[j]), shapes[:, j] / np.abs(shapes[:, j]).max())
        for j in range(n_ref)
    ))
    path = out_dir / "ground_truth_modes.json"
    save_modeset(gt, path, snapshot)
    written.append(path)
    return written


def run_spectra(record_path: Path, cfg: PipelineConfig, out_dir: Path) -> list[Path]:
    rec = load_record(record_path)
    psd = welch_psd(rec, cfg.segment_length, cfg.overlap)
    est = anpsd(psd)
    peaks = peak_screen(est, cfg.peak_band, cfg.min_prominence)
    snap = {"pipeline": cfg.to_dict(), "record": record_path.name, "case": rec.case_label}
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = record_path.stem
    psd_path = out_dir / f"{stem}_psd.txt"
    psd_path.write_text(
        _header(snap) + "# frequency_hz " + " ".join(psd.channel_ids) + "\n"
        + _fmt_rows([psd.frequencies, *psd.values])
    )
    an_path = out_dir / f"{stem}_anpsd.txt"
    an_path.write_text(
        _header(snap) + "# peaks_hz " + " ".join(f"{p:.6f}" for p in peaks) + "\n"
        + "# frequency_hz anpsd\n" + _fmt_rows([est.frequencies, est.values])
    )
    return [psd_path, an_path]


def run_identify(record_path: Path, cfg: PipelineConfig, out_dir: Path):
    rec = load_record(record_path)
    snap = {"pipeline": cfg.to_dict(), "record": record_path.name, "case": rec.case_label}
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = record_path.stem
    try:
        result = identify(rec, cfg)
    except SweepError as exc:
        diag = "; ".join(f"k={k}: {v}" for k, v in sorted(exc.diagnostics.items()))
        raise NoModesError(f"{record_path.name}: {exc} ({diag})") from None
    corr = result.correlations
    corr_path = out_dir / f"{stem}_correlations.txt"
    corr_path.write_text(
        _header(snap) + f"# reference {corr.reference_channel}\n"
        + "# lag_s " + " ".join(corr.channel_ids) + "\n"
        + _fmt_rows([corr.lags, *corr.values])
    )
    diag_path = out_dir / f"{stem}_diagram.txt"
    diag_path.write_text(_header(snap) + result.diagram.to_text())
    modes_path = out_dir / f"{stem}_modes.json"
    save_modeset(result.modes, modes_path, snap)
    if len(result.modes) == 0:
        raise NoModesError(f"{record_path.name}: no stable cluster reached min_cluster_size")
    return [corr_path, diag_path, modes_path], result.modes


def run_compare(path_a: Path, path_b: Path, out_dir: Path) -> Path:
    a = load_modeset(path_a)
    b = load_modeset(path_b)
    if len(a) == 0 or len(b) == 0:
        raise NoModesError("comparison needs two non-empty ModeSets")
    report = replace(compare_runs(a, b), config={"reference": path_a.name, "case": path_b.name})
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"compare_{path_a.stem}_vs_{path_b.stem}.txt"
    path.write_text(report.to_text())
    return path


# ------------------------------------------------------------------- main


def _cmd_simulate(args):
    camp = _campaign_config(_read_config(args.config), args)
    for p in run_simulate(camp, Path(args.out_dir)):
        print(p)


def _cmd_spectra(args):
    cfg = _pipeline_config(_read_config(args.config), args)
    for rec in args.records:
        for p in run_spectra(_check_input(rec), cfg, Path(args.out_dir)):
            print(p)


def _cmd_identify(args):
    cfg = _pipeline_config(_read_config(args.config), args)
    paths, modes = run_identify(_check_input(args.record), cfg, Path(args.out_dir))
    for p in paths:
        print(p)
    for m in modes:
        print(f"  {m.frequency_hz:8.3f} Hz  zeta {m.damping_ratio:.4f}  ({m.cluster_size} poles)")


def _cmd_compare(args):
    path = run_compare(_check_input(args.reference_modes), _check_input(args.case_modes),
                       Path(args.out_dir))
    print(path)
    print(path.read_text(), end="")


def _cmd_campaign(args):
    raw = _read_config(args.config)
    camp = _campaign_config(raw, args)
    cfg = _pipeline_config(raw, args)
    labels = [c.label for c in camp.cases]
    id_cases = raw.get("identify_cases", ["i", "vii"])
    baseline = raw.get("baseline_case", id_cases[0] if id_cases else None)
    if not set(id_cases) <= set(labels) or (baseline is not None and baseline not in id_cases):
        raise ConfigError(f"identify_cases {id_cases} / baseline_case {baseline!r} "
                          f"must name cases in {labels}")
    out = Path(args.out_dir)
    run_simulate(camp, out / "records")
    for label in labels:
        run_spectra(out / "records" / f"case_{label}.txt", cfg, out / "spectra")
    mode_files = {}
    for label in id_cases:
        _, _ = run_identify(out / "records" / f"case_{label}.txt", cfg, out / "modes")
        mode_files[label] = out / "modes" / f"case_{label}_modes.json"
    for label in id_cases:
        if label != baseline:
            run_compare(mode_files[baseline], mode_files[label], out / "reports")
    print(out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pvtmodal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, pipeline=True):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out-dir", default=".", help="output directory")
        if pipeline:
            p.add_argument("--band", help="frequency screen lo:hi in Hz")
            p.add_argument("--orders", help="order grid k_min:k_step:k_max")
            p.add_argument("--reference", help="reference sensor id")

    p = sub.add_parser("simulate", help="simulate every case of a campaign")
    common(p, pipeline=False)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("spectra", help="Welch PSD and ANPSD of record files")
    common(p)
    p.add_argument("records", nargs="+")
    p.set_defaults(func=_cmd_spectra)

    p = sub.add_parser("identify", help="identify modes from one record file")
    common(p)
    p.add_argument("record")
    p.set_defaults(func=_cmd_identify)

    p = sub.add_parser("compare", help="pair two ModeSet files and report differences")
    common(p, pipeline=False)
    p.add_argument("reference_modes")
    p.add_argument("case_modes")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("campaign", help="simulate, analyse and compare a whole campaign")
    common(p)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_campaign)
    return parser


def _module_of(exc: BaseException) -> str:
    mods = [f.f_globals.get("__name__", "") for f, _ in traceback.walk_tb(exc.__traceback__)]
    mods = [m for m in mods if m.startswith("pvtmodal") and m != __name__]
    return mods[-1] if mods else __name__


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"pvtmodal {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingFileError as exc:
        print(f"pvtmodal {args.command}: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except NoModesError as exc:
        print(f"pvtmodal {args.command}: no modes found: {exc}", file=sys.stderr)
        return EXIT_NO_MODES
    except (ValueError, RuntimeError, KeyError, OSError, np.linalg.LinAlgError) as exc:
        print(f"pvtmodal {args.command}: error in {_module_of(exc)}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
