"""Command-line interface: ``ppgselect {process,synth,grade,report}``.

Exit status: 0 success, 1 I/O or parse failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from . import fileio
from .core import PipelineConfig
from .errors import ConfigError, ParseError, PipelineError
from .pipeline import process_records, regrade
from .quality import CohortReport, GradeThresholds, QualityGrade, cohort_report
from .synth import NoiseSpec, SynthSpec, corpus, grid_specs

log = logging.getLogger("ppgselect")

EXIT_OK, EXIT_IO, EXIT_CONFIG = 0, 1, 2

GRADE_LABELS = {
    QualityGrade.LEVEL1_HIGH.value: "Level-1 High Quality",
    QualityGrade.LEVEL2_HIGH.value: "Level-2 High Quality",
    QualityGrade.LEVEL3_HIGH.value: "Level-3 High Quality",
    QualityGrade.LOW_QUALITY.value: "Low Quality",
    QualityGrade.UNGRADABLE.value: "Ungradable",
}


class UsageError(Exception):
    """Input problem that maps to exit status 1."""


def _fmt(value: float | None, spec: str = ".2f") -> str:
    return "-" if value is None else format(value, spec)


def format_cohort(cohort: CohortReport) -> str:
    """Plain-text quality table plus correlation/agreement summary."""
    lines = [f"{'Quality group':<22} {'Count':>6} {'HR MAE':>8} {'RR MAE':>8} {'Portion':>9}",
             f"{'':<22} {'':>6} {'(BPM)':>8} {'(BrPM)':>8} {'(%)':>9}"]
    for key, label in GRADE_LABELS.items():
        g = cohort.groups[key]
        lines.append(f"{label:<22} {g.count:>6d} {_fmt(g.hr_mae_bpm):>8} "
                     f"{_fmt(g.rr_mae_brpm):>8} {g.portion_percent:>8.2f}%")
    h = cohort.high_quality
    lines.append(f"{'High quality (L1-L3)':<22} {h.count:>6d} {_fmt(h.hr_mae_bpm):>8} "
                 f"{_fmt(h.rr_mae_brpm):>8} {h.portion_percent:>8.2f}%")
    lines.append("")
    lines.append(f"segments: {cohort.n_segments} (gradable {cohort.n_gradable}, "
                 f"ungradable {cohort.n_ungradable})")
    lines.append(f"HR MAE {_fmt(cohort.hr_mae_bpm)} BPM, RR MAE {_fmt(cohort.rr_mae_brpm)} BrPM")
    lines.append(f"Pearson r {_fmt(cohort.pearson_r, '.4f')}")
    if cohort.bland_altman_loa is not None:
        lo, hi = cohort.bland_altman_loa
        lines.append(f"Bland-Altman bias {cohort.bland_altman_bias:.2f} BPM, "
                     f"limits of agreement [{lo:.2f}, {hi:.2f}] BPM")
    lines.append(f"within {cohort.agreement_bpm:g} BPM: {_fmt(cohort.within_agreement_percent)}%")
    return "\n".join(lines) + "\n"


def _load_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None


def build_config(args: argparse.Namespace) -> tuple[PipelineConfig, GradeThresholds]:
    """Defaults, overridden by ``--config`` file, overridden by flags."""
    values: dict[str, Any] = {}
    grading: dict[str, Any] = {}
    if getattr(args, "config", None):
        data = _load_json(args.config)
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data = dict(data)
        grading = dict(data.pop("grading", None) or {})
        values.update(data)
    flag_map = {"components": "num_components_p", "window": "window_len_n",
                "stride": "stride_t", "margin_hz": "passband_margin_hz"}
    for flag, key in flag_map.items():
        if getattr(args, flag, None) is not None:
            values[key] = getattr(args, flag)
    for flag in ("level1", "level2", "level3"):
        if getattr(args, flag, None) is not None:
            grading[f"{flag}_bpm"] = getattr(args, flag)
    if getattr(args, "agreement_bpm", None) is not None:
        grading["agreement_bpm"] = args.agreement_bpm
    config = PipelineConfig.from_dict(values) if values else PipelineConfig()
    try:
        thresholds = GradeThresholds(**grading)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grading thresholds: {exc}") from None
    return config, thresholds


def cmd_process(args: argparse.Namespace) -> int:
    config, thresholds = build_config(args)
    records = fileio.read_records(args.input)
    if not records:
        raise UsageError(f"{args.input}: no records")
    fileio.ensure_segment_ids_unique(records)
    for rate in sorted({r.ppg.sample_rate_hz for r in records}):
        config.check_for_length(int(round(config.segment_seconds * rate)))
    results = process_records(records, config, thresholds)
    for r in results:
        if r.assessment.reason:
            log.info("%s: ungradable (%s)", r.assessment.segment_id, r.assessment.reason)
    assessments = [r.assessment for r in results]
    report = fileio.Report(assessments, cohort_report(assessments, thresholds), config.to_dict())
    fileio.write_report(args.out, report)
    if args.emit_clean_ppg:
        fileio.write_jsonl(args.emit_clean_ppg, (
            {"segment_id": r.assessment.segment_id,
             "sample_rate_hz": r.pseudo_clean.sample_rate_hz,
             "start_time_s": r.pseudo_clean.start_time_s,
             "passband_hz": [r.passband.low_hz, r.passband.high_hz],
             "ppg": r.pseudo_clean.samples.tolist()}
            for r in results if r.pseudo_clean is not None))
    if args.plot_data:
        fileio.write_plot_data(args.plot_data, assessments)
    sys.stdout.write(format_cohort(report.cohort))
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    """``"45,60,72"`` or an inclusive range ``"45:180:15"``."""
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            count = int((stop - start) / step + 1e-9) + 1
            return [start + i * step for i in range(max(0, count))]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list or start:stop:step, got {text!r}")


def _synth_specs(args: argparse.Namespace) -> list[SynthSpec]:
    if args.spec:
        data = _load_json(args.spec)
        items = data if isinstance(data, list) else [data]
        specs = []
        for i, item in enumerate(items):
            if not isinstance(item, dict):
                raise ConfigError(f"spec #{i} must be a JSON object")
            spec = SynthSpec.from_dict(item)
            if "seed" not in item:
                spec = SynthSpec.from_dict({**spec.to_dict(), "seed": args.seed + i})
            specs.append(spec)
        return specs
    noise = NoiseSpec(
        baseline_wander_amp=args.wander_amp, baseline_wander_freq_hz=args.wander_freq,
        white_noise_sigma=args.noise_sigma, white_noise_snr_db=args.snr_db,
        burst_rate_per_min=args.burst_rate, burst_amp=args.burst_amp,
        inband_tone_amp=args.tone_amp, inband_tone_freq_hz=args.tone_freq,
    )
    return grid_specs(args.hr, args.rr, seed=args.seed, duration_s=args.duration,
                      sample_rate_hz=args.fs, am_depth=args.am_depth, fm_depth_s=args.fm_depth,
                      pulse_shape=args.pulse, noise=noise)


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        pairs = corpus(_synth_specs(args))
    except PipelineError as exc:
        raise ConfigError(exc.message) from None
    out = Path(args.out)
    truth_path = Path(args.truth) if args.truth else out.with_name(out.stem + ".truth.jsonl")
    fileio.write_records(out, (rec for rec, _ in pairs))
    fileio.write_jsonl(truth_path, (t.to_dict() for _, t in pairs))
    print(f"wrote {len(pairs)} records to {out} and ground truth to {truth_path}")
    return EXIT_OK


def cmd_grade(args: argparse.Namespace) -> int:
    _, thresholds = build_config(args)
    rows = fileio.read_estimates(args.estimates)
    if not rows:
        raise UsageError(f"{args.estimates}: no estimates")
    references = fileio.read_references(args.references) if args.references else None
    try:
        assessments = regrade(rows, references, thresholds)
    except PipelineError as exc:
        raise UsageError(f"segment ids do not match: {exc.message}") from None
    report = fileio.Report(assessments, cohort_report(assessments, thresholds))
    fileio.write_report(args.out, report)
    if args.plot_data:
        fileio.write_plot_data(args.plot_data, assessments)
    sys.stdout.write(format_cohort(report.cohort))
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    report = fileio.read_report(args.report)
    text = format_cohort(report.cohort)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.plot_data:
        fileio.write_plot_data(args.plot_data, report.segments)
    return EXIT_OK


def _add_threshold_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("grading")
    g.add_argument("--level1", type=float, help="Level-1 upper HR error bound, BPM (default 1)")
    g.add_argument("--level2", type=float, help="Level-2 upper HR error bound, BPM (default 3)")
    g.add_argument("--level3", type=float, help="Level-3 upper HR error bound, BPM (default 5)")
    g.add_argument("--agreement-bpm", type=float, help="agreement bound for the within-N share (default 10)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppgselect", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("process", help="pseudo clean PPG, vitals and grades for a record file")
    p.add_argument("input", help="record file (JSON lines)")
    p.add_argument("--out", required=True, help="report path (JSON)")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--emit-clean-ppg", metavar="PATH", help="write pseudo clean PPG waveforms (JSON lines)")
    p.add_argument("--plot-data", metavar="DIR", help="write HR pair and Bland-Altman CSVs here")
    p.add_argument("--components", type=int, help="principal components kept (p)")
    p.add_argument("--window", type=int, help="sliding window length in samples (n)")
    p.add_argument("--stride", type=int, help="sliding window stride in samples (t)")
    p.add_argument("--margin-hz", type=float, help="passband margin beyond the heart-rate range")
    _add_threshold_flags(p)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("synth", help="generate a synthetic record corpus with ground truth")
    p.add_argument("--out", required=True, help="record file to write")
    p.add_argument("--truth", help="ground-truth sidecar (default <out>.truth.jsonl)")
    p.add_argument("--spec", help="JSON spec object or list of spec objects (overrides grid flags)")
    p.add_argument("--hr", type=_float_list, default=[60.0], help="heart rates, BPM")
    p.add_argument("--rr", type=_float_list, default=[15.0], help="respiration rates, BrPM")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=60.0)
    p.add_argument("--fs", type=float, default=25.0)
    p.add_argument("--am-depth", type=float, default=0.2)
    p.add_argument("--fm-depth", type=float, default=0.05)
    p.add_argument("--pulse", choices=["gaussian_pulse_train", "sinusoid"], default="gaussian_pulse_train")
    p.add_argument("--wander-amp", type=float, default=0.0)
    p.add_argument("--wander-freq", type=float, default=0.2)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--snr-db", type=float, default=None)
    p.add_argument("--burst-rate", type=float, default=0.0, help="bursts per minute")
    p.add_argument("--burst-amp", type=float, default=0.0)
    p.add_argument("--tone-amp", type=float, default=0.0)
    p.add_argument("--tone-freq", type=float, default=1.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("grade", help="regrade existing estimates against references")
    p.add_argument("estimates", help="report from 'process' or JSON lines of estimates")
    p.add_argument("--references", help="JSON lines with segment_id, ref_hr_bpm, ref_rr_brpm")
    p.add_argument("--out", required=True, help="report path (JSON)")
    p.add_argument("--plot-data", metavar="DIR")
    _add_threshold_flags(p)
    p.set_defaults(func=cmd_grade)

    p = sub.add_parser("report", help="print the quality table of a report, export plot data")
    p.add_argument("report", help="report path (JSON)")
    p.add_argument("--out", help="write the table here instead of stdout")
    p.add_argument("--plot-data", metavar="DIR")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"ppgselect: invalid configuration: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"ppgselect: parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, OSError) as exc:
        print(f"ppgselect: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
