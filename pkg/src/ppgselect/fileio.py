"""Record, report and plot-data file formats.

Records are line-delimited JSON, one segment per line::

    {"segment_id": "s1", "sample_rate_hz": 25, "start_time_s": 0.0,
     "ppg": [...], "qrs_times_s": [...], "ref_hr_bpm": 72.0, "ref_rr_brpm": 15.0}

Unknown keys are ignored. Reports are a single JSON document with the
per-segment assessments (sorted by id) and the cohort summary.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator

from .core import QrsAnnotations, SegmentRecord, SignalSegment, VitalReference
from .errors import ParseError
from .quality import CohortReport, QualityGrade, SegmentAssessment

REPORT_FORMAT = "ppgselect-report/1"
RECORD_KEYS = ("segment_id", "sample_rate_hz", "start_time_s", "ppg", "qrs_times_s",
               "ref_hr_bpm", "ref_rr_brpm")


def _number(obj: dict, key: str, line: int) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"key {key!r} must be a number", line, key)
    return float(v)


def _numbers(obj: dict, key: str, line: int) -> list[float]:
    v = obj[key]
    if not isinstance(v, list) or any(isinstance(e, bool) or not isinstance(e, (int, float)) for e in v):
        raise ParseError(f"key {key!r} must be an array of numbers", line, key)
    return [float(e) for e in v]


def _require(obj: Any, keys: Iterable[str], line: int) -> dict:
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object", line)
    for key in keys:
        if key not in obj:
            raise ParseError(f"missing required key {key!r}", line, key)
    return obj


def _json_lines(path: str | os.PathLike) -> Iterator[tuple[int, Any]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                yield lineno, json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None


def record_from_dict(obj: Any, line: int = 0) -> SegmentRecord:
    obj = _require(obj, RECORD_KEYS, line)
    if not isinstance(obj["segment_id"], str):
        raise ParseError("key 'segment_id' must be a string", line, "segment_id")
    ppg = _numbers(obj, "ppg", line)
    rate = _number(obj, "sample_rate_hz", line)
    if not ppg:
        raise ParseError("key 'ppg' must not be empty", line, "ppg")
    if not rate > 0:
        raise ParseError("key 'sample_rate_hz' must be positive", line, "sample_rate_hz")
    return SegmentRecord(
        ppg=SignalSegment(ppg, rate, _number(obj, "start_time_s", line)),
        qrs=QrsAnnotations(_numbers(obj, "qrs_times_s", line)),
        reference=VitalReference(_number(obj, "ref_hr_bpm", line), _number(obj, "ref_rr_brpm", line)),
        segment_id=obj["segment_id"],
    )


def record_to_dict(record: SegmentRecord) -> dict[str, Any]:
    return {
        "segment_id": record.segment_id,
        "sample_rate_hz": record.ppg.sample_rate_hz,
        "start_time_s": record.ppg.start_time_s,
        "ppg": record.ppg.samples.tolist(),
        "qrs_times_s": record.qrs.timepoints_s.tolist(),
        "ref_hr_bpm": record.reference.heart_rate_bpm,
        "ref_rr_brpm": record.reference.respiration_rate_brpm,
    }


def iter_records(path: str | os.PathLike) -> Iterator[SegmentRecord]:
    for lineno, obj in _json_lines(path):
        yield record_from_dict(obj, lineno)


def read_records(path: str | os.PathLike) -> list[SegmentRecord]:
    return list(iter_records(path))


def dumps_line(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def write_jsonl(path: str | os.PathLike, objects: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for obj in objects:
            fh.write(dumps_line(obj))


def write_records(path: str | os.PathLike, records: Iterable[SegmentRecord]) -> None:
    write_jsonl(path, (record_to_dict(r) for r in records))


def read_references(path: str | os.PathLike) -> dict[str, VitalReference]:
    """Reference vitals keyed by segment id.

    Any JSONL file carrying ``segment_id``, ``ref_hr_bpm`` and ``ref_rr_brpm``
    works (record files qualify). Synthetic ground-truth files, which use
    ``heart_rate_bpm`` and ``respiration_rate_brpm``, are accepted too.
    """
    out = {}
    for lineno, obj in _json_lines(path):
        keys = ("ref_hr_bpm", "ref_rr_brpm")
        if isinstance(obj, dict) and "ref_hr_bpm" not in obj and "heart_rate_bpm" in obj:
            keys = ("heart_rate_bpm", "respiration_rate_brpm")
        obj = _require(obj, ("segment_id", *keys), lineno)
        out[str(obj["segment_id"])] = VitalReference(
            _number(obj, keys[0], lineno), _number(obj, keys[1], lineno))
    return out


def _finite_or_none(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite_or_none(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_none(v) for v in value]
    return value


@dataclass(frozen=True)
class Report:
    segments: list[SegmentAssessment]
    cohort: CohortReport
    config: dict[str, Any] | None = None

    def to_dict(self) -> dict[str, Any]:
        return _finite_or_none({
            "format": REPORT_FORMAT,
            "config": self.config,
            "cohort": self.cohort.to_dict(),
            "segments": [s.to_dict() for s in sorted(self.segments, key=lambda s: s.segment_id)],
        })

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Report":
        if d.get("format") != REPORT_FORMAT:
            raise ParseError(f"not a {REPORT_FORMAT} document")
        try:
            return cls(
                segments=[SegmentAssessment.from_dict(s) for s in d["segments"]],
                cohort=CohortReport.from_dict(d["cohort"]),
                config=d.get("config"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed report: {exc}") from None


def dumps_report(report: Report) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(path: str | os.PathLike, report: Report) -> None:
    Path(path).write_text(dumps_report(report), encoding="utf-8")


def read_report(path: str | os.PathLike) -> Report:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg})", exc.lineno) from None
    if not isinstance(data, dict):
        raise ParseError("report must be a JSON object")
    return Report.from_dict(data)


def read_estimates(path: str | os.PathLike) -> list[dict[str, Any]]:
    """Per-segment estimates for regrading.

    Accepts a report document or JSONL lines with ``segment_id``,
    ``est_hr_bpm`` (null when absent) and optional ``est_rr_brpm``,
    ``ref_hr_bpm``, ``ref_rr_brpm`` and ``reason``.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict) and doc.get("format") == REPORT_FORMAT:
        return [_estimate_from_assessment(s) for s in Report.from_dict(doc).segments]
    out = []
    for lineno, obj in _json_lines(path):
        obj = _require(obj, ("segment_id", "est_hr_bpm"), lineno)
        row = {"segment_id": str(obj["segment_id"]), "line": lineno}
        for key in ("est_hr_bpm", "est_rr_brpm", "ref_hr_bpm", "ref_rr_brpm"):
            if obj.get(key) is not None:
                row[key] = _number(obj, key, lineno)
        row["reason"] = obj.get("reason")
        out.append(row)
    return out


def _estimate_from_assessment(a: SegmentAssessment) -> dict[str, Any]:
    row = {
        "segment_id": a.segment_id,
        "ref_hr_bpm": a.reference.heart_rate_bpm,
        "ref_rr_brpm": a.reference.respiration_rate_brpm,
        "reason": a.reason,
        "estimate": a.estimate,
    }
    if a.estimate is not None:
        row["est_hr_bpm"] = a.estimate.heart_rate_bpm
        if a.estimate.rr_fused_brpm is not None:
            row["est_rr_brpm"] = a.estimate.rr_fused_brpm
    return row


def plot_rows(segments: Iterable[SegmentAssessment]) -> tuple[list[tuple], list[tuple]]:
    """(segment_id, ref_hr, est_hr) and (segment_id, mean, est - ref) rows, gradable only."""
    pairs, ba = [], []
    for s in sorted(segments, key=lambda s: s.segment_id):
        if s.grade is QualityGrade.UNGRADABLE or s.estimate is None:
            continue
        ref, est = s.reference.heart_rate_bpm, s.estimate.heart_rate_bpm
        pairs.append((s.segment_id, ref, est))
        ba.append((s.segment_id, 0.5 * (ref + est), est - ref))
    return pairs, ba


def write_plot_data(directory: str | os.PathLike, segments: Iterable[SegmentAssessment]) -> list[Path]:
    """Write ``hr_pairs.csv`` and ``bland_altman.csv`` into ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    pairs, ba = plot_rows(segments)
    files = []
    for name, header, rows in (
        ("hr_pairs.csv", ("segment_id", "ref_hr_bpm", "est_hr_bpm"), pairs),
        ("bland_altman.csv", ("segment_id", "mean_hr_bpm", "diff_hr_bpm"), ba),
    ):
        path = out / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows((sid, repr(float(a)), repr(float(b))) for sid, a, b in rows)
        files.append(path)
    return files


def read_plot_csv(path: str | os.PathLike) -> list[tuple[str, float, float]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        return [(row[0], float(row[1]), float(row[2])) for row in reader]


def ensure_segment_ids_unique(records: Iterable[SegmentRecord]) -> None:
    seen = set()
    for r in records:
        if r.segment_id in seen:
            raise ParseError(f"duplicate segment_id {r.segment_id!r}", key="segment_id")
        seen.add(r.segment_id)
