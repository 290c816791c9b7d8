"""Per-segment grading against chest references and cohort statistics."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .core import VitalReference
from .errors import PipelineError
from .vitals import VitalsEstimate


class QualityGrade(str, enum.Enum):
    LEVEL1_HIGH = "level1_high"
    LEVEL2_HIGH = "level2_high"
    LEVEL3_HIGH = "level3_high"
    LOW_QUALITY = "low_quality"
    UNGRADABLE = "ungradable"

    @property
    def rank(self) -> int:
        return list(QualityGrade).index(self)

    @property
    def is_high_quality(self) -> bool:
        return self in HIGH_QUALITY


HIGH_QUALITY = (QualityGrade.LEVEL1_HIGH, QualityGrade.LEVEL2_HIGH, QualityGrade.LEVEL3_HIGH)


@dataclass(frozen=True)
class GradeThresholds:
    """Upper HR-error bounds (BPM, inclusive) for the three high-quality levels."""

    level1_bpm: float = 1.0
    level2_bpm: float = 3.0
    level3_bpm: float = 5.0
    agreement_bpm: float = 10.0

    def __post_init__(self):
        if not (0 <= self.level1_bpm <= self.level2_bpm <= self.level3_bpm):
            raise ValueError("level boundaries must satisfy 0 <= level1 <= level2 <= level3")
        if not self.agreement_bpm >= 0:
            raise ValueError("agreement bound must be non-negative")

    def grade(self, hr_abs_error: float | None) -> QualityGrade:
        if hr_abs_error is None or not math.isfinite(hr_abs_error):
            return QualityGrade.UNGRADABLE
        if hr_abs_error <= self.level1_bpm:
            return QualityGrade.LEVEL1_HIGH
        if hr_abs_error <= self.level2_bpm:
            return QualityGrade.LEVEL2_HIGH
        if hr_abs_error <= self.level3_bpm:
            return QualityGrade.LEVEL3_HIGH
        return QualityGrade.LOW_QUALITY


DEFAULT_THRESHOLDS = GradeThresholds()


@dataclass(frozen=True)
class SegmentAssessment:
    segment_id: str
    estimate: VitalsEstimate | None
    reference: VitalReference
    hr_abs_error_bpm: float | None
    rr_abs_error_brpm: float | None
    grade: QualityGrade
    reason: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "segment_id": self.segment_id,
            "grade": self.grade.value,
            "reason": self.reason,
            "ref_hr_bpm": self.reference.heart_rate_bpm,
            "ref_rr_brpm": self.reference.respiration_rate_brpm,
            "hr_abs_error_bpm": self.hr_abs_error_bpm,
            "rr_abs_error_brpm": self.rr_abs_error_brpm,
            "estimate": asdict(self.estimate) if self.estimate is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SegmentAssessment":
        est = d.get("estimate")
        return cls(
            segment_id=str(d["segment_id"]),
            estimate=VitalsEstimate(**est) if est is not None else None,
            reference=VitalReference(float(d["ref_hr_bpm"]), float(d["ref_rr_brpm"])),
            hr_abs_error_bpm=d.get("hr_abs_error_bpm"),
            rr_abs_error_brpm=d.get("rr_abs_error_brpm"),
            grade=QualityGrade(d["grade"]),
            reason=d.get("reason"),
        )


def _pair(estimates: Sequence[float], references: Sequence[float], min_len: int = 1):
    x = np.asarray(estimates, dtype=float)
    y = np.asarray(references, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < min_len:
        raise PipelineError(
            "invalid_input", f"need two equal-length sequences of at least {min_len} values")
    return x, y


def mae(estimates: Sequence[float], references: Sequence[float]) -> float:
    """Mean absolute error between estimated and reference rates."""
    x, y = _pair(estimates, references)
    return float(np.mean(np.abs(y - x)))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation coefficient."""
    x, y = _pair(x, y, 2)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise PipelineError("undefined_correlation", "zero variance input")
    dx = x - x.mean()
    dy = y - y.mean()
    r = float(np.dot(dx, dy) / math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy))))
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class BlandAltman:
    bias: float
    loa_low: float
    loa_high: float
    within_percent: float
    sd: float

    def __iter__(self):
        return iter((self.bias, self.loa_low, self.loa_high, self.within_percent))


def bland_altman(x: Sequence[float], y: Sequence[float], agreement: float = 10.0) -> BlandAltman:
    """Bias and 95% limits of agreement of ``x - y``, plus the share within ``agreement``."""
    x, y = _pair(x, y, 2)
    d = x - y
    bias = float(d.mean())
    sd = float(d.std(ddof=1))
    within = 100.0 * np.count_nonzero(np.abs(d) <= agreement) / d.size
    return BlandAltman(bias, bias - 1.96 * sd, bias + 1.96 * sd, float(within), sd)


def grade_segment(segment_id: str, estimate: VitalsEstimate | None, reference: VitalReference,
                  thresholds: GradeThresholds | None = None,
                  reason: str | None = None) -> SegmentAssessment:
    thresholds = thresholds or DEFAULT_THRESHOLDS
    hr_err = rr_err = None
    if estimate is not None:
        hr_err = abs(reference.heart_rate_bpm - estimate.heart_rate_bpm)
        if estimate.rr_fused_brpm is not None:
            rr_err = abs(reference.respiration_rate_brpm - estimate.rr_fused_brpm)
    grade = thresholds.grade(hr_err)
    if grade is QualityGrade.UNGRADABLE and reason is None:
        reason = "no_estimate"
    return SegmentAssessment(segment_id, estimate, reference, hr_err, rr_err, grade,
                             reason if grade is QualityGrade.UNGRADABLE else None)


@dataclass(frozen=True)
class GroupStats:
    count: int
    portion_percent: float
    hr_mae_bpm: float | None
    rr_mae_brpm: float | None


@dataclass(frozen=True)
class CohortReport:
    groups: dict[str, GroupStats]
    high_quality: GroupStats
    n_segments: int
    n_gradable: int
    n_ungradable: int
    hr_mae_bpm: float | None
    rr_mae_brpm: float | None
    pearson_r: float | None
    bland_altman_bias: float | None
    bland_altman_loa: tuple[float, float] | None
    within_agreement_percent: float | None
    agreement_bpm: float = 10.0
    thresholds: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["bland_altman_loa"] = list(self.bland_altman_loa) if self.bland_altman_loa else None
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CohortReport":
        d = dict(d)
        d["groups"] = {k: GroupStats(**v) for k, v in d["groups"].items()}
        d["high_quality"] = GroupStats(**d["high_quality"])
        if d.get("bland_altman_loa") is not None:
            d["bland_altman_loa"] = tuple(d["bland_altman_loa"])
        return cls(**d)


def _mean_or_none(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def _group(members: list[SegmentAssessment], total: int) -> GroupStats:
    return GroupStats(
        count=len(members),
        portion_percent=100.0 * len(members) / total,
        hr_mae_bpm=_mean_or_none([a.hr_abs_error_bpm for a in members if a.hr_abs_error_bpm is not None]),
        rr_mae_brpm=_mean_or_none([a.rr_abs_error_brpm for a in members if a.rr_abs_error_brpm is not None]),
    )


def cohort_report(assessments: Sequence[SegmentAssessment],
                  thresholds: GradeThresholds | None = None) -> CohortReport:
    """Table-style summary per grade plus correlation and agreement statistics.

    Correlation and Bland-Altman use gradable segments only. Assessments are
    reduced in ``segment_id`` order, so input order does not affect the result.
    """
    if not assessments:
        raise PipelineError("invalid_input", "cohort report needs at least one assessment")
    thresholds = thresholds or DEFAULT_THRESHOLDS
    items = sorted(assessments, key=lambda a: a.segment_id)
    total = len(items)
    groups = {g.value: _group([a for a in items if a.grade is g], total) for g in QualityGrade}
    high = _group([a for a in items if a.grade.is_high_quality], total)
    gradable = [a for a in items if a.grade is not QualityGrade.UNGRADABLE]

    est = [a.estimate.heart_rate_bpm for a in gradable]
    ref = [a.reference.heart_rate_bpm for a in gradable]
    r = ba = None
    if len(gradable) >= 2:
        try:
            r = pearson(est, ref)
        except PipelineError:
            r = None
        ba = bland_altman(est, ref, thresholds.agreement_bpm)
    elif len(gradable) == 1:
        d = est[0] - ref[0]
        ba = BlandAltman(d, d, d, 100.0 if abs(d) <= thresholds.agreement_bpm else 0.0, 0.0)
    overall = _group(gradable, total) if gradable else None
    return CohortReport(
        groups=groups,
        high_quality=high,
        n_segments=total,
        n_gradable=len(gradable),
        n_ungradable=total - len(gradable),
        hr_mae_bpm=overall.hr_mae_bpm if overall else None,
        rr_mae_brpm=overall.rr_mae_brpm if overall else None,
        pearson_r=r,
        bland_altman_bias=ba.bias if ba else None,
        bland_altman_loa=(ba.loa_low, ba.loa_high) if ba else None,
        within_agreement_percent=ba.within_percent if ba else None,
        agreement_bpm=thresholds.agreement_bpm,
        thresholds=asdict(thresholds),
    )
