"""Shared data model: signal segments, QRS annotations, references and config."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ConfigError, PipelineError

# Physiological R-R bounds (seconds); intervals outside flag the annotation set.
RR_INTERVAL_MIN_S = 0.2
RR_INTERVAL_MAX_S = 3.0
REF_HR_RANGE_BPM = (20.0, 250.0)
REF_RR_RANGE_BRPM = (4.0, 60.0)
SEGMENT_SECONDS = 60.0


def _frozen_array(values: Iterable[float]) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise PipelineError("invalid_input", "expected a 1-D sequence")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SignalSegment:
    """Uniformly sampled scalar series.

    Finiteness of ``samples`` is checked by :func:`validate_record`, not here,
    so corrupt records can still be represented and reported.
    """

    samples: np.ndarray
    sample_rate_hz: float
    start_time_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen_array(self.samples))
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        object.__setattr__(self, "start_time_s", float(self.start_time_s))
        if self.samples.size == 0:
            raise PipelineError("invalid_input", "signal segment is empty")
        if not self.sample_rate_hz > 0:
            raise PipelineError("invalid_input", "sample_rate_hz must be positive")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def times_s(self) -> np.ndarray:
        return self.start_time_s + np.arange(self.samples.size) / self.sample_rate_hz

    def with_samples(self, samples: Iterable[float]) -> "SignalSegment":
        """Same time base, new values."""
        return SignalSegment(samples, self.sample_rate_hz, self.start_time_s)


@dataclass(frozen=True, eq=False)
class QrsAnnotations:
    """QRS complex timepoints in seconds, on the same clock as the PPG."""

    timepoints_s: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "timepoints_s", _frozen_array(self.timepoints_s))

    def __len__(self) -> int:
        return self.timepoints_s.size

    @property
    def intervals_s(self) -> np.ndarray:
        return np.diff(self.timepoints_s)

    def problems(self) -> list[str]:
        """Violation codes for this annotation set (empty when valid)."""
        out = []
        t = self.timepoints_s
        if t.size < 2:
            out.append("qrs_too_few")
        if not np.all(np.isfinite(t)):
            out.append("qrs_nonfinite")
            return out
        d = np.diff(t)
        if np.any(d <= 0):
            out.append("qrs_not_increasing")
        elif np.any((d <= RR_INTERVAL_MIN_S) | (d >= RR_INTERVAL_MAX_S)):
            out.append("qrs_interval_out_of_bounds")
        return out

    @property
    def valid(self) -> bool:
        return not self.problems()


@dataclass(frozen=True)
class VitalReference:
    heart_rate_bpm: float
    respiration_rate_brpm: float

    def problems(self) -> list[str]:
        out = []
        lo, hi = REF_HR_RANGE_BPM
        if not (lo <= self.heart_rate_bpm <= hi):
            out.append("ref_hr_out_of_range")
        lo, hi = REF_RR_RANGE_BRPM
        if not (lo <= self.respiration_rate_brpm <= hi):
            out.append("ref_rr_out_of_range")
        return out


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable parameters; defaults target 60 s segments at 25 Hz.

    ``drop_last_window`` trims the trajectory matrix by one row (220
    instead of 221 windows for 1500 samples, n=400, t=5).
    ``peak_edge_guard_s`` ignores peaks this close to either segment end,
    where the band-pass start-up transient distorts pulse height.
    ``peak_subsample`` places peak times and heights at the parabolic vertex.
    ``min_pulse_ratio`` is the in-band to out-of-band spectral density ratio
    a raw segment needs before it is processed at all; 0 disables the check.
    """

    window_len_n: int = 400
    stride_t: int = 5
    num_components_p: int = 30
    passband_margin_hz: float = 0.15
    passband_floor_hz: float = 0.5
    passband_ceil_hz: float = 4.0
    gaussian_sigma_samples: float = 2.0
    resample_rate_hz: float = 4.0
    rr_band_brpm: tuple[float, float] = (10.0, 50.0)
    filter_order: int = 5
    peak_distance_factor: float = 0.8
    peak_prominence_factor: float = 0.25
    peak_edge_guard_s: float = 1.5
    peak_subsample: bool = True
    interpolation: str = "linear"
    fft_pad_factor: int = 16
    drop_last_window: bool = False
    segment_seconds: float = SEGMENT_SECONDS
    min_pulse_ratio: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "rr_band_brpm", tuple(float(v) for v in self.rr_band_brpm))
        self.validate()

    def validate(self) -> None:
        for name in ("window_len_n", "stride_t", "num_components_p", "filter_order", "fft_pad_factor"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        for name in ("passband_floor_hz", "passband_ceil_hz", "gaussian_sigma_samples",
                     "resample_rate_hz", "peak_distance_factor", "segment_seconds"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a positive real, got {value!r}")
        if not (math.isfinite(self.passband_margin_hz) and self.passband_margin_hz >= 0):
            raise ConfigError("passband_margin_hz must be non-negative")
        if not (math.isfinite(self.peak_edge_guard_s) and self.peak_edge_guard_s >= 0):
            raise ConfigError("peak_edge_guard_s must be non-negative")
        if not (math.isfinite(self.min_pulse_ratio) and self.min_pulse_ratio >= 0):
            raise ConfigError("min_pulse_ratio must be non-negative")
        if not self.peak_prominence_factor >= 0:
            raise ConfigError("peak_prominence_factor must be non-negative")
        if self.passband_floor_hz >= self.passband_ceil_hz:
            raise ConfigError("passband_floor_hz must be below passband_ceil_hz")
        if len(self.rr_band_brpm) != 2:
            raise ConfigError("rr_band_brpm must be a (low, high) pair")
        lo, hi = self.rr_band_brpm
        if not (0 < lo < hi):
            raise ConfigError(f"rr_band_brpm must satisfy 0 < low < high, got {self.rr_band_brpm}")
        if self.interpolation not in ("linear", "cubic"):
            raise ConfigError(f"interpolation must be 'linear' or 'cubic', got {self.interpolation!r}")

    def window_count(self, signal_len: int) -> int:
        """Number of trajectory rows for a signal of ``signal_len`` samples."""
        m = (signal_len - self.window_len_n) // self.stride_t + 1
        if self.drop_last_window and m > 1:
            m -= 1
        return m

    def check_for_length(self, signal_len: int) -> None:
        """Raise ConfigError unless the PCA settings fit a signal of this length."""
        if self.window_len_n > signal_len:
            raise ConfigError(
                f"window_len_n={self.window_len_n} exceeds segment length {signal_len}")
        m = self.window_count(signal_len)
        if self.num_components_p > min(m, self.window_len_n):
            raise ConfigError(
                f"num_components_p={self.num_components_p} exceeds min(m={m}, n={self.window_len_n})")

    def replace(self, **changes: Any) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["rr_band_brpm"] = list(self.rr_band_brpm)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True, eq=False)
class SegmentRecord:
    ppg: SignalSegment
    qrs: QrsAnnotations
    reference: VitalReference
    segment_id: str


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str = ""


def validate_record(record: SegmentRecord, segment_seconds: float = SEGMENT_SECONDS) -> list[Violation]:
    """Return every invariant breach in ``record``; an empty list means processable."""
    out: list[Violation] = []
    ppg = record.ppg
    if not np.all(np.isfinite(ppg.samples)):
        out.append(Violation("nonfinite_samples", "PPG contains NaN or infinite values"))
    period = 1.0 / ppg.sample_rate_hz
    if abs(ppg.duration_s - segment_seconds) > period * (1 + 1e-9):
        out.append(Violation(
            "segment_duration_mismatch",
            f"duration {ppg.duration_s:g} s, expected {segment_seconds:g} s"))
    for code in record.qrs.problems():
        out.append(Violation(code))
    t = record.qrs.timepoints_s
    if t.size and np.all(np.isfinite(t)):
        end = ppg.start_time_s + ppg.duration_s
        if t.min() < ppg.start_time_s or t.max() > end:
            out.append(Violation("qrs_out_of_segment", "QRS timepoints outside the PPG span"))
    for code in record.reference.problems():
        out.append(Violation(code))
    return out


def segment_stream(samples: Sequence[float], sample_rate_hz: float, segment_seconds: float,
                   start_time_s: float = 0.0) -> list[SignalSegment]:
    """Cut a long recording into consecutive non-overlapping segments.

    A trailing remainder shorter than one segment is dropped.
    """
    if not segment_seconds > 0:
        raise ConfigError("segment_seconds must be positive")
    if not sample_rate_hz > 0:
        raise ConfigError("sample_rate_hz must be positive")
    x = np.asarray(samples, dtype=float)
    size = int(round(segment_seconds * sample_rate_hz))
    if size < 1:
        raise ConfigError("segment shorter than one sample")
    return [
        SignalSegment(x[k * size:(k + 1) * size], sample_rate_hz,
                      start_time_s + k * size / sample_rate_hz)
        for k in range(x.size // size)
    ]
