"""Synthetic PPG segments with known heart rate, respiration rate and noise.

Random draws use numpy's PCG64 generator (``numpy.random.default_rng``)
seeded from ``SynthSpec.seed``; output is reproducible for a fixed seed.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .core import QrsAnnotations, SegmentRecord, SignalSegment, VitalReference
from .errors import PipelineError

PULSE_SHAPES = ("gaussian_pulse_train", "sinusoid")


@dataclass(frozen=True)
class NoiseSpec:
    """Additive artifacts, amplitudes relative to a unit-height clean pulse.

    ``white_noise_snr_db``, when set, overrides ``white_noise_sigma`` with the
    sigma giving that SNR against the clean waveform's variance.
    """

    baseline_wander_amp: float = 0.0
    baseline_wander_freq_hz: float = 0.2
    white_noise_sigma: float = 0.0
    white_noise_snr_db: float | None = None
    burst_rate_per_min: float = 0.0
    burst_amp: float = 0.0
    burst_duration_s: float = 0.5
    inband_tone_amp: float = 0.0
    inband_tone_freq_hz: float = 1.0

    def problems(self) -> list[str]:
        out = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name == "white_noise_snr_db":
                if not math.isfinite(v):
                    out.append("white_noise_snr_db must be finite")
            elif not (math.isfinite(v) and v >= 0):
                out.append(f"{f.name} must be non-negative")
        return out


@dataclass(frozen=True)
class SynthSpec:
    """One synthetic segment.

    Beat intervals follow ``T + fm_depth_s * sin(2*pi*rr*t_k + phase)`` with
    ``T = 60 / heart_rate_bpm``; pulse heights follow
    ``1 + am_depth * sin(2*pi*rr*t + phase)``. The first beat sits at
    ``first_beat_s`` (default ``T / 2``), keeping it off the segment edge.
    """

    heart_rate_bpm: float = 60.0
    respiration_rate_brpm: float = 15.0
    duration_s: float = 60.0
    sample_rate_hz: float = 25.0
    am_depth: float = 0.0
    fm_depth_s: float = 0.0
    pulse_shape: str = "gaussian_pulse_train"
    pulse_width_s: float = 0.08
    resp_phase_rad: float = 0.0
    first_beat_s: float | None = None
    start_time_s: float = 0.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    segment_id: str | None = None

    @property
    def beat_period_s(self) -> float:
        return 60.0 / self.heart_rate_bpm

    def problems(self) -> list[str]:
        out = []
        for name in ("heart_rate_bpm", "respiration_rate_brpm", "duration_s",
                     "sample_rate_hz", "pulse_width_s"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                out.append(f"{name} must be positive, got {v!r}")
        if out:
            return out
        if not 0 <= self.am_depth < 1:
            out.append("am_depth must lie in [0, 1)")
        if not 0 <= self.fm_depth_s < 0.5 * self.beat_period_s:
            out.append("fm_depth_s must lie in [0, half the beat period)")
        if self.pulse_shape not in PULSE_SHAPES:
            out.append(f"pulse_shape must be one of {PULSE_SHAPES}")
        if self.heart_rate_bpm / 60.0 >= self.sample_rate_hz / 2:
            out.append("heart rate at or above the Nyquist frequency")
        if self.first_beat_s is not None and not 0 <= self.first_beat_s < self.duration_s:
            out.append("first_beat_s must fall inside the segment")
        out.extend(self.noise.problems())
        return out

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SynthSpec":
        data = dict(data)
        noise = data.pop("noise", None) or {}
        try:
            return cls(noise=NoiseSpec(**noise), **data)
        except TypeError as exc:
            raise PipelineError("spec_error", str(exc)) from None


@dataclass(frozen=True, eq=False)
class GroundTruth:
    segment_id: str
    heart_rate_bpm: float
    respiration_rate_brpm: float
    beat_times_s: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        return {
            "segment_id": self.segment_id,
            "heart_rate_bpm": self.heart_rate_bpm,
            "respiration_rate_brpm": self.respiration_rate_brpm,
            "beat_times_s": [float(v) for v in self.beat_times_s],
        }


def beat_times(spec: SynthSpec) -> np.ndarray:
    """Beat times (relative to segment start) with one extra beat beyond each edge."""
    period = spec.beat_period_s
    w = 2 * math.pi * spec.respiration_rate_brpm / 60.0
    t = spec.first_beat_s if spec.first_beat_s is not None else 0.5 * period
    times = [t - period]
    while t <= spec.duration_s + period:
        times.append(t)
        t = t + period + spec.fm_depth_s * math.sin(w * t + spec.resp_phase_rad)
    return np.array(times)


def _envelope(spec: SynthSpec, t: np.ndarray) -> np.ndarray:
    w = 2 * math.pi * spec.respiration_rate_brpm / 60.0
    return 1.0 + spec.am_depth * np.sin(w * t + spec.resp_phase_rad)


def clean_waveform(spec: SynthSpec, beats: np.ndarray) -> np.ndarray:
    n = int(round(spec.duration_s * spec.sample_rate_hz))
    t = np.arange(n) / spec.sample_rate_hz
    if spec.pulse_shape == "sinusoid":
        phase = np.interp(t, beats, np.arange(beats.size))
        return _envelope(spec, t) * np.cos(2 * math.pi * phase)
    heights = _envelope(spec, beats)
    z = (t[:, None] - beats[None, :]) / spec.pulse_width_s
    return (heights[None, :] * np.exp(-0.5 * z * z)).sum(axis=1)


def add_noise(clean: np.ndarray, spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    noise = spec.noise
    fs = spec.sample_rate_hz
    t = np.arange(clean.size) / fs
    x = clean.copy()
    if noise.baseline_wander_amp:
        x += noise.baseline_wander_amp * np.sin(
            2 * math.pi * noise.baseline_wander_freq_hz * t + rng.uniform(0, 2 * math.pi))
    if noise.inband_tone_amp:
        x += noise.inband_tone_amp * np.sin(
            2 * math.pi * noise.inband_tone_freq_hz * t + rng.uniform(0, 2 * math.pi))
    sigma = noise.white_noise_sigma
    if noise.white_noise_snr_db is not None:
        sigma = float(np.std(clean)) / 10 ** (noise.white_noise_snr_db / 20.0)
    if sigma:
        x += rng.normal(0.0, sigma, clean.size)
    n_bursts = int(round(noise.burst_rate_per_min * spec.duration_s / 60.0))
    if n_bursts and noise.burst_amp:
        width = max(2, int(round(noise.burst_duration_s * fs)))
        window = np.hanning(width)
        for start in rng.integers(0, max(1, clean.size - width), n_bursts):
            seg = slice(start, min(clean.size, start + width))
            k = seg.stop - seg.start
            x[seg] += noise.burst_amp * window[:k] * rng.standard_normal(k)
    return x


def generate(spec: SynthSpec, index: int = 0) -> tuple[SegmentRecord, GroundTruth]:
    """Build one synthetic record and its ground truth.

    The QRS annotations are the exact beat times inside the segment.
    """
    problems = spec.problems()
    if problems:
        raise PipelineError("spec_error", "; ".join(problems))
    rng = np.random.default_rng(spec.seed)
    beats = beat_times(spec)
    x = add_noise(clean_waveform(spec, beats), spec, rng)
    inside = beats[(beats >= 0) & (beats <= (x.size - 1) / spec.sample_rate_hz)]
    hr = 60.0 * (inside.size - 1) / (inside[-1] - inside[0]) if inside.size > 1 else spec.heart_rate_bpm
    segment_id = spec.segment_id or f"synth-{index:05d}"
    qrs_times = spec.start_time_s + inside
    record = SegmentRecord(
        ppg=SignalSegment(x, spec.sample_rate_hz, spec.start_time_s),
        qrs=QrsAnnotations(qrs_times),
        reference=VitalReference(float(hr), float(spec.respiration_rate_brpm)),
        segment_id=segment_id,
    )
    truth = GroundTruth(segment_id, float(hr), float(spec.respiration_rate_brpm), qrs_times)
    return record, truth


def corpus(specs: Iterable[SynthSpec]) -> list[tuple[SegmentRecord, GroundTruth]]:
    out = []
    for i, spec in enumerate(specs):
        try:
            out.append(generate(spec, i))
        except PipelineError as exc:
            raise PipelineError("spec_error", f"spec #{i}: {exc.message}") from None
    return out


def grid_specs(heart_rates: Iterable[float], resp_rates: Iterable[float], *,
               seed: int = 0, **common: Any) -> list[SynthSpec]:
    """Cartesian HR x RR grid; spec ``i`` gets seed ``seed + i``."""
    resp_rates = list(resp_rates)
    specs = []
    for hr in heart_rates:
        for rr in resp_rates:
            specs.append(SynthSpec(heart_rate_bpm=float(hr), respiration_rate_brpm=float(rr),
                                   seed=seed + len(specs), **common))
    return specs
