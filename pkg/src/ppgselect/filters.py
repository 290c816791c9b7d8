"""Heart-rate-steered Butterworth band-pass and zero-phase filtering.

Each band-pass is a cascade of a low-pass and a high-pass Butterworth
section of the configured order (5 by default). Designs go through the
analog prototype and the bilinear transform with frequency pre-warping and
are kept as second-order sections; narrow bands at 25 Hz make the expanded
5th-order polynomials badly conditioned, so those are only a derived view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .core import PipelineConfig, QrsAnnotations, SegmentRecord, SignalSegment, validate_record
from .errors import PipelineError

DEFAULT_ORDER = 5


@dataclass(frozen=True)
class PassBand:
    low_hz: float
    high_hz: float

    def check(self, sample_rate_hz: float) -> None:
        if not (0 < self.low_hz < self.high_hz < sample_rate_hz / 2):
            raise PipelineError(
                "degenerate_passband",
                f"need 0 < {self.low_hz:g} < {self.high_hz:g} < {sample_rate_hz / 2:g} Hz")

    @property
    def center_hz(self) -> float:
        return 0.5 * (self.low_hz + self.high_hz)


@dataclass(frozen=True, eq=False)
class IirFilter:
    """Digital IIR filter stored as second-order sections (rows b0 b1 b2 1 a1 a2)."""

    sos: np.ndarray
    order: int
    kind: str
    cutoff_hz: float
    sample_rate_hz: float

    def __post_init__(self):
        sos = np.array(self.sos, dtype=float)
        sos.setflags(write=False)
        object.__setattr__(self, "sos", sos)
        mags = np.abs(self.poles())
        if mags.size and not np.all(mags < 1.0):
            raise PipelineError("unstable_filter", f"pole magnitude {mags.max():.12g} >= 1")

    @property
    def numerator_coeffs(self) -> np.ndarray:
        b = np.ones(1)
        for row in self.sos:
            b = np.convolve(b, row[:3])
        return np.trim_zeros(b, "b")

    @property
    def denominator_coeffs(self) -> np.ndarray:
        a = np.ones(1)
        for row in self.sos:
            a = np.convolve(a, row[3:])
        return np.trim_zeros(a, "b")

    def poles(self) -> np.ndarray:
        roots = [np.roots(np.trim_zeros(row[3:], "b")) for row in self.sos]
        return np.concatenate(roots) if roots else np.array([])

    def response(self, freqs_hz) -> np.ndarray:
        """Complex frequency response evaluated on the unit circle."""
        f = np.asarray(freqs_hz, dtype=float)
        zinv = np.exp(-2j * np.pi * f / self.sample_rate_hz)
        h = np.ones_like(zinv)
        for b0, b1, b2, _, a1, a2 in self.sos:
            h = h * (b0 + b1 * zinv + b2 * zinv**2) / (1 + a1 * zinv + a2 * zinv**2)
        return h

    def magnitude(self, freqs_hz) -> np.ndarray:
        return np.abs(self.response(freqs_hz))


def instantaneous_heart_rate(qrs: QrsAnnotations) -> tuple[np.ndarray, np.ndarray]:
    """Instantaneous heart rate from R-R intervals.

    Returns
    -------
    times_s, ihr_bpm : ndarray
        Interval midpoints and ``60 / interval`` for each consecutive pair.
    """
    t = qrs.timepoints_s
    if t.size < 2:
        raise PipelineError("insufficient_annotations", "need at least 2 QRS timepoints")
    rr = np.diff(t)
    return 0.5 * (t[1:] + t[:-1]), 60.0 / rr


def passband_from_ihr(ihr_bpm, config: PipelineConfig) -> PassBand:
    ihr = np.asarray(ihr_bpm, dtype=float)
    if ihr.size == 0 or not np.all(ihr > 0):
        raise PipelineError("invalid_input", "instantaneous heart rate must be non-empty and positive")
    low = max(config.passband_floor_hz, ihr.min() / 60.0 - config.passband_margin_hz)
    high = min(config.passband_ceil_hz, ihr.max() / 60.0 + config.passband_margin_hz)
    if low >= high:
        raise PipelineError("degenerate_passband", f"clamped band ({low:g}, {high:g}) Hz is empty")
    return PassBand(low, high)


def _butterworth_sos(cutoff_hz: float, sample_rate_hz: float, order: int, kind: str) -> np.ndarray:
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise PipelineError(
            "invalid_cutoff", f"cutoff {cutoff_hz:g} Hz outside (0, {sample_rate_hz / 2:g}) Hz")
    if order < 1:
        raise PipelineError("invalid_cutoff", "order must be positive")
    fs2 = 2.0 * sample_rate_hz
    warped = fs2 * math.tan(math.pi * cutoff_hz / sample_rate_hz)
    k = np.arange(1, order + 1)
    proto = np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))
    analog = warped * proto if kind == "lowpass" else warped / proto
    z = (fs2 + analog) / (fs2 - analog)
    zero = -1.0 if kind == "lowpass" else 1.0
    # unit gain at DC (low-pass) or Nyquist (high-pass), per section
    ref = 1.0 if kind == "lowpass" else -1.0

    sections = []
    upper = z[z.imag > 1e-12]
    for p in sorted(upper, key=lambda c: abs(c)):
        a = np.array([1.0, -2.0 * p.real, abs(p) ** 2])
        b = np.array([1.0, -2.0 * zero, zero * zero])
        g = np.polyval(a[::-1], ref) / np.polyval(b[::-1], ref)
        sections.append(np.concatenate([g * b, a]))
    reals = z[np.abs(z.imag) <= 1e-12].real
    for p in reals:
        a = np.array([1.0, -p, 0.0])
        b = np.array([1.0, -zero, 0.0])
        g = (1.0 - p * ref) / (1.0 - zero * ref)
        sections.append(np.concatenate([g * b, a]))
    return np.array(sections)


def design_butterworth_lowpass(cutoff_hz: float, sample_rate_hz: float,
                               order: int = DEFAULT_ORDER) -> IirFilter:
    sos = _butterworth_sos(cutoff_hz, sample_rate_hz, order, "lowpass")
    return IirFilter(sos, order, "lowpass", float(cutoff_hz), float(sample_rate_hz))


def design_butterworth_highpass(cutoff_hz: float, sample_rate_hz: float,
                                order: int = DEFAULT_ORDER) -> IirFilter:
    sos = _butterworth_sos(cutoff_hz, sample_rate_hz, order, "highpass")
    return IirFilter(sos, order, "highpass", float(cutoff_hz), float(sample_rate_hz))


def _odd_extend(x: np.ndarray, n: int) -> np.ndarray:
    left = 2 * x[0] - x[n:0:-1]
    right = 2 * x[-1] - x[-2:-n - 2:-1]
    return np.concatenate([left, x, right])


def filtfilt_array(filt: IirFilter, x) -> np.ndarray:
    """Forward-backward filtering of a bare array (see :func:`filtfilt`)."""
    x = np.asarray(x, dtype=float)
    padlen = 3 * (filt.order + 1)
    if x.size <= padlen:
        raise PipelineError(
            "segment_too_short", f"{x.size} samples, need more than {padlen} for edge padding")
    ext = _odd_extend(x, padlen)
    sos = np.array(filt.sos)
    zi = sps.sosfilt_zi(sos)
    y, _ = sps.sosfilt(sos, ext, zi=zi * ext[0])
    y = y[::-1]
    y, _ = sps.sosfilt(sos, y, zi=zi * y[0])
    return y[::-1][padlen:-padlen]


def filtfilt(filt: IirFilter, segment: SignalSegment) -> SignalSegment:
    """Zero-phase filtering: run ``filt`` forward, then over the reversed output.

    Edges are odd-reflected by ``3 * (order + 1)`` samples and each pass starts
    from the filter's steady state for the first padded sample, so a constant
    input reaches the high-pass already settled.
    """
    if filt.sample_rate_hz != segment.sample_rate_hz:
        raise PipelineError("invalid_input", "filter and signal sample rates differ")
    return segment.with_samples(filtfilt_array(filt, segment.samples))


def record_passband(record: SegmentRecord, config: PipelineConfig) -> PassBand:
    _, ihr = instantaneous_heart_rate(record.qrs)
    band = passband_from_ihr(ihr, config)
    band.check(record.ppg.sample_rate_hz)
    return band


def apply_bandpass(segment: SignalSegment, band: PassBand,
                   order: int = DEFAULT_ORDER) -> SignalSegment:
    """Low-pass at ``band.high_hz`` then high-pass at ``band.low_hz``, both zero-phase."""
    band.check(segment.sample_rate_hz)
    fs = segment.sample_rate_hz
    lp = design_butterworth_lowpass(band.high_hz, fs, order)
    hp = design_butterworth_highpass(band.low_hz, fs, order)
    return filtfilt(hp, filtfilt(lp, segment))


def bandpass_segment(record: SegmentRecord, config: PipelineConfig) -> SignalSegment:
    violations = validate_record(record, config.segment_seconds)
    if violations:
        codes = ",".join(v.code for v in violations)
        raise PipelineError("invalid_record", codes)
    band = record_passband(record, config)
    return apply_bandpass(record.ppg, band, config.filter_order)
