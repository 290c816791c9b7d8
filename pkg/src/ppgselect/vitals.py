"""Heart rate and respiration rate estimation from detected PPG peaks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .core import PipelineConfig, SignalSegment
from .errors import PipelineError
from .filters import PassBand
from .peaks import MIN_PEAKS, PeakSet, detect_peaks

MIN_SPAN_S = 10.0
MIN_SERIES_POINTS = 4
MIN_FM_PEAKS = 5
# spectral peak / in-band median magnitude below this is flagged low-confidence
LOW_CONFIDENCE_RATIO = 2.0
# relative modulation (std / mean of the series) below these is also flagged;
# without noise the spectral floor is numerical residue and the ratio alone says little
MIN_AM_DEPTH = 0.02
MIN_FM_DEPTH = 0.005


@dataclass(frozen=True, eq=False)
class ModulationSeries:
    times_s: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times_s, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise PipelineError("invalid_input", "times and values must be matching 1-D sequences")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise PipelineError("invalid_input", "modulation times must be increasing")
        object.__setattr__(self, "times_s", t)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SpectralPeak:
    rate_brpm: float
    peak_to_median: float

    @property
    def low_confidence(self) -> bool:
        return self.peak_to_median < LOW_CONFIDENCE_RATIO


@dataclass(frozen=True)
class ModulationEstimate:
    """Respiration rate from one modality plus what the confidence flag rests on."""

    rate_brpm: float
    peak_to_median: float
    depth: float
    min_depth: float

    @property
    def low_confidence(self) -> bool:
        return self.peak_to_median < LOW_CONFIDENCE_RATIO or self.depth < self.min_depth


@dataclass(frozen=True)
class VitalsEstimate:
    heart_rate_bpm: float
    rr_am_brpm: float | None = None
    rr_fm_brpm: float | None = None
    rr_fused_brpm: float | None = None
    am_low_confidence: bool | None = None
    fm_low_confidence: bool | None = None
    num_peaks: int | None = None


def fuse_rr(am: float | None, fm: float | None) -> float | None:
    present = [v for v in (am, fm) if v is not None]
    return float(np.mean(present)) if present else None


def heart_rate_from_peaks(peaks: PeakSet) -> float:
    """Average heart rate as 60 over the mean inter-peak interval."""
    if len(peaks) < MIN_PEAKS:
        raise PipelineError("insufficient_peaks", f"{len(peaks)} peaks, need {MIN_PEAKS}")
    return 60.0 / float(np.mean(np.diff(peaks.times_s)))


def resample_to_grid(series: ModulationSeries, rate_hz: float, duration_s: float,
                     kind: str = "linear") -> np.ndarray:
    """Interpolate an irregular series onto ``0, 1/rate, ..., duration`` and remove its mean.

    Grid points outside the observed span hold the nearest observed value.
    """
    t, v = series.times_s, series.values
    if t.size < MIN_SERIES_POINTS or t[-1] - t[0] < MIN_SPAN_S:
        raise PipelineError(
            "insufficient_span",
            f"need >= {MIN_SERIES_POINTS} points over >= {MIN_SPAN_S:g} s, "
            f"got {t.size} over {t[-1] - t[0] if t.size else 0:g} s")
    grid = np.arange(int(round(duration_s * rate_hz)) + 1) / rate_hz
    if kind == "linear":
        out = np.interp(grid, t, v)
    elif kind == "cubic":
        out = CubicSpline(t, v)(np.clip(grid, t[0], t[-1]))
    else:
        raise PipelineError("invalid_input", f"unknown interpolation {kind!r}")
    return out - out.mean()


def spectral_peak(grid_series, rate_hz: float, band_brpm: tuple[float, float],
                  pad_factor: int = 16) -> SpectralPeak:
    x = np.asarray(grid_series, dtype=float)
    if x.size == 0:
        raise PipelineError("invalid_input", "empty series")
    lo, hi = band_brpm
    if not 0 <= lo < hi:
        raise PipelineError("invalid_input", f"invalid band {band_brpm}")
    nfft = 1 << int(np.ceil(np.log2(max(2, pad_factor * x.size))))
    mag = np.abs(np.fft.rfft(x, nfft))
    freqs = np.fft.rfftfreq(nfft, 1.0 / rate_hz)
    in_band = np.flatnonzero((freqs >= lo / 60.0) & (freqs <= hi / 60.0))
    if in_band.size == 0:
        raise PipelineError("band_empty", f"no frequency bin inside {band_brpm} BrPM")
    band_mag = mag[in_band]
    best = int(np.argmax(band_mag))  # first maximum: ties go to the lower frequency
    median = float(np.median(band_mag))
    if median > 0:
        ratio = float(band_mag[best] / median)
    else:  # a flat zero spectrum has no peak at all
        ratio = float("inf") if band_mag[best] > 0 else 0.0
    return SpectralPeak(60.0 * float(freqs[in_band[best]]), ratio)


def spectral_peak_brpm(grid_series, rate_hz: float, band_brpm: tuple[float, float],
                       pad_factor: int = 16) -> float:
    """Rate (per minute) of the strongest spectral component inside ``band_brpm``."""
    return spectral_peak(grid_series, rate_hz, band_brpm, pad_factor).rate_brpm


def modulation_depth(series: ModulationSeries) -> float:
    """Standard deviation of the series values relative to their mean magnitude."""
    level = abs(float(np.mean(series.values)))
    return float(np.std(series.values)) / level if level > 0 else float("inf")


def _modulation_rate(series: ModulationSeries, duration_s: float, config: PipelineConfig,
                     min_depth: float) -> ModulationEstimate:
    grid = resample_to_grid(series, config.resample_rate_hz, duration_s, config.interpolation)
    peak = spectral_peak(grid, config.resample_rate_hz, config.rr_band_brpm, config.fft_pad_factor)
    return ModulationEstimate(peak.rate_brpm, peak.peak_to_median, modulation_depth(series), min_depth)


def am_series(peaks: PeakSet, origin_s: float = 0.0) -> ModulationSeries:
    return ModulationSeries(peaks.times_s - origin_s, peaks.amplitudes)


def fm_series(peaks: PeakSet, origin_s: float = 0.0) -> ModulationSeries:
    t = peaks.times_s - origin_s
    return ModulationSeries(0.5 * (t[1:] + t[:-1]), np.diff(t))


def respiration_am_detail(peaks: PeakSet, duration_s: float, config: PipelineConfig,
                          origin_s: float = 0.0) -> ModulationEstimate:
    if len(peaks) < MIN_SERIES_POINTS:
        raise PipelineError("insufficient_peaks", f"AM needs {MIN_SERIES_POINTS} peaks")
    return _modulation_rate(am_series(peaks, origin_s), duration_s, config, MIN_AM_DEPTH)


def respiration_fm_detail(peaks: PeakSet, duration_s: float, config: PipelineConfig,
                          origin_s: float = 0.0) -> ModulationEstimate:
    if len(peaks) < MIN_FM_PEAKS:
        raise PipelineError("insufficient_peaks", f"FM needs {MIN_FM_PEAKS} peaks")
    return _modulation_rate(fm_series(peaks, origin_s), duration_s, config, MIN_FM_DEPTH)


def respiration_am(peaks: PeakSet, duration_s: float, config: PipelineConfig,
                   origin_s: float = 0.0) -> float:
    """Respiration rate from the peak-amplitude (AM) series."""
    return respiration_am_detail(peaks, duration_s, config, origin_s).rate_brpm


def respiration_fm(peaks: PeakSet, duration_s: float, config: PipelineConfig,
                   origin_s: float = 0.0) -> float:
    """Respiration rate from the tachogram (FM), intervals stamped at their midpoints."""
    return respiration_fm_detail(peaks, duration_s, config, origin_s).rate_brpm


def estimate_vitals(pseudo_clean: SignalSegment, passband: PassBand,
                    config: PipelineConfig) -> VitalsEstimate:
    peaks = detect_peaks(pseudo_clean, passband,
                         distance_factor=config.peak_distance_factor,
                         prominence_factor=config.peak_prominence_factor,
                         edge_guard=int(round(config.peak_edge_guard_s * pseudo_clean.sample_rate_hz)),
                         subsample=config.peak_subsample)
    hr = heart_rate_from_peaks(peaks)
    origin = pseudo_clean.start_time_s
    duration = pseudo_clean.duration_s
    am = fm = None
    try:
        am = respiration_am_detail(peaks, duration, config, origin)
    except PipelineError:
        pass
    try:
        fm = respiration_fm_detail(peaks, duration, config, origin)
    except PipelineError:
        pass
    am_rate = am.rate_brpm if am else None
    fm_rate = fm.rate_brpm if fm else None
    return VitalsEstimate(
        heart_rate_bpm=hr,
        rr_am_brpm=am_rate,
        rr_fm_brpm=fm_rate,
        rr_fused_brpm=fuse_rr(am_rate, fm_rate),
        am_low_confidence=am.low_confidence if am else None,
        fm_low_confidence=fm.low_confidence if fm else None,
        num_peaks=len(peaks),
    )
