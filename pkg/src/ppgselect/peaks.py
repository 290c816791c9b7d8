"""Systolic peak detection on the pseudo clean PPG."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SignalSegment
from .errors import PipelineError
from .filters import PassBand

MIN_PEAKS = 3
MAD_SCALE = 1.4826


@dataclass(frozen=True, eq=False)
class PeakSet:
    """Detected peaks.

    ``indices`` are the sample positions. ``times_s`` and ``amplitudes`` are
    either the sample time/value or, when sub-sample refinement is on, the
    vertex of the parabola through the peak sample and its two neighbours.
    """

    indices: np.ndarray
    times_s: np.ndarray
    amplitudes: np.ndarray
    min_distance: int = 1

    def __len__(self) -> int:
        return self.indices.size

    @property
    def intervals_s(self) -> np.ndarray:
        return np.diff(self.times_s)


def sobel_derivative(signal) -> np.ndarray:
    """Central-difference derivative, kernel (-1, 0, +1)/2, reflected edges."""
    x = np.asarray(signal, dtype=float)
    if x.size < 3:
        raise PipelineError("segment_too_short", "derivative needs at least 3 samples")
    padded = np.pad(x, 1, mode="reflect")
    return 0.5 * (padded[2:] - padded[:-2])


def min_peak_distance(sample_rate_hz: float, band_high_hz: float, factor: float = 0.8) -> int:
    return max(1, int(math.floor(factor * sample_rate_hz / band_high_hz)))


def parabolic_vertex(x: np.ndarray, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Offset (samples, within +-0.5) and height of the parabola through idx-1, idx, idx+1."""
    a, b, c = x[idx - 1], x[idx], x[idx + 1]
    curv = a - 2 * b + c
    concave = curv < 0
    off = np.zeros(idx.size)
    off[concave] = 0.5 * (a - c)[concave] / curv[concave]
    off = np.clip(off, -0.5, 0.5)
    return off, b - 0.25 * (a - c) * off


def detect_peaks(signal: SignalSegment, passband: PassBand, *,
                 distance_factor: float = 0.8, prominence_factor: float = 0.25,
                 edge_guard: int = 0, subsample: bool = False) -> PeakSet:
    """Locate systolic peaks.

    Candidates are positive-to-negative zero crossings of the derivative
    (the larger of the two samples straddling the crossing). Candidates
    within ``edge_guard`` samples of either end (and always the end samples
    themselves) are ignored, as are those whose height above the median is
    below ``prominence_factor`` times the MAD-scaled spread. The rest are
    accepted strongest first; a candidate closer than the minimum distance
    to an accepted one is dropped, so on equal heights the earlier wins.
    """
    x = signal.samples
    d = sobel_derivative(x)
    k = np.flatnonzero((d[:-1] > 0) & (d[1:] <= 0))
    cand = np.where(x[k + 1] > x[k], k + 1, k)
    guard = max(1, edge_guard)
    cand = np.unique(cand[(cand >= guard) & (cand <= x.size - 1 - guard)])

    med = np.median(x)
    spread = MAD_SCALE * np.median(np.abs(x - med))
    if spread > 0:
        cand = cand[x[cand] - med >= prominence_factor * spread]
    else:
        cand = cand[:0]

    min_dist = min_peak_distance(signal.sample_rate_hz, passband.high_hz, distance_factor)
    order = cand[np.argsort(-x[cand], kind="stable")]
    taken = np.zeros(x.size, dtype=bool)
    kept = []
    for i in order:
        if not taken[max(0, i - min_dist + 1):i + min_dist].any():
            kept.append(i)
            taken[i] = True
    idx = np.array(sorted(kept), dtype=int)
    if idx.size < MIN_PEAKS:
        raise PipelineError("insufficient_peaks", f"{idx.size} peaks detected, need {MIN_PEAKS}")

    if subsample:
        off, amps = parabolic_vertex(x, idx)
    else:
        off, amps = np.zeros(idx.size), x[idx].copy()
    times = signal.start_time_s + (idx + off) / signal.sample_rate_hz
    return PeakSet(idx, times, amps, min_dist)
