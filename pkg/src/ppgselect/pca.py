"""Sliding-window PCA refinement of the band-passed PPG.

The filtered segment is cut into overlapping windows (the trajectory
matrix), projected onto its leading singular vectors, folded back to one
dimension by averaging overlaps, and finally smoothed with a Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PipelineConfig, SignalSegment
from .errors import PipelineError


@dataclass(frozen=True, eq=False)
class TrajectoryMatrix:
    data: np.ndarray  # (rows_m, cols_n); row i is source[i*stride : i*stride + n]
    stride_t: int
    source_len: int

    @property
    def rows_m(self) -> int:
        return self.data.shape[0]

    @property
    def cols_n(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True, eq=False)
class PcaReconstruction:
    matrix: np.ndarray
    components_used_p: int
    singular_values: np.ndarray

    def relative_error_bound(self) -> float:
        """Relative Frobenius error implied by the discarded singular values."""
        s2 = self.singular_values ** 2
        total = s2.sum()
        return float(np.sqrt(s2[self.components_used_p:].sum() / total)) if total > 0 else 0.0


def embed(signal, window_len_n: int, stride_t: int, max_rows: int | None = None) -> TrajectoryMatrix:
    """Stack windows of length ``window_len_n`` taken every ``stride_t`` samples.

    ``max_rows`` optionally caps the row count (used to drop the last window).
    """
    x = signal.samples if isinstance(signal, SignalSegment) else np.asarray(signal, dtype=float)
    if stride_t < 1 or window_len_n < 1:
        raise PipelineError("invalid_input", "window length and stride must be positive")
    if window_len_n > x.size:
        raise PipelineError("window_too_long", f"window {window_len_n} > signal length {x.size}")
    m = (x.size - window_len_n) // stride_t + 1
    if max_rows is not None:
        m = max(1, min(m, max_rows))
    windows = np.lib.stride_tricks.sliding_window_view(x, window_len_n)[::stride_t][:m]
    return TrajectoryMatrix(np.array(windows), stride_t, x.size)


def svd_reconstruct(traj: TrajectoryMatrix, p: int) -> PcaReconstruction:
    """Rank-``p`` reconstruction from the leading singular triplets."""
    m, n = traj.shape
    if not 1 <= p <= min(m, n):
        raise PipelineError("invalid_component_count", f"p={p} outside [1, {min(m, n)}]")
    u, s, vt = np.linalg.svd(traj.data, full_matrices=False)
    y = (u[:, :p] * s[:p]) @ vt[:p]
    return PcaReconstruction(y, p, s)


def overlap_average(recon: PcaReconstruction | np.ndarray, traj_meta: TrajectoryMatrix) -> np.ndarray:
    """Fold a window matrix back to a series of length ``traj_meta.source_len``.

    Each sample is the mean of every matrix entry mapping onto it; samples no
    window covers take the value of the nearest covered sample.
    """
    y = recon.matrix if isinstance(recon, PcaReconstruction) else np.asarray(recon, dtype=float)
    if y.shape != traj_meta.shape:
        raise PipelineError("dimension_mismatch", f"matrix {y.shape} vs trajectory {traj_meta.shape}")
    m, n = y.shape
    t = traj_meta.stride_t
    total = np.zeros(traj_meta.source_len)
    count = np.zeros(traj_meta.source_len)
    for i in range(m):
        total[i * t:i * t + n] += y[i]
        count[i * t:i * t + n] += 1
    covered = np.flatnonzero(count)
    out = np.empty_like(total)
    out[covered] = total[covered] / count[covered]
    gaps = np.flatnonzero(count == 0)
    if gaps.size:
        # gaps are the tail, or interior holes when stride exceeds window length;
        # take the nearest covered sample, the earlier one on a tie
        right = np.clip(np.searchsorted(covered, gaps), 0, covered.size - 1)
        left = np.clip(right - 1, 0, covered.size - 1)
        use_left = np.abs(gaps - covered[left]) <= np.abs(covered[right] - gaps)
        out[gaps] = out[np.where(use_left, covered[left], covered[right])]
    return out


def gaussian_kernel(sigma_samples: float, truncate: float = 4.0) -> np.ndarray:
    radius = int(truncate * sigma_samples + 0.5)
    x = np.arange(-radius, radius + 1)
    w = np.exp(-0.5 * (x / sigma_samples) ** 2)
    return w / w.sum()


def gaussian_smooth(signal, sigma_samples: float) -> np.ndarray:
    """Convolve with a normalized Gaussian truncated at 4 sigma; edges reflected."""
    if not sigma_samples > 0:
        raise PipelineError("invalid_input", "sigma must be positive")
    x = np.asarray(signal, dtype=float)
    w = gaussian_kernel(sigma_samples)
    r = w.size // 2
    if r == 0:
        return x.copy()
    return np.convolve(np.pad(x, r, mode="symmetric"), w, mode="valid")


def refine(signal: SignalSegment, config: PipelineConfig) -> SignalSegment:
    """Produce the pseudo clean PPG from a band-passed segment."""
    config.check_for_length(len(signal))
    traj = embed(signal, config.window_len_n, config.stride_t,
                 max_rows=config.window_count(len(signal)))
    recon = svd_reconstruct(traj, config.num_components_p)
    folded = overlap_average(recon, traj)
    return signal.with_samples(gaussian_smooth(folded, config.gaussian_sigma_samples))
