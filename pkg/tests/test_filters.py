import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal as sps

from ppgselect.core import PipelineConfig, QrsAnnotations, SegmentRecord, SignalSegment, VitalReference
from ppgselect.errors import PipelineError
from ppgselect.filters import (
    IirFilter,
    PassBand,
    apply_bandpass,
    bandpass_segment,
    design_butterworth_highpass,
    design_butterworth_lowpass,
    filtfilt,
    filtfilt_array,
    instantaneous_heart_rate,
    passband_from_ihr,
)

from conftest import sine_record

FS = 25.0
INV_SQRT2 = 1 / np.sqrt(2)


def _direct_form(b, a, x):
    """Textbook difference equation, zero initial state."""
    y = np.zeros(len(x))
    for n in range(len(x)):
        acc = sum(b[k] * x[n - k] for k in range(len(b)) if n - k >= 0)
        acc -= sum(a[k] * y[n - k] for k in range(1, len(a)) if n - k >= 0)
        y[n] = acc / a[0]
    return y


def _lag_of_max_xcorr(x, y):
    c = np.correlate(y - y.mean(), x - x.mean(), mode="full")
    return int(np.argmax(c)) - (len(x) - 1)


class TestInstantaneousHeartRate:
    @pytest.mark.parametrize("times, expected", [
        ([0, 1, 2, 3], [60, 60, 60]),
        ([0, 0.5], [120]),
        ([0, 1, 1.5], [60, 120]),
    ])
    def test_values(self, times, expected):
        mid, ihr = instantaneous_heart_rate(QrsAnnotations(times))
        np.testing.assert_allclose(ihr, expected)
        assert mid.size == len(times) - 1

    def test_midpoints(self):
        mid, _ = instantaneous_heart_rate(QrsAnnotations([0, 1, 1.5]))
        np.testing.assert_allclose(mid, [0.5, 1.25])

    def test_too_few(self):
        with pytest.raises(PipelineError) as info:
            instantaneous_heart_rate(QrsAnnotations([1.0]))
        assert info.value.code == "insufficient_annotations"


class TestPassband:
    def test_constant_60(self):
        band = passband_from_ihr([60] * 10, PipelineConfig())
        assert band.low_hz == pytest.approx(0.85)
        assert band.high_hz == pytest.approx(1.15)

    def test_span(self):
        band = passband_from_ihr([48, 70, 96], PipelineConfig())
        assert (band.low_hz, band.high_hz) == pytest.approx((0.65, 1.75))

    def test_floor_clamp(self):
        band = passband_from_ihr([25] * 5, PipelineConfig())
        assert band.low_hz == 0.5

    def test_ceil_clamp(self):
        band = passband_from_ihr([200, 250], PipelineConfig())
        assert band.high_hz == 4.0

    def test_degenerate(self):
        cfg = PipelineConfig(passband_margin_hz=0.0, passband_floor_hz=1.0)
        with pytest.raises(PipelineError) as info:
            passband_from_ihr([30], cfg)
        assert info.value.code == "degenerate_passband"

    def test_band_check(self):
        with pytest.raises(PipelineError):
            PassBand(1.0, 13.0).check(FS)


class TestDesign:
    def test_lowpass_points(self):
        lp = design_butterworth_lowpass(1.15, FS)
        assert lp.magnitude(0.0) == pytest.approx(1.0, abs=1e-12)
        assert lp.magnitude(1.15) == pytest.approx(INV_SQRT2, abs=1e-6)
        assert lp.magnitude(2.3) <= 0.05

    def test_highpass_points(self):
        hp = design_butterworth_highpass(0.85, FS)
        assert hp.magnitude(0.0) == pytest.approx(0.0, abs=1e-12)
        assert hp.magnitude(0.85) == pytest.approx(INV_SQRT2, abs=1e-6)
        assert hp.magnitude(12.5) == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("kind", ["lowpass", "highpass"])
    @pytest.mark.parametrize("cutoff", [0.5, 0.85, 1.15, 3.0, 8.0])
    def test_matches_scipy(self, kind, cutoff):
        design = design_butterworth_lowpass if kind == "lowpass" else design_butterworth_highpass
        ours = design(cutoff, FS)
        ref = sps.butter(5, cutoff, btype=kind, fs=FS, output="sos")
        f = np.linspace(0, FS / 2, 513)
        _, h_ref = sps.sosfreqz(ref, worN=f, fs=FS)
        np.testing.assert_allclose(ours.magnitude(f), np.abs(h_ref), atol=1e-9)
        ref_poles = sps.sos2zpk(ref)[1]
        for p in ours.poles():
            assert np.min(np.abs(ref_poles - p)) < 1e-9

    def test_expanded_coefficients(self):
        lp = design_butterworth_lowpass(1.15, FS)
        assert lp.denominator_coeffs[0] == 1.0
        assert lp.denominator_coeffs.size == 6
        x = np.random.default_rng(0).standard_normal(120)
        np.testing.assert_allclose(_direct_form(lp.numerator_coeffs, lp.denominator_coeffs, x),
                                   sps.sosfilt(np.array(lp.sos), x), atol=1e-9)

    @pytest.mark.parametrize("cutoff", [0.0, -1.0, 12.5, 20.0])
    def test_invalid_cutoff(self, cutoff):
        with pytest.raises(PipelineError) as info:
            design_butterworth_lowpass(cutoff, FS)
        assert info.value.code == "invalid_cutoff"

    def test_unstable_rejected(self):
        with pytest.raises(PipelineError) as info:
            IirFilter(np.array([[1.0, 0, 0, 1.0, -2.5, 1.2]]), 2, "lowpass", 1.0, FS)
        assert info.value.code == "unstable_filter"

    @settings(max_examples=1000, deadline=None)
    @given(st.floats(0.05, 12.4), st.sampled_from(["lowpass", "highpass"]))
    def test_random_cutoffs_stable(self, cutoff, kind):
        design = design_butterworth_lowpass if kind == "lowpass" else design_butterworth_highpass
        filt = design(cutoff, FS)
        assert np.all(np.abs(filt.poles()) < 1)

    def test_lowpass_monotone_above_cutoff(self):
        lp = design_butterworth_lowpass(1.15, FS)
        mag = lp.magnitude(np.linspace(1.15, 12.5, 400))
        assert np.all(np.diff(mag) <= 1e-12)


class TestFiltfilt:
    def test_matches_scipy_sosfiltfilt(self):
        lp = design_butterworth_lowpass(1.15, FS)
        x = np.random.default_rng(1).standard_normal(1500)
        ref = sps.sosfiltfilt(np.array(lp.sos), x, padtype="odd", padlen=18)
        np.testing.assert_allclose(filtfilt_array(lp, x), ref, atol=1e-10)

    def test_zero_lag_sinusoid(self):
        lp = design_butterworth_lowpass(1.15, FS)
        hp = design_butterworth_highpass(0.85, FS)
        t = np.arange(1500) / FS
        x = np.sin(2 * np.pi * 1.0 * t)
        y = filtfilt_array(hp, filtfilt_array(lp, x))
        assert _lag_of_max_xcorr(x, y) == 0

    def test_reversal_commutes_away_from_edges(self):
        # the two passes start from opposite ends, so edge transients differ slightly
        lp = design_butterworth_lowpass(2.0, FS)
        x = np.random.default_rng(2).standard_normal(1500)
        a, b = filtfilt_array(lp, x[::-1]), filtfilt_array(lp, x)[::-1]
        np.testing.assert_allclose(a[150:-150], b[150:-150], atol=1e-10)
        assert np.max(np.abs(a - b)) < 0.05 * np.std(b)

    def test_constant_bandpass_is_zero(self):
        seg = SignalSegment(np.full(1500, 3.7), FS)
        out = apply_bandpass(seg, PassBand(0.85, 1.15))
        assert np.max(np.abs(out.samples)) < 1e-6

    def test_linearity(self):
        hp = design_butterworth_highpass(0.85, FS)
        rng = np.random.default_rng(3)
        x, y = rng.standard_normal((2, 800))
        lhs = filtfilt_array(hp, 2.5 * x - 0.7 * y)
        rhs = 2.5 * filtfilt_array(hp, x) - 0.7 * filtfilt_array(hp, y)
        assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(rhs)

    def test_length_and_time_base(self):
        seg = SignalSegment(np.arange(100.0), FS, start_time_s=5.0)
        out = filtfilt(design_butterworth_lowpass(2.0, FS), seg)
        assert len(out) == 100 and out.start_time_s == 5.0

    def test_too_short(self):
        with pytest.raises(PipelineError) as info:
            filtfilt_array(design_butterworth_lowpass(2.0, FS), np.zeros(18))
        assert info.value.code == "segment_too_short"
        filtfilt_array(design_butterworth_lowpass(2.0, FS), np.zeros(19))

    def test_rate_mismatch(self):
        with pytest.raises(PipelineError):
            filtfilt(design_butterworth_lowpass(2.0, FS), SignalSegment(np.zeros(100), 50.0))


class TestBandpassSegment:
    def test_out_of_band_energy(self):
        t = np.arange(1500) / FS
        pulses = np.exp(-0.5 * ((t[:, None] - (np.arange(60) + 0.5)[None, :]) / 0.08) ** 2).sum(1)
        x = pulses + 1.5 * np.sin(2 * np.pi * 0.2 * t) + 0.5 * np.sin(2 * np.pi * 6.0 * t)
        rec = SegmentRecord(SignalSegment(x, FS), QrsAnnotations(np.arange(60) + 0.5),
                            VitalReference(60, 15), "pulse")
        y = bandpass_segment(rec, PipelineConfig()).samples
        spec = np.abs(np.fft.rfft(y)) ** 2
        f = np.fft.rfftfreq(y.size, 1 / FS)
        outside = spec[(f < 0.85) | (f > 1.15)].sum()
        assert outside <= 0.02 * spec.sum()

    def test_in_band_sinusoid_correlation(self):
        rec = sine_record(1.0)
        y = bandpass_segment(rec, PipelineConfig()).samples
        assert np.corrcoef(rec.ppg.samples, y)[0, 1] >= 0.99
        assert _lag_of_max_xcorr(rec.ppg.samples, y) == 0

    def test_invalid_record(self):
        rec = sine_record(1.0)
        bad = SegmentRecord(rec.ppg, QrsAnnotations([3.0, 2.0, 1.0]), rec.reference, "bad")
        with pytest.raises(PipelineError) as info:
            bandpass_segment(bad, PipelineConfig())
        assert info.value.code == "invalid_record"
