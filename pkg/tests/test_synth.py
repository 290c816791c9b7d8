import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppgselect.core import validate_record
from ppgselect.errors import PipelineError
from ppgselect.synth import (
    NoiseSpec,
    SynthSpec,
    add_noise,
    beat_times,
    clean_waveform,
    corpus,
    generate,
    grid_specs,
)
from ppgselect.vitals import ModulationSeries, resample_to_grid, spectral_peak_brpm


def test_regular_beats():
    rec, truth = generate(SynthSpec(heart_rate_bpm=60, respiration_rate_brpm=15))
    t = rec.qrs.timepoints_s
    assert t.size == 60
    np.testing.assert_allclose(np.diff(t), 1.0, atol=1e-12)
    assert truth.heart_rate_bpm == pytest.approx(60.0)
    assert validate_record(rec) == []


def test_am_envelope_spectrum():
    spec = SynthSpec(heart_rate_bpm=72, respiration_rate_brpm=18, am_depth=0.2)
    beats = beat_times(spec)
    x = clean_waveform(spec, beats)
    idx = np.round(beats[(beats > 0.5) & (beats < 59.5)] * spec.sample_rate_hz).astype(int)
    series = ModulationSeries(idx / spec.sample_rate_hz, x[idx])
    rate = spectral_peak_brpm(resample_to_grid(series, 4.0, 60.0), 4.0, (10, 50))
    assert rate == pytest.approx(18.0, abs=0.2)


def test_deterministic():
    spec = SynthSpec(noise=NoiseSpec(white_noise_sigma=0.3, burst_rate_per_min=4, burst_amp=1.0), seed=9)
    a, _ = generate(spec)
    b, _ = generate(spec)
    assert a.ppg.samples.tobytes() == b.ppg.samples.tobytes()
    c, _ = generate(SynthSpec(noise=spec.noise, seed=10))
    assert not np.array_equal(a.ppg.samples, c.ppg.samples)


@settings(max_examples=40, deadline=None)
@given(st.floats(40, 200))
def test_hr_reproduced_without_fm(hr):
    rec, truth = generate(SynthSpec(heart_rate_bpm=hr, respiration_rate_brpm=15))
    assert 60 / np.mean(rec.qrs.intervals_s) == pytest.approx(hr, abs=0.01)
    assert truth.heart_rate_bpm == pytest.approx(hr, abs=0.01)


def test_fm_modulates_intervals():
    spec = SynthSpec(heart_rate_bpm=60, respiration_rate_brpm=15, fm_depth_s=0.05)
    t = beat_times(spec)
    expected = 1.0 + 0.05 * np.sin(2 * np.pi * 0.25 * t[1:-1])
    np.testing.assert_allclose(np.diff(t)[1:], expected, atol=1e-12)


def test_sinusoid_shape():
    spec = SynthSpec(pulse_shape="sinusoid", heart_rate_bpm=60)
    x = clean_waveform(spec, beat_times(spec))
    assert np.max(np.abs(x)) == pytest.approx(1.0, abs=1e-3)


class TestNoise:
    def test_snr(self):
        spec = SynthSpec(noise=NoiseSpec(white_noise_snr_db=6.0))
        clean = clean_waveform(spec, beat_times(spec))
        noisy = add_noise(clean, spec, np.random.default_rng(0))
        snr = 20 * np.log10(np.std(clean) / np.std(noisy - clean))
        assert snr == pytest.approx(6.0, abs=0.3)

    def test_wander(self):
        spec = SynthSpec(noise=NoiseSpec(baseline_wander_amp=2.0, baseline_wander_freq_hz=0.2))
        clean = clean_waveform(spec, beat_times(spec))
        resid = add_noise(clean, spec, np.random.default_rng(0)) - clean
        f = np.fft.rfftfreq(resid.size, 1 / 25)
        assert f[np.argmax(np.abs(np.fft.rfft(resid)))] == pytest.approx(0.2, abs=0.02)
        assert np.max(np.abs(resid)) == pytest.approx(2.0, abs=0.01)

    def test_bursts_localized(self):
        spec = SynthSpec(noise=NoiseSpec(burst_rate_per_min=3, burst_amp=5.0, burst_duration_s=0.5))
        clean = clean_waveform(spec, beat_times(spec))
        resid = add_noise(clean, spec, np.random.default_rng(1)) - clean
        assert 0 < np.count_nonzero(resid) <= 3 * 13

    def test_tone(self):
        spec = SynthSpec(noise=NoiseSpec(inband_tone_amp=0.5, inband_tone_freq_hz=1.3))
        clean = clean_waveform(spec, beat_times(spec))
        resid = add_noise(clean, spec, np.random.default_rng(2)) - clean
        f = np.fft.rfftfreq(resid.size, 1 / 25)
        assert f[np.argmax(np.abs(np.fft.rfft(resid)))] == pytest.approx(1.3, abs=0.02)


class TestValidation:
    @pytest.mark.parametrize("kw", [
        {"duration_s": 0}, {"heart_rate_bpm": -5}, {"am_depth": 1.0},
        {"fm_depth_s": 0.6, "heart_rate_bpm": 60}, {"pulse_shape": "square"},
        {"heart_rate_bpm": 900}, {"noise": NoiseSpec(white_noise_sigma=-1)},
    ])
    def test_spec_error(self, kw):
        with pytest.raises(PipelineError) as info:
            generate(SynthSpec(**kw))
        assert info.value.code == "spec_error"

    def test_corpus_names_index(self):
        with pytest.raises(PipelineError, match="#2"):
            corpus([SynthSpec(), SynthSpec(), SynthSpec(duration_s=0)])

    def test_from_dict_unknown(self):
        with pytest.raises(PipelineError):
            SynthSpec.from_dict({"heart_rate": 60})

    def test_dict_round_trip(self):
        spec = SynthSpec(heart_rate_bpm=80, noise=NoiseSpec(white_noise_snr_db=3.0), seed=4)
        assert SynthSpec.from_dict(spec.to_dict()) == spec


class TestCorpus:
    def test_cardinality(self):
        assert len(corpus([SynthSpec(duration_s=10.0, seed=i) for i in range(100)])) == 100

    def test_empty(self):
        assert corpus([]) == []

    def test_grid_truths(self):
        hrs, rrs = [45, 90, 180], [12, 30]
        pairs = corpus(grid_specs(hrs, rrs, seed=5))
        assert [(t.respiration_rate_brpm) for _, t in pairs] == [12, 30] * 3
        for (rec, truth), hr in zip(pairs, np.repeat(hrs, 2)):
            assert truth.heart_rate_bpm == pytest.approx(hr, abs=0.01)
            assert rec.reference.heart_rate_bpm == truth.heart_rate_bpm
        assert [r.segment_id for r, _ in pairs] == [f"synth-{i:05d}" for i in range(6)]

    def test_seeds_distinct(self):
        specs = grid_specs([60, 70], [15], seed=100)
        assert [s.seed for s in specs] == [100, 101]
