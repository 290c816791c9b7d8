import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppgselect.core import (
    PipelineConfig,
    QrsAnnotations,
    SegmentRecord,
    SignalSegment,
    VitalReference,
    segment_stream,
    validate_record,
)
from ppgselect.errors import ConfigError, PipelineError


def _record(ppg_len=1500, qrs=None, ref=(72.0, 15.0), fs=25.0):
    qrs = np.linspace(0.5, 59.0, 70) if qrs is None else qrs
    return SegmentRecord(SignalSegment(np.zeros(ppg_len), fs), QrsAnnotations(qrs),
                         VitalReference(*ref), "r")


def codes(record):
    return [v.code for v in validate_record(record)]


class TestSignalSegment:
    def test_duration_and_times(self):
        seg = SignalSegment(np.arange(50.0), 25.0, start_time_s=10.0)
        assert seg.duration_s == 2.0
        assert seg.times_s[0] == 10.0
        assert seg.times_s[-1] == pytest.approx(10.0 + 49 / 25)

    def test_samples_read_only(self):
        seg = SignalSegment([1.0, 2.0], 25.0)
        with pytest.raises(ValueError):
            seg.samples[0] = 5.0

    def test_copy_is_isolated(self):
        src = np.ones(4)
        seg = SignalSegment(src, 25.0)
        src[0] = 9.0
        assert seg.samples[0] == 1.0

    @pytest.mark.parametrize("samples, fs", [([], 25.0), ([1.0], 0.0), ([1.0], -3.0)])
    def test_rejects_bad_construction(self, samples, fs):
        with pytest.raises(PipelineError):
            SignalSegment(samples, fs)


class TestValidateRecord:
    def test_well_formed(self):
        assert codes(_record()) == []

    def test_non_increasing_qrs(self):
        qrs = np.linspace(0.5, 59.0, 70)
        qrs[10] = qrs[9]
        assert codes(_record(qrs=qrs)) == ["qrs_not_increasing"]

    def test_short_ppg(self):
        assert codes(_record(ppg_len=750, qrs=np.linspace(0.5, 29.0, 35))) == ["segment_duration_mismatch"]

    def test_one_sample_tolerance(self):
        assert codes(_record(ppg_len=1501)) == []
        assert codes(_record(ppg_len=1499)) == []
        assert codes(_record(ppg_len=1502)) == ["segment_duration_mismatch"]

    def test_nonfinite_samples(self):
        x = np.zeros(1500)
        x[3] = np.nan
        rec = SegmentRecord(SignalSegment(x, 25.0), QrsAnnotations(np.linspace(0.5, 59, 70)),
                            VitalReference(60, 15), "r")
        assert codes(rec) == ["nonfinite_samples"]

    def test_interval_bounds(self):
        assert "qrs_interval_out_of_bounds" in codes(_record(qrs=[1.0, 1.1, 2.0]))
        assert "qrs_interval_out_of_bounds" in codes(_record(qrs=[1.0, 5.0, 6.0]))

    def test_out_of_segment(self):
        assert codes(_record(qrs=[-0.5, 0.5, 1.5])) == ["qrs_out_of_segment"]

    def test_reference_bounds(self):
        assert codes(_record(ref=(10.0, 70.0))) == ["ref_hr_out_of_range", "ref_rr_out_of_range"]

    def test_too_few_qrs(self):
        assert "qrs_too_few" in codes(_record(qrs=[5.0]))

    def test_idempotent(self):
        rec = _record(qrs=[3.0, 2.0, 1.0])
        assert validate_record(rec) == validate_record(rec)


class TestSegmentStream:
    @pytest.mark.parametrize("n, expected", [(3000, 2), (1499, 0), (3700, 2), (0, 0)])
    def test_counts(self, n, expected):
        segs = segment_stream(np.arange(n, dtype=float), 25.0, 60.0)
        assert len(segs) == expected
        assert all(len(s) == 1500 for s in segs)

    def test_start_times(self):
        segs = segment_stream(np.zeros(4500), 25.0, 60.0, start_time_s=100.0)
        assert [s.start_time_s for s in segs] == [100.0, 160.0, 220.0]

    def test_bad_length(self):
        with pytest.raises(ConfigError):
            segment_stream([1.0], 25.0, 0.0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 400), st.integers(1, 50))
    def test_concatenation_is_prefix(self, n, size):
        x = np.arange(n, dtype=float)
        segs = segment_stream(x, 1.0, float(size))
        joined = np.concatenate([s.samples for s in segs]) if segs else np.empty(0)
        np.testing.assert_array_equal(joined, x[:joined.size])
        assert n - joined.size < size


class TestPipelineConfig:
    def test_defaults(self):
        c = PipelineConfig()
        assert (c.window_len_n, c.stride_t, c.num_components_p) == (400, 5, 30)
        assert c.rr_band_brpm == (10.0, 50.0)
        assert c.resample_rate_hz == 4.0

    def test_window_count(self):
        c = PipelineConfig()
        assert c.window_count(1500) == 221
        assert c.replace(drop_last_window=True).window_count(1500) == 220

    @pytest.mark.parametrize("changes", [
        {"window_len_n": 0}, {"stride_t": 1.5}, {"num_components_p": True},
        {"passband_margin_hz": -0.1}, {"passband_floor_hz": 5.0},
        {"rr_band_brpm": (50, 10)}, {"interpolation": "spline"}, {"gaussian_sigma_samples": 0},
    ])
    def test_invalid(self, changes):
        with pytest.raises(ConfigError):
            PipelineConfig(**changes)

    def test_check_for_length(self):
        c = PipelineConfig()
        c.check_for_length(1500)
        with pytest.raises(ConfigError):
            c.check_for_length(399)
        with pytest.raises(ConfigError):
            c.replace(num_components_p=222).check_for_length(1500)

    def test_dict_round_trip(self):
        c = PipelineConfig(num_components_p=12, rr_band_brpm=(8, 40))
        assert PipelineConfig.from_dict(c.to_dict()) == c

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="bogus"):
            PipelineConfig.from_dict({"bogus": 1})

    def test_config_error_code(self):
        with pytest.raises(ConfigError) as info:
            PipelineConfig(stride_t=0)
        assert info.value.code == "invalid_config"
