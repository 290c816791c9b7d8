import numpy as np
import pytest

from ppgselect.core import PipelineConfig, QrsAnnotations, SegmentRecord, SignalSegment, VitalReference
from ppgselect.synth import SynthSpec, generate


@pytest.fixture
def config():
    return PipelineConfig()


def make_record(hr=60.0, rr=15.0, seed=0, **kw):
    record, truth = generate(SynthSpec(heart_rate_bpm=hr, respiration_rate_brpm=rr, seed=seed, **kw))
    return record, truth


def sine_record(freq_hz=1.0, fs=25.0, seconds=60.0, segment_id="sine"):
    t = np.arange(int(round(seconds * fs))) / fs
    beats = np.arange(0.25 / freq_hz, seconds, 1.0 / freq_hz)
    return SegmentRecord(
        SignalSegment(np.sin(2 * np.pi * freq_hz * t), fs),
        QrsAnnotations(beats),
        VitalReference(60.0 * freq_hz, 15.0),
        segment_id,
    )


# one summary line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
