"""Exception types shared across the pipeline."""


class PipelineError(Exception):
    """A processing failure carrying a machine-readable ``code``.

    Codes used by the library: ``insufficient_annotations``,
    ``degenerate_passband``, ``invalid_cutoff``, ``unstable_filter``,
    ``segment_too_short``, ``window_too_long``, ``invalid_component_count``,
    ``dimension_mismatch``, ``insufficient_peaks``, ``insufficient_span``,
    ``band_empty``, ``invalid_input``, ``undefined_correlation``,
    ``invalid_record``, ``spec_error``.
    """

    def __init__(self, code: str, message: str = ""):
        self.code = code
        self.message = message or code
        super().__init__(f"{code}: {self.message}" if message else code)


class ConfigError(PipelineError):
    """Invalid pipeline or generator configuration."""

    def __init__(self, message: str):
        super().__init__("invalid_config", message)


class ParseError(Exception):
    """Malformed input file. ``line`` is 1-based, or None for whole-file errors."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
