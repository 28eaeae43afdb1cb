"""Error classes shared by the pipeline stages; the CLI maps each to an exit code."""


class PipelineError(Exception):
    pass


class ConfigError(PipelineError, ValueError):
    """Invalid run configuration or arguments."""


class DataError(PipelineError):
    """Missing, unreadable or insufficient audio data."""


class NumericalError(PipelineError, FloatingPointError):
    """A loss or output became non-finite."""
