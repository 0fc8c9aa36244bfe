"""Exception types shared across the toolkit."""


class DpdError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(DpdError):
    """A configuration value is out of range or inconsistent."""


class FramingError(DpdError):
    """A signal's length or rate does not match the expected OFDM framing."""


class InputRangeError(DpdError):
    """An input signal exceeds the allowed drive range."""


class ConditioningError(DpdError):
    """A least-squares system is rank deficient beyond what regularization absorbs.

    Carries an estimate of the condition number of the (regularized) basis.
    """

    def __init__(self, message: str, condition_number: float):
        super().__init__(message)
        self.condition_number = condition_number


class DivergenceError(DpdError):
    """Training produced a non-finite gradient."""


class MetricError(DpdError):
    """A metric is undefined for the given input (e.g. zero channel power)."""


class AlignmentError(DpdError):
    """Signals that must share a frequency grid do not."""


class FormatError(DpdError):
    """A serialized artifact (signal, model, profile, spec) is malformed."""
