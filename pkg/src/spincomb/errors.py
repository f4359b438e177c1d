"""Exception hierarchy.

Everything raised on purpose derives from :class:`SpinCombError`, so callers
(the CLI in particular) can map failures to exit codes.
"""


class SpinCombError(Exception):
    pass


class ParameterError(SpinCombError, ValueError):
    """An input parameter is outside its admissible range."""


class ConfigError(SpinCombError, ValueError):
    """A scenario file is malformed, has unknown keys or bad unit suffixes."""


class DegenerateInputError(SpinCombError, ValueError):
    pass


class UnsupportedInputError(SpinCombError, ValueError):
    """The requested solver cannot handle this input; another route can."""


class ContractError(SpinCombError, ValueError):
    pass


class NumericalError(SpinCombError, ArithmeticError):
    pass


class StepSizeError(NumericalError):
    pass


class AccuracyError(NumericalError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class RegimeError(NumericalError):
    """The physical regime does not support the requested analysis."""


class ValidationError(NumericalError):
    """A cross-solver consistency gate failed."""
