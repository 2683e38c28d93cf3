"""Exception hierarchy.

Two families: :class:`InputError` for malformed configuration, files and
arguments, and :class:`NumericalError` for data that cannot be processed
(singular calibration, undefined phase, ...). The CLI maps them to exit
codes 2 and 3.
"""


class VitalRadarError(Exception):
    """Base class for all package errors."""


class InputError(VitalRadarError, ValueError):
    pass


class NumericalError(VitalRadarError, ArithmeticError):
    pass


class InvalidConfigError(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class OutOfRangeError(InputError):
    """Reflector beyond the unambiguous range of the chirp configuration."""


class CaptureLengthError(InputError):
    def __init__(self, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"capture length mismatch: expected {expected} bytes, got {actual}")


class DemuxError(InputError):
    pass


class AliasingError(InputError):
    pass


class UndefinedPhaseError(NumericalError):
    def __init__(self, chirp, source_bin=None):
        self.chirp = chirp
        self.source_bin = source_bin
        msg = f"zero-magnitude range spectrum at chirp {chirp}"
        if source_bin is not None:
            msg += f" (range bin {source_bin[0]}, azimuth index {source_bin[1]})"
        super().__init__(msg)


class NoSignalError(NumericalError):
    pass


class NoPeriodicityError(NumericalError):
    pass


class SingularCalibrationError(NumericalError):
    pass


class FusionInputError(NumericalError):
    pass
