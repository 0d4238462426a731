"""Exception hierarchy.

Everything raised for bad input data derives from :class:`DataError`, which the
CLI maps to exit code 2.
"""


class DataError(ValueError):
    """Base class for invalid or unreadable input data."""


class ScanpathError(DataError):
    pass


class EmptyScanpath(ScanpathError):
    pass


class CoordinateOutOfRange(ScanpathError):
    def __init__(self, index, value, axis="x"):
        self.index = index
        self.value = value
        self.axis = axis
        super().__init__(f"fixation {index}: {axis}={value!r} outside [0, 1]")


class InvalidTimestamp(ScanpathError):
    pass


class NonMonotoneTimestamps(ScanpathError):
    def __init__(self, index, prev, value):
        self.index = index
        super().__init__(f"fixation {index}: t={value!r} precedes previous t={prev!r}")


class EmptySaccadeList(DataError):
    pass


class InvalidAlignment(DataError):
    pass


class NonFiniteCost(DataError):
    pass


class MixedImageIds(DataError):
    pass


class MissingPredictions(DataError):
    pass


class AllZeroSaliencyMap(DataError):
    pass


class TooFewImages(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class ValidationError(DataError):
    def __init__(self, record, cause):
        self.record = record
        self.cause = cause
        super().__init__(f"record {record}: {cause}")


class PGMError(DataError):
    pass


class BadMagic(PGMError):
    pass


class BadHeader(PGMError):
    pass


class TruncatedData(PGMError):
    pass


class UnsupportedMaxval(PGMError):
    pass


class NoFixations(DataError):
    pass


class BinMismatch(DataError):
    pass


class ImageTooSmall(DataError):
    pass


class EmptySequence(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class UndecodableImage(DataError):
    pass


class FixationOutsideImage(DataError):
    pass


class CheckpointError(DataError):
    pass


class ConfigError(DataError):
    pass
