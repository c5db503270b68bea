"""Exception hierarchy shared by all modules."""


class QuditQPTError(Exception):
    """Base class for every error raised by this package."""


class NotSquare(QuditQPTError, ValueError):
    pass


class NotHermitian(QuditQPTError, ValueError):
    pass


class NotPSD(QuditQPTError, ValueError):
    pass


class InvalidState(QuditQPTError, ValueError):
    pass


class DimensionMismatch(QuditQPTError, ValueError):
    pass


class BadIndices(QuditQPTError, ValueError):
    pass


class BadWeights(QuditQPTError, ValueError):
    pass


class BadProbability(QuditQPTError, ValueError):
    pass


class InvalidChannel(QuditQPTError, ValueError):
    pass


class ZeroTrace(QuditQPTError, ArithmeticError):
    pass


class UnsupportedDimension(QuditQPTError, ValueError):
    pass


class IncompleteRecords(QuditQPTError, ValueError):
    pass


class MissingOutputs(QuditQPTError, ValueError):
    pass


class IllConditioned(QuditQPTError, ArithmeticError):
    pass


class SingularBeyondRecovery(QuditQPTError, ArithmeticError):
    pass


class GeometryMismatch(QuditQPTError, ValueError):
    pass


class OutOfRange(QuditQPTError, ValueError):
    pass
