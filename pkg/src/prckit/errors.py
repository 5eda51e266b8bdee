"""Exception hierarchy shared by every module."""


class PrcError(Exception):
    """Base class for all toolkit errors."""


class LengthMismatch(PrcError, ValueError):
    pass


class BadSparsity(PrcError, ValueError):
    pass


class BadParams(PrcError, ValueError):
    pass


class DegenerateKernel(PrcError, RuntimeError):
    pass


class NotLengthPreserving(PrcError, ValueError):
    pass


class EvenWidth(PrcError, ValueError):
    pass


class TooShort(PrcError, ValueError):
    pass


class NotPrefixFree(PrcError, ValueError):
    pass


class CapacityTooSmall(PrcError, ValueError):
    pass


class TooFewSamples(PrcError, ValueError):
    pass


class BudgetExceeded(PrcError, RuntimeError):
    pass


class ZeroProbabilityToken(PrcError, ValueError):
    """An observed token had probability zero under the model."""


class KeyFormatError(PrcError, ValueError):
    pass
