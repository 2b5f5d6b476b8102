"""Exception hierarchy shared by all modules."""


class ChernMinError(Exception):
    """Base class; ``context`` names the module/operation that raised."""

    def __init__(self, message, context=None, partial=None):
        super().__init__(message)
        self.context = context
        self.partial = partial


class NonPositiveMetric(ChernMinError):
    pass


class DerivativeUnavailable(ChernMinError):
    pass


class DegenerateConformalFactor(ChernMinError):
    pass


class CircleThroughZero(ChernMinError):
    pass


class NotImmersive(ChernMinError):
    pass


class NotConformal(ChernMinError):
    pass


class NonIsolatedZeroSuspected(ChernMinError):
    def __init__(self, message, kind=None, classification=None, **kw):
        super().__init__(message, **kw)
        self.kind = kind
        self.classification = classification


class AdaptedFrameDegenerate(ChernMinError):
    pass


class ExcisionTooLarge(ChernMinError):
    pass


class NotGeneric(ChernMinError):
    pass


class NotChernMinimal(ChernMinError):
    pass


class LineSearchStalled(ChernMinError):
    pass


class ConfigError(ChernMinError):
    pass


class MissingDump(ChernMinError):
    pass
