class NmqcError(Exception):
    """Base class for all errors raised by this package."""


class InputShapeError(NmqcError, ValueError):
    pass


class CapacityError(NmqcError, ValueError):
    """Requested object exceeds a configured size budget."""


class UnknownNameError(NmqcError, LookupError):
    pass


class TopologyError(NmqcError, ValueError):
    pass


class MitigationError(NmqcError, ValueError):
    pass


class PlanError(NmqcError, ValueError):
    pass
