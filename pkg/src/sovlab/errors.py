"""Exception hierarchy shared by the library and the command line."""


class SovlabError(Exception):
    pass


class ArgumentError(SovlabError, ValueError):
    """Malformed call: bad index, shape or option."""


class CapacityError(SovlabError):
    """Requested dense object exceeds the configured size cap."""


class ParameterError(SovlabError, ValueError):
    """Spectral parameters violate a genericity requirement."""


class StructureError(SovlabError, ValueError):
    """An operator lacks the block structure it must have."""


class EvaluationError(SovlabError, ArithmeticError):
    """A function was evaluated at a pole or a singular point."""


class BasisError(SovlabError):
    """A covector family failed its rank certificate."""


class InconsistencyError(SovlabError):
    """Input data admit no solution of the requested kind."""


class ConfigError(SovlabError, ValueError):
    pass
