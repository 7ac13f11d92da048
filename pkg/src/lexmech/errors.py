"""Exception hierarchy shared across the package."""


class LexmechError(Exception):
    """Base class for every error raised by lexmech."""


class SpaceMismatchError(LexmechError, ValueError):
    pass


class PreconditionError(LexmechError, ValueError):
    pass


class MalformedProgramError(LexmechError, ValueError):
    pass


class InfeasibleError(LexmechError):
    pass


class UnboundedError(LexmechError):
    pass


class SizeCapError(LexmechError):
    pass


class ConstructionFailure(LexmechError):
    """A constructive search (belief, LPS) found no solution."""


class ConfigError(LexmechError, ValueError):
    pass
