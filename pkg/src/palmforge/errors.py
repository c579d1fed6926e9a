"""Exception types shared across the package."""


class PalmForgeError(Exception):
    """Base class for all palmforge errors."""


class DomainMismatchError(PalmForgeError):
    """Operands or samplers belong to different group domains."""


class IncompleteTableError(PalmForgeError):
    """A displacement table is missing an entry at a required location."""


class InsufficientWindowError(PalmForgeError):
    """The simulation window is too small for the requested operation."""


class SimplicityError(PalmForgeError):
    """An operation defined on simple configurations got a non-simple one."""


class SupportBiasError(PalmForgeError):
    """A test function or weight function reaches outside the core window."""


class GateError(PalmForgeError):
    """A scenario sanity gate (e.g. sub-linear growth) rejected the setup."""
