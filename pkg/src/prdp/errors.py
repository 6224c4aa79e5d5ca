"""Exception types shared across the package."""


class PrdpError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(PrdpError):
    """Invalid configuration: bad parameters, malformed specs, missing inputs."""


class IncompatibleQueryError(PrdpError):
    """The requested method/query combination is not defined (N.A.)."""


class MechanismRequirementError(PrdpError):
    """A mechanism precondition (e.g. a minimum record count) is violated."""
