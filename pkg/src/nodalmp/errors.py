"""Exception hierarchy shared by all modules."""


class NodalMPError(Exception):
    """Base class for every error raised by the package."""


class DomainError(NodalMPError, ValueError):
    """A numeric argument lies outside the region where a formula is defined.

    ``argument`` names the offending quantity (for Gamma-based constants this
    is the Gamma argument that became non-positive).
    """

    def __init__(self, message, argument=None, value=None):
        super().__init__(message)
        self.argument = argument
        self.value = value


class StructuralError(NodalMPError):
    """Mesh or symmetry data is inconsistent (empty subspace, broken map, ...)."""


class SupportOverlapError(StructuralError):
    def __init__(self, message, pair):
        super().__init__(message)
        self.pair = pair


class MountainGeometryError(NodalMPError):
    """No positive rim could be established around the origin."""


class ConvergenceError(NodalMPError):
    """An iterative procedure hit its cap without meeting its tolerance.

    ``history`` carries the diagnostic trace (e.g. path maxima per iteration).
    """

    def __init__(self, message, history=None, result=None):
        super().__init__(message)
        self.history = list(history or [])
        self.result = result


class ConfigError(NodalMPError):
    """Configuration document failed schema validation."""

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer
