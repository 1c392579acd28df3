"""Exception hierarchy shared by all ncbem modules."""


class NcbemError(Exception):
    """Base class for every error raised by the package."""


class DomainError(NcbemError, ValueError):
    """A parameter lies outside the domain of a patch or reference element."""


class SingularParameterizationError(NcbemError):
    """Surface tangents are (numerically) parallel at the requested point."""


class ConfigurationError(NcbemError, ValueError):
    """Inconsistent physical or numerical configuration."""


class TopologyError(NcbemError):
    """Mesh or skeleton connectivity is inconsistent."""


class DegenerateElementError(NcbemError):
    """An element has zero or negative surface measure, or a singular mass block."""


class InterfaceDataError(NcbemError):
    """Hanging-vertex data of a non-conforming interface is unusable."""


class SingularityError(NcbemError, ValueError):
    """A kernel was evaluated at coincident points."""


class UnsupportedCaseError(NcbemError, NotImplementedError):
    """A quadrature configuration that this version does not handle."""


class NearContactError(NcbemError):
    """Near-field subdivision exceeded its depth limit (likely overlapping geometry)."""


class ContractViolation(NcbemError):
    """A documented precondition was violated (e.g. an expansion used inside its convergence sphere)."""


class ProjectionError(NcbemError):
    """Closest-point projection failed to converge during order elevation."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class IllPosedProblemError(ConfigurationError):
    """The block system has no excitation (no electrode and no floating conductor)."""
