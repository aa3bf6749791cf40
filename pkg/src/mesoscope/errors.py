"""Exception types shared across the toolkit."""


class MesoscopeError(Exception):
    """Base class for all toolkit errors."""


class ModeMismatch(MesoscopeError):
    """Operator and state (or two states) disagree on mode structure."""


class TruncationOverflow(MesoscopeError):
    """An operation pushed significant amplitude past the retained Fock levels."""


class NotSymplectic(MesoscopeError):
    """Symplectic parameters violate |mu|^2 - |nu|^2 = 1."""


class GridEmpty(MesoscopeError):
    """A quadrature or phase-space grid has no points."""


class StepTooLarge(MesoscopeError):
    """Integrator step produced unacceptable drift in a conserved quantity."""


class FrameInconsistent(MesoscopeError):
    """Frame parameters do not satisfy their equations of motion."""


class NormDrift(MesoscopeError):
    """State norm drifted beyond tolerance during evolution."""


class RegimeViolation(MesoscopeError):
    """Parameters outside the validity domain of the requested reduced model."""


class ZeroDensity(MesoscopeError):
    """Conditioning on an outcome whose marginal density is essentially zero."""


class DomainError(MesoscopeError):
    """Argument outside the mathematical domain of a closed-form expression."""


class RegimeWarning(UserWarning):
    """Reduced-model accuracy is marginal for the requested parameters."""
