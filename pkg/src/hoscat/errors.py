"""Exception types shared across the package."""


class HoscatError(Exception):
    """Base class for all package errors."""


class InputError(HoscatError, ValueError):
    """Invalid arguments (dimension mismatch, out-of-range parameters)."""


class FieldError(HoscatError):
    """A coefficient field failed validation or produced non-finite values."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DivergenceError(HoscatError):
    """An integrator ran out of steps; carries the partial trajectory."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class NonConvergenceError(HoscatError):
    """A scattering limit could not be certified before the time horizon."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InversionError(HoscatError):
    """Newton inversion of a scattering map stagnated."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class LemmaViolation(HoscatError):
    """The linear escape bound could not be fitted."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class GridError(HoscatError, ValueError):
    """Spatial grid too coarse or too small for the requested state."""


class StabilityError(HoscatError):
    """A propagator lost norm beyond its declared defect bound."""


class DomainError(HoscatError):
    """Wavefunction mass reached the grid boundary."""


class KernelDegeneracyError(HoscatError):
    """Quadratic-phase factorisation is ill-conditioned at the requested time."""


class QuadratureError(HoscatError):
    """Weyl kernel quadrature is under-resolved."""


class ConfigError(HoscatError, ValueError):
    """Scenario configuration failed schema validation."""
