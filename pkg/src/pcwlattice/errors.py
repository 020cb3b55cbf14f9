"""Exception hierarchy shared by all modules."""


class PcwLatticeError(Exception):
    """Base class for every error raised by the package."""


class DomainError(PcwLatticeError, ValueError):
    """Argument outside the mathematical domain of a formula."""


class RangeError(PcwLatticeError, ValueError):
    """Query point outside the sampled range of a grid-backed term."""


class ResonanceError(DomainError):
    """A detuning that must be nonzero vanished."""


class WrongRegimeError(PcwLatticeError, ValueError):
    """Operation called for the bandgap regime with a dispersive configuration (or vice versa)."""


class NotAMinimumError(PcwLatticeError, ValueError):
    """Hessian at a requested trap position is not positive definite."""


class InfeasibleTrapError(DomainError):
    """No finite drive can produce the requested trap."""


class UndefinedContrastError(DomainError):
    """Contrast of an identically zero intensity plane."""


class AdiabaticityError(DomainError):
    """Drive too close to resonance for the adiabatic elimination to hold."""


class StiffnessError(PcwLatticeError, RuntimeError):
    """Adaptive integrator step size collapsed."""


class GridFormatError(PcwLatticeError, ValueError):
    """Malformed grid file. ``line`` holds the 1-based offending line when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class GridDataError(PcwLatticeError, ValueError):
    """Well-formed grid file whose data violate monotonicity or finiteness."""


class UnknownSpeciesError(PcwLatticeError, LookupError):
    """Species name not present in the reference-data file."""


class ConfigError(PcwLatticeError, ValueError):
    """Scenario configuration failed validation."""
