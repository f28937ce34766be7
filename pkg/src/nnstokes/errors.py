"""Exception types shared across the package."""


class NnstokesError(Exception):
    """Base class for all package-specific failures."""


class NonHermitianField(NnstokesError):
    """Spectral coefficients do not describe a real-valued field."""


class DegenerateViscosity(NnstokesError):
    """The viscosity vanishes on the whole grid and no penalty term is active,
    so the discrete energy has flat directions and no minimizer."""


class MaxIterations(NnstokesError):
    """The minimizer hit its iteration cap before reaching the gradient tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CflViolation(NnstokesError):
    """Adaptive sub-stepping pushed the time step below the hard floor."""


class UnresolvableMollifier(NnstokesError):
    """The mollifier width does not exceed the grid spacing."""


class ConfigError(NnstokesError):
    """Base class for configuration problems. The message lists every
    offending line, not just the first one."""


class UnknownKey(ConfigError):
    """A configuration key is not in the documented key set."""


class BadValue(ConfigError):
    """A configuration value fails to parse or violates a domain constraint."""


class MissingRequired(ConfigError):
    """A required configuration key is absent."""


class InadmissibleExponents(ConfigError):
    """The exponent pack falls outside the admissible region and force mode is off."""
