"""Exception hierarchy shared by all paritygate modules."""


class ParityGateError(Exception):
    """Base class for all library errors."""


class DimensionError(ParityGateError, ValueError):
    """A dimension is invalid or two objects have incompatible dimensions."""


class TruncationError(ParityGateError, ValueError):
    """A constructed state leaves too much probability beyond the Fock cutoff."""


class EncodingConsistencyError(ParityGateError):
    """A constructed encoding violates its parity/orthogonality invariants."""


class RegimeError(ParityGateError, ValueError):
    """Detunings or couplings fall outside the assumed parameter regime."""


class SingularityError(ParityGateError, ValueError):
    """A derived quantity would require dividing by a vanishing detuning."""


class ConfigError(ParityGateError, ValueError):
    """A configuration file or parameter bundle is malformed or inconsistent."""


class PhaseCoherenceError(ParityGateError):
    """A logical basis state is not an eigenvector of the diagonal gate."""


class IntegrationAccuracyError(ParityGateError):
    """An integrator drifted beyond its accuracy contract."""


class InvalidStateError(ParityGateError, ValueError):
    """A state fails a physicality check (norm, trace, positivity)."""
