"""Exception types shared across the package."""


class DemonBatteryError(Exception):
    """Base class for all package errors."""


class NotHermitian(DemonBatteryError):
    """Operator expected to be Hermitian is not (within tolerance)."""


class NotUnitary(DemonBatteryError):
    """Operator expected to be unitary is not (within tolerance)."""


class DimensionMismatch(DemonBatteryError):
    """Operands have incompatible dimensions."""


class StateInvalid(DemonBatteryError):
    """A density matrix violates Hermiticity, unit trace or positivity."""


class ZeroProbabilityBranch(DemonBatteryError):
    """A measurement branch with vanishing probability was asked for its
    (undefined) normalized state."""


class DegenerateEvidence(DemonBatteryError):
    """Bayes update impossible: the observed outcome has zero probability
    under the prior."""
