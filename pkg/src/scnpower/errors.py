"""Exception types shared across the simulator."""


class ScnPowerError(Exception):
    """Base class for all scnpower errors."""


class SpacingInfeasible(ScnPowerError):
    """Rejection sampling could not place the small cells with the required
    minimum spacing inside the macrocell. Usually means too many cells for
    the chosen radii."""


class InfeasibleRate(ScnPowerError):
    """The rate floor cannot be met under the current interference snapshot,
    even at full transmit power.

    ``cell`` identifies the offending small cell when raised from a game run
    (None when raised from a standalone solve).
    """

    def __init__(self, message: str, cell: int | None = None):
        super().__init__(message)
        self.cell = cell


class OutOfDomain(ScnPowerError):
    """A barrier argument is non-positive at the evaluation point; the caller
    must keep iterates strictly inside the barrier domain."""


class DegenerateScale(ScnPowerError):
    """The scale component of a transformed point collapsed to (numerically)
    zero, so powers cannot be recovered. Signals solver divergence."""


class MaxItersExceeded(ScnPowerError):
    """The penalty continuation ran out of outer rounds before meeting its
    termination criteria. Carries the best point found so far."""

    def __init__(self, message: str, best_power=None, diagnostics=None):
        super().__init__(message)
        self.best_power = best_power
        self.diagnostics = diagnostics


class NotConverged(ScnPowerError):
    """The best-response iteration hit its round cap without the utility
    shift dropping below the threshold. Carries the trace so far."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class SpecValidationError(ScnPowerError):
    """An experiment spec file failed validation. ``field`` names the
    offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
