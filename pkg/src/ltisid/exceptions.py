"""Exception types shared across the package."""


class LtisidError(Exception):
    """Base class for all package-specific errors."""


class SimulationOverflowError(LtisidError):
    """State became non-finite while simulating (typically an unstable A)."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"simulation diverged: non-finite state after update at t={step}")


class InsufficientDataError(LtisidError, ValueError):
    """Trajectory too short for the requested regression horizon."""


class UnstableSystemError(LtisidError, ValueError):
    """Operation requires a stable system (spectral radius < 1)."""


class RankDeficientError(LtisidError):
    """Hankel matrix has lower rank than the requested realization order."""

    def __init__(self, requested: int, achieved: int):
        self.requested = requested
        self.achieved = achieved
        super().__init__(
            f"rank-deficient Hankel matrix: requested order {requested}, "
            f"achieved rank {achieved} (system order overestimated?)"
        )


class FixedPointError(LtisidError, RuntimeError):
    """Fixed-point iteration failed to settle within the iteration budget."""
