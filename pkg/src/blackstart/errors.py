"""Exception types raised by the simulator."""


class BlackstartError(Exception):
    """Base class for simulation failures."""


class NumericalDivergence(BlackstartError):
    def __init__(self, t):
        self.t = t
        super().__init__(f"numerical divergence at t={t:.9g} s")


class DemagTimeout(BlackstartError):
    def __init__(self, phase, t):
        self.phase = phase
        self.t = t
        super().__init__(f"demag failed to converge (phase {phase}, t={t:.6g} s)")


class InsufficientSpan(ValueError):
    """Raised when a trajectory is shorter than one fundamental period."""


class UnphysicalResidual(ValueError):
    """Raised for residual flux beyond the plausibility bound."""
