"""Exception types shared across the simulator."""


class InvalidParameter(ValueError):
    """Raised when an argument violates an operation's preconditions."""


class SimulationEnded(RuntimeError):
    """Raised when a round is requested but no node is alive."""
