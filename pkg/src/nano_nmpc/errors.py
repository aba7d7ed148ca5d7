"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an operation receives non-finite or malformed inputs."""


class DegenerateInputError(ValueError):
    """Raised for inputs that are structurally unusable (e.g. zero quaternion)."""


class IntegrationDivergedError(RuntimeError):
    """Raised when numerical propagation produces non-finite state."""


class ConfigError(ValueError):
    """Raised for malformed or unknown configuration content."""


class SimulationError(RuntimeError):
    """Raised when a closed-loop run must abort (solver failure, diverged plant)."""

    def __init__(self, message: str, step: int | None = None, state=None):
        super().__init__(message)
        self.step = step
        self.state = state
