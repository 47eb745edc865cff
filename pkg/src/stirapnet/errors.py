"""Exception types shared by every stirapnet module."""


class ConfigurationError(ValueError):
    """Invalid parameters, shapes, or scenario configuration."""


class SingularDetuningError(ConfigurationError):
    """A detuning denominator of the dispersive model vanished."""


class IntegrationError(RuntimeError):
    """The adaptive integrator could not continue.

    Attributes
    ----------
    time : float
        Simulation time at which the step size underflowed.
    """

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t={time!r})")
        self.time = time
