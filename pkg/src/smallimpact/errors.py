"""Exception hierarchy shared across the package."""


class SmallImpactError(Exception):
    pass


class DomainError(SmallImpactError, ValueError):
    """An input lies outside the domain where a formula is defined."""


class NotSymmetric(DomainError):
    pass


class NotPositiveDefinite(DomainError):
    pass


class GridError(SmallImpactError):
    """Evaluation requested outside a solved grid."""


class ConvergenceError(SmallImpactError):
    pass


class SimulationError(SmallImpactError):
    """A simulated path produced NaN/Inf or blew up."""

    def __init__(self, msg, step=None, path=None):
        super().__init__(msg)
        self.step = step
        self.path = path


class StiffnessError(SimulationError):
    pass


class InsufficientHorizon(SmallImpactError):
    pass


class CeUndefined(SmallImpactError):
    pass


class NotProvided(SmallImpactError, NotImplementedError):
    """The requested closed form is not available."""


class ConfigError(SmallImpactError):
    pass
