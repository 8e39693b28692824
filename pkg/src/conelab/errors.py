"""Exception types raised across conelab."""


class ConelabError(ValueError):
    """Base class for argument and precondition failures."""


class DomainError(ConelabError):
    """Grid too small, points outside the box, or mismatched grids."""


class EmptyRegionError(ConelabError):
    pass


class DegeneracyError(ConelabError):
    """A formula was evaluated where it is undefined (zero gradient with gamma > 0)."""


class PreconditionError(ConelabError):
    pass


class ConfigError(ConelabError):
    pass
