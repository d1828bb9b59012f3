"""Exception hierarchy shared by all modules."""


class RwreError(Exception):
    """Base class for errors raised by this package."""


class InvalidGeneratorError(RwreError, ValueError):
    pass


class RootHasNoParentError(RwreError, ValueError):
    pass


class InvalidParameterError(RwreError, ValueError):
    pass


class InfeasibleEllipticityError(InvalidParameterError):
    """The ellipticity floor cannot be met: need epsilon < 1/d."""


class EllipticityViolationError(InvalidParameterError):
    """A transition probability is below the ellipticity floor (or zero)."""


class InvalidMarginError(InvalidParameterError):
    pass


class InsufficientBlocksError(RwreError):
    """Not enough confirmed regeneration blocks for the requested estimate."""


class TooLargePsiError(InvalidParameterError):
    pass


class AbsorbingStructureError(RwreError):
    """Some interior state of a finite chain cannot reach the absorbing set."""


class ChainTooLargeError(InvalidParameterError):
    pass


class ConfigError(RwreError):
    """Invalid run configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))
