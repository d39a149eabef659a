"""Exception types shared across the package."""


class LqhvError(Exception):
    """Base class for domain errors (CLI exit status 1)."""


class SizeLimitError(LqhvError):
    """A configured size cap (dimension, enumeration, LP) would be exceeded."""


class ShapeMismatchError(LqhvError):
    """Operator, state, or measurement dimensions are inconsistent."""


class HermiticityError(LqhvError):
    """Input expected to be Hermitian deviates beyond tolerance."""


class PurityError(LqhvError):
    """Input expected to be a pure state is mixed beyond tolerance."""


class TrivialFunctionalError(LqhvError):
    """A functional with zero deterministic extrema where a nontrivial one is required."""


class InputFormatError(LqhvError):
    """Malformed JSON input (CLI exit status 2)."""
