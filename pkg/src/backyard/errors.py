"""Exception types shared by every structure in the package."""


class BackyardError(Exception):
    """Base class for all package errors."""


class ParameterError(BackyardError, ValueError):
    """A constructor or derivation received parameters outside the supported range."""


class DomainError(BackyardError, ValueError):
    """An element lies outside the universe a function or permutation is defined on."""


class IgnoredElement(DomainError):
    """The element falls in the truncated tail of a universe.

    Callers route such elements to a side store instead of the main tables.
    """


class DuplicateError(BackyardError, ValueError):
    """An identity that is already stored was inserted into a bin."""


class CapacityError(BackyardError):
    """The structure already holds its declared maximum number of elements."""


class StructuralFailure(BackyardError, RuntimeError):
    """A low-probability failure event, such as a de-amortization queue overflowing.

    After this is raised the owning structure is marked failed and rejects
    further operations; rebuilding is the caller's decision.
    """
