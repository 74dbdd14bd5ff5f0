"""Exception hierarchy shared across the package."""


class MinklabError(Exception):
    """Base class for all errors raised by minklab."""


class ConfigurationError(MinklabError, ValueError):
    """Invalid sizes, parameters or combinations thereof."""


class DomainError(MinklabError, ValueError):
    """Argument outside the domain where a formula is defined."""


class NonConvex(MinklabError):
    """The radii matrix u_ij + u*delta_ij is not positive definite somewhere.

    ``node`` is the (i, j) grid index of the first offending node.
    """

    def __init__(self, node, min_eigenvalue):
        self.node = tuple(int(k) for k in node)
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(
            f"radii matrix not positive definite at node {self.node} "
            f"(min eigenvalue {self.min_eigenvalue:.3e})"
        )


class UnboundedBody(MinklabError):
    """Half-space directions do not positively span R^3."""


class StepFailure(MinklabError):
    """A solver step could not produce a convex iterate."""


class LinearSolveFailure(MinklabError):
    """The linearized system could not be solved."""


class DegenerateT(MinklabError, ZeroDivisionError):
    """The denominator of the t-ratio vanishes."""


class FieldFormatError(MinklabError, ValueError):
    """Malformed support-field or polytope file."""
