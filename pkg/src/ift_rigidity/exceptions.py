"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`IftRigidityError`, so callers (and the CLI) can separate numerical
hypothesis failures from programming errors.
"""


class IftRigidityError(Exception):
    pass


# linear operators

class NonFiniteError(IftRigidityError, ValueError):
    pass


class YNotInImage(IftRigidityError):
    """The target vector is not in the numerical image of the operator."""


class ZeroOperator(IftRigidityError):
    """The operator has no nonzero singular value, so its open-mapping
    constant is undefined."""


class PerturbationTooLarge(IftRigidityError):
    pass


class NotSurjective(IftRigidityError):
    pass


class NotEmbedding(IftRigidityError):
    pass


class HalvingViolated(IftRigidityError):
    pass


class NotExact(IftRigidityError):
    pass


class ImageMismatch(IftRigidityError):
    pass


# implicit function iteration

class ChainConditionFailed(IftRigidityError):
    pass


class ExactnessFailed(IftRigidityError):
    pass


class NotInFiber(IftRigidityError):
    pass


class Diverged(IftRigidityError):
    pass


class MaxIterations(IftRigidityError):
    pass


class OutOfChart(IftRigidityError):
    pass


class NotInNeighborhood(OutOfChart):
    """Target lies outside the certified neighborhood W."""


# words and presentations

class WordError(IftRigidityError, ValueError):
    pass


class UnknownGenerator(WordError):
    pass


class MalformedExponent(WordError):
    pass


class ParseError(IftRigidityError, ValueError):
    """Input file error; carries the 1-based line number when known."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += str(source)
        if line is not None:
            where += f"{':' if where else 'line '}{line}"
        super().__init__(f"{where}: {message}" if where else message)


# Lie groups and representations

class OutOfChartDomain(IftRigidityError):
    """Matrix logarithm requested outside the series domain ||g - I|| < 1."""


class NotInvariant(IftRigidityError):
    pass


class InvalidRepresentation(IftRigidityError):
    pass


# cohomology and rigidity

class NotAComplex(IftRigidityError):
    pass


class NotRigid(IftRigidityError):
    pass


class RecoveryFailed(IftRigidityError):
    pass
