"""Domain exceptions shared across the package."""


class CluegraphError(Exception):
    """Base class for all domain errors raised by this package."""


class SpanOutOfBounds(CluegraphError):
    """A character span does not fit inside the manual text."""


class RoleMismatch(CluegraphError):
    """An argument role was supplied for (or missing from) the wrong node kind."""


class KindConstraintViolated(CluegraphError):
    """An edge does not respect the endpoint-kind table for its relation."""


class DuplicateEdge(CluegraphError):
    """The exact (src, dst, kind) triple is already present."""


class NextCycle(CluegraphError):
    """Inserting this Next edge would close a cycle in a procedure chain."""


class UnknownNode(CluegraphError):
    """A node id does not exist in the graph."""


class FrozenGraph(CluegraphError):
    """Mutation attempted after the graph was frozen."""


class UnresolvedReference(CluegraphError):
    """An annotation refers to an entity that was never declared."""


class SpanMismatch(CluegraphError):
    """An annotated surface string differs from the manual text at its span."""


class EmptyProcedure(CluegraphError):
    """A procedure with no actions is not a procedure."""


class InvalidAnnotation(CluegraphError):
    """Structurally malformed annotation document."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(message)
        self.location = location


class DimensionMismatch(CluegraphError):
    """Vector or matrix dimensions do not line up."""


class GeometryMismatch(CluegraphError):
    """Inputs are inconsistent with the scorer's reshape/filter geometry."""


class EmptyGraph(CluegraphError):
    """Operation requires at least one candidate node."""


class EncoderMismatch(CluegraphError):
    """Embeddings were computed under a different encoder fingerprint."""


class DivergenceDetected(CluegraphError):
    """Training produced a non-finite loss; carries the last good state."""

    def __init__(self, message: str, params=None, trace=None):
        super().__init__(message)
        self.params = params
        self.trace = trace or []


class DuplicateManual(CluegraphError):
    """A manual with this id is already loaded."""
