"""Exception hierarchy shared by every module of the package."""


class ProxytypeError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(ProxytypeError, ValueError):
    """Two points (or a point and a space) disagree on their dimension set."""


class KBError(ProxytypeError):
    """A knowledge-base or stimulus document failed to load.

    ``location`` is a JSON-pointer-like path to the offending node, e.g.
    ``concepts[2].exemplars[0].space``.
    """

    kind = "KBError"

    def __init__(self, message, location=""):
        self.message = message
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class ParseError(KBError):
    kind = "ParseError"


class SchemaError(KBError):
    kind = "SchemaError"


class KBReferenceError(KBError):
    """An id (space, element, concept) does not resolve."""

    kind = "ReferenceError"


class KBRangeError(KBError):
    """A coordinate, weight or threshold lies outside its admissible range."""

    kind = "RangeError"


class UnknownConcept(ProxytypeError, KeyError):
    pass


class TooLarge(ProxytypeError):
    """The exact coherence solver was asked to enumerate too many elements."""


class EmptyKnowledgeBase(ProxytypeError):
    """No prototype or exemplar is available to compare a stimulus against."""


class StaleResult(ProxytypeError):
    """A categorization result refers to a body the knowledge base no longer has."""
