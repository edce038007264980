"""Exception hierarchy for latentrank."""


class LatentRankError(Exception):
    """Base class for all errors raised by this package."""


class EmptySelection(LatentRankError, ValueError):
    pass


class IndexOutOfRange(LatentRankError, IndexError):
    pass


class InvalidAxes(LatentRankError, ValueError):
    pass


class ShapeMismatch(LatentRankError, ValueError):
    pass


class NonNegativityViolation(LatentRankError, ValueError):
    pass


class RankOutOfRange(LatentRankError, ValueError):
    pass


class ZeroSamples(LatentRankError, ValueError):
    pass


class TooFewAxes(LatentRankError, ValueError):
    pass


class UnknownNode(LatentRankError, KeyError):
    pass


class OverlappingSets(LatentRankError, ValueError):
    pass


class CyclicGraph(LatentRankError, ValueError):
    pass


class NoSeparatorFound(LatentRankError):
    """No separating set within the configured size bound.

    ``support`` and ``witness`` carry the all-other-variables fallback.
    """

    def __init__(self, message, support=None, witness=None):
        super().__init__(message)
        self.support = support
        self.witness = witness


class MissingSepset(LatentRankError, KeyError):
    pass


class SupportViolation(LatentRankError, ValueError):
    pass


class DegenerateModel(LatentRankError):
    """Estimated latent support is 1: the data carry no latent structure."""


class Untestable(LatentRankError):
    """A latent CI query cannot be decided by a tensor-rank test."""


class NodeMismatch(LatentRankError, ValueError):
    pass
