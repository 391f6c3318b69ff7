"""Exception types raised by the engine and the radar application."""


class MhtError(Exception):
    """Base class for all engine errors."""


class UnknownIdError(MhtError):
    """A requested event or fact id is not live in any cluster.

    Almost always signals a bookkeeping bug in the application: it asked
    for information the engine no longer holds.
    """


class MismatchedClonesError(MhtError):
    """Clones of one source cluster disagree on constraint count."""


class LastLeafError(MhtError):
    """Attempt to remove the only leaf of a cluster.

    A cluster must always retain one global interpretation; delete the
    whole cluster instead.
    """


class EmptyGenerationError(MhtError):
    """The application generator returned zero hypotheses for a leaf."""


class ZeroMassError(MhtError):
    """All hypothesis probabilities for a leaf are zero, or a removal left
    the surviving leaves with zero total probability."""


class SizeGuardError(MhtError):
    """The oracle's global hypothesis set exceeded its configured bound."""


class SingularCovarianceError(MhtError):
    """An innovation covariance is not symmetric positive-definite."""
