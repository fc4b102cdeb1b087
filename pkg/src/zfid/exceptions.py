"""Exception hierarchy shared by the graph, chain and reconstruction layers."""


class IdentificationError(ValueError):
    """Base class for all refusals raised by :mod:`zfid`."""


class MatrixValidationError(IdentificationError):
    """A matrix violates the stochastic / rate-matrix contract."""


class NotCombinatoriallySymmetricError(IdentificationError):
    """The non-zero pattern of a matrix is not symmetric."""


class NotZeroForcingError(IdentificationError):
    """The observed set does not force the whole graph.

    Attributes
    ----------
    closure : frozenset of int
        The stalled blue set reached by the color-change rule.
    """

    def __init__(self, closure, message=None):
        self.closure = frozenset(closure)
        if message is None:
            message = f"not forcing; closure = {format_vertex_set(self.closure)}"
        super().__init__(message)


class InsufficientHorizonError(IdentificationError):
    """The moment table does not contain enough matrix powers."""

    def __init__(self, required, got):
        self.required = required
        self.got = got
        super().__init__(f"need N >= {required}, got {got}")


class DegenerateChainError(IdentificationError):
    """A divisor in the elimination step vanished (pattern violation or degenerate chain)."""


class HypothesisError(IdentificationError):
    """The forcing vertex has more than one unknown neighbour."""


class SearchBoundError(IdentificationError):
    """Exhaustive minimum forcing set search refused because the graph is too large."""


class HitTimeoutError(IdentificationError):
    """The sampler waited too long for an anchor state (likely reducible chain)."""


def format_vertex_set(vertices):
    return "{" + ",".join(str(v) for v in sorted(vertices)) + "}"
