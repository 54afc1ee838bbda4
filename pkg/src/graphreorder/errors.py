"""Exception types raised across the package."""


class GraphError(Exception):
    """Base class for all errors raised by graphreorder."""


class ParseError(GraphError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class VertexRangeError(GraphError, ValueError):
    """A vertex id falls outside ``[0, num_vertices)``."""


class PermutationError(GraphError, ValueError):
    """A relabeling is not a bijection of the right length."""


class CapabilityError(GraphError):
    """The graph lacks arrays an operation needs (e.g. in-edges)."""


class ConsistencyError(GraphError, RuntimeError):
    """An internal invariant was violated."""


class NegativeCycleError(GraphError, ValueError):
    """Bellman-Ford found a negative cycle reachable from the source."""
