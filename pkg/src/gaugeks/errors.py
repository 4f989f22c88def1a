"""Exception hierarchy shared by all engine modules."""


class GaugeKSError(Exception):
    """Base class for every error raised by this package."""


class OverlappingComponents(GaugeKSError):
    """Two input intervals share more than a merge boundary."""


class NotContained(GaugeKSError):
    """A set was required to lie inside a hull and does not."""


class SetOutsideDomain(GaugeKSError):
    """An elementary set reaches outside the ambient function domain."""


class DomainMismatch(GaugeKSError):
    """Two functions do not share the same ambient interval."""


class UnsupportedClass(GaugeKSError):
    """Data outside the exact closed-form class (transcendental pieces)."""


class NoOneSidedLimit(GaugeKSError):
    """A one-sided limit was needed at a point where none exists."""


class NoConvergence(GaugeKSError):
    """Iterative refinement hit its cap without stabilising."""


class GeneratorOverlap(GaugeKSError):
    """A cover generator produced elements that are not pairwise disjoint."""


class TailUnbounded(GaugeKSError):
    """No usable bound is available for a truncated series tail."""


class InsufficientData(GaugeKSError):
    """Fewer integrals are computable than an identity needs."""


class UnknownName(GaugeKSError):
    """A task referenced a function/set/gauge that was never defined."""


class ParseError(GaugeKSError):
    """Malformed literal or problem document."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
