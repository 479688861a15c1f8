"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`MetricFramesError`, which is itself a ``ValueError`` so callers that
only care about "bad input" can keep catching that.
"""


class MetricFramesError(ValueError):
    """Base class. ``witness`` carries the offending indices when known."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class StructuralError(MetricFramesError):
    """Malformed input: wrong shape, NaN/inf entries, mismatched lengths."""


class MetricAxiomError(MetricFramesError):
    """A distance matrix fails one of the metric axioms."""

    def __init__(self, message, report=None):
        witness = None
        if report is not None and report.violations:
            witness = report.violations[0].indices
        super().__init__(message, witness)
        self.report = report


class NormalizationError(MetricFramesError):
    """A map expected to vanish at the base point does not."""


class InfeasibleExtensionError(MetricFramesError):
    """Requested Lipschitz constant is below that of the partial data."""


class DomainError(MetricFramesError):
    """Parameters outside the domain where a construction is valid."""


class HypothesisError(MetricFramesError):
    """A theorem hypothesis fails on the supplied data."""


class ContractionError(MetricFramesError):
    """Fixed-point iteration cannot be applied (q >= 1) or did not converge."""


class SolverError(MetricFramesError):
    """A numerical solver failed; ``bounds`` holds the best (lower, upper) pair seen."""

    def __init__(self, message, bounds=None):
        super().__init__(message)
        self.bounds = bounds
