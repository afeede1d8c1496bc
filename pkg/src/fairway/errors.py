"""Exception types shared across the toolkit."""


class FairwayError(Exception):
    """Base class for all toolkit errors."""


class DomainError(FairwayError, ValueError):
    """An input falls outside the mathematical domain of an operation."""


class MalformedTrackError(FairwayError, ValueError):
    """A GNSS track violates its structural invariants (spacing, ordering)."""


class DegenerateFitError(FairwayError, ValueError):
    """A regression problem is degenerate (zero variance, sign violation)."""


class InsufficientDataError(FairwayError, ValueError):
    """Too few samples to carry out a fit or estimate."""


class DegenerateClusteringError(FairwayError, ValueError):
    """Fewer distinct points than requested clusters."""


class NoFeasibleDensityError(DomainError):
    """The minimum-speed constraint cannot be met anywhere on the curve."""


class ParseError(FairwayError, ValueError):
    """A data file violates its schema; message carries file:line:column."""


class SchemaVersionError(ParseError):
    """A persisted model document has an unsupported schema version."""
