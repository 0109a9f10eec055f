"""Exception hierarchy shared by all modules."""


class DefineError(Exception):
    """Base class for every error raised by this package."""


# --- schema / profiles ---------------------------------------------------


class UnknownGrade(DefineError):
    """A likelihood token is not one of the six known grades."""


class ArityMismatch(DefineError):
    """A grade or probability list disagrees with the factor's outcome count."""


class SchemaMismatch(DefineError):
    """Two objects were built against different factor schemas."""


class ValidationError(DefineError):
    """A value violates a structural invariant."""


# --- ingest ---------------------------------------------------------------


class ParseError(DefineError):
    """An input file could not be parsed."""


class SchemaViolation(DefineError):
    """A parsed document is missing or misusing a required field."""


class NonPositivePrice(DefineError):
    """A price series contains a close <= 0."""


class DuplicateDate(DefineError):
    """A dated series contains the same date twice."""


# --- labeler ----------------------------------------------------------------


class InsufficientHistory(DefineError):
    """The price series does not cover the requested label horizon."""


class UnknownAction(DefineError):
    """A decision token is not one of the five-way labels."""


# --- extractor ---------------------------------------------------------------


class MalformedJSON(DefineError):
    """A model response is not valid JSON."""


class MalformedResponse(DefineError):
    """A model response parsed as JSON but lacks the required keys."""


class MissingFactor(DefineError):
    """A profile response does not cover a schema factor."""


class MissingOutcome(DefineError):
    """A profile response does not grade one of a factor's outcomes."""


class EmptySeries(DefineError):
    """A history prompt was requested for an empty (or fully truncated) series."""


class TemplateError(DefineError):
    """A prompt template is missing a required field."""


class MissingFixture(DefineError):
    """Fixture-mode completion had no recorded response for an exchange."""


class MissingApiKey(DefineError):
    """Live-mode completion requires an API key that is not configured."""


class TransportError(DefineError):
    """A live completion failed at the HTTP layer (after retries)."""

    def __init__(self, message: str, attempts: int = 1, status: int | None = None):
        super().__init__(message)
        self.attempts = attempts
        self.status = status


class IdxOutOfRange(DefineError):
    """An analogical response referenced an example index outside [1, K]."""


# --- btmodel ------------------------------------------------------------------


class MissingProfile(DefineError):
    """A preference pair references a profile id that is not in the store."""


class NotConverged(DefineError):
    """The strength fit hit the iteration cap before reaching tolerance."""

    def __init__(self, message: str, last_p=None, max_change: float = float("nan"),
                 iterations: int = 0):
        super().__init__(message)
        self.last_p = last_p
        self.max_change = max_change
        self.iterations = iterations


class DegenerateMatrix(DefineError):
    """The comparison matrix carries no usable pairwise information."""


# --- decide -----------------------------------------------------------------


class CountMismatch(DefineError):
    """Quantile target counts do not sum to the number of scored profiles."""


class NonMonotoneCutpoints(DefineError):
    """Threshold cutpoints are not strictly ascending."""


# --- analogy -----------------------------------------------------------------


class EmptyCorpus(DefineError):
    """Retrieval was asked to search an empty candidate pool."""


# --- evalx --------------------------------------------------------------------


class IdMismatch(DefineError):
    """Prediction and gold maps do not cover the same ids."""
