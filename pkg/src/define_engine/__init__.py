"""Decision engine over earnings-call factor profiles.

Pipeline: transcripts are graded into probabilistic factor profiles, labeled
transcript pairs fit a pairwise salience model over the 33 outcome items,
profiles are scored and bucketed into five-way investment decisions, and
divergence-based retrieval supplies analogous past cases for
example-grounded decisions.
"""

__version__ = "0.1.0"

from .labeler import DecisionLabel
from .schema import (
    FactorProfile,
    FactorSchema,
    LikelihoodGrade,
    OutcomeId,
    default_schema,
)

__all__ = [
    "DecisionLabel",
    "FactorProfile",
    "FactorSchema",
    "LikelihoodGrade",
    "OutcomeId",
    "default_schema",
    "__version__",
]
