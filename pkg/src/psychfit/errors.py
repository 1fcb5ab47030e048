"""Exception hierarchy for psychfit."""


class PsychfitError(Exception):
    """Base class for all psychfit errors."""


class MalformedInput(PsychfitError):
    """Input file or table violates the expected format."""


class MalformedCell(MalformedInput):
    """A cell value is outside its allowed domain."""


class DuplicateId(MalformedInput):
    """Examinee or item identifiers are not unique."""


class UnknownItem(MalformedInput):
    """Raw responses reference an item missing from the answer key."""


class MissingCell(MalformedInput):
    """A response cell is empty; incomplete rows are rejected, not imputed."""


class EmptyMatrix(MalformedInput):
    """No examinees or fewer than two items."""


class TooFewRows(MalformedInput):
    """Score table has fewer than three rows."""


class NonFinite(MalformedInput):
    """A numeric cell is NaN or infinite."""


class DegenerateColumn(PsychfitError):
    """Column has zero variance and cannot be standardized."""


class DegenerateTest(PsychfitError):
    """Total score has zero variance; alpha is undefined."""


class DegenerateItem(PsychfitError):
    """Item column is all-correct or all-incorrect; IRT parameters diverge."""


class InvalidFraction(PsychfitError):
    """Upper/lower group fraction outside (0, 0.5]."""


class UndefinedPair(PsychfitError):
    """Pairwise statistic undefined (zero margin or constant residuals)."""


class NonConvergence(PsychfitError):
    """Iterative fit failed to converge within its iteration cap."""


class NonNested(PsychfitError):
    """Likelihood-ratio test requested for a non-nested model pair."""


class CollinearPredictors(PsychfitError):
    """Design matrix is rank deficient after standardization."""


class ItemFitUndefined(PsychfitError):
    """Too few rest-score groups remain for an item fit statistic."""


class NoModels(PsychfitError):
    """Pipeline invoked with an empty model list."""
