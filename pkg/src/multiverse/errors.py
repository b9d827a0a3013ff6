"""Exception types shared across the pipeline."""


class MultiverseError(Exception):
    """Base class for all package errors."""


class ConfigError(MultiverseError):
    """Invalid or incomplete pipeline configuration."""


# corpus

class UnreadableFile(MultiverseError):
    pass


class SchemaViolation(MultiverseError):
    """A dataset row is missing or malforms a required field."""

    def __init__(self, row: int, field: str, message: str = ""):
        self.row = row
        self.field = field
        super().__init__(message or f"row {row}: bad field {field!r}")


class TooSmall(MultiverseError):
    pass


class MissingSnapshot(MultiverseError):
    def __init__(self, query_key):
        self.query_key = query_key
        super().__init__(f"no snapshot stored for {query_key!r}")


# retrieval

class ExtractionFailed(MultiverseError):
    pass


class NonTextMedia(MultiverseError):
    """The document is not text; scorers treat it as similarity 0."""


class TranslatorUnavailable(MultiverseError):
    pass


class UnsupportedLanguage(MultiverseError):
    pass


class AllProvidersFailed(MultiverseError):
    """Every requested language failed during evidence retrieval."""


# similarity

class ProviderUnavailable(MultiverseError):
    pass


class EmptyText(MultiverseError):
    pass


class DimMismatch(MultiverseError):
    pass


class ZeroVector(MultiverseError):
    pass


class DegenerateGold(MultiverseError):
    """Threshold tuning needs both gold classes present."""


# credibility

class UnparseableUrl(MultiverseError):
    pass


# features

class DuplicatePoint(MultiverseError):
    def __init__(self, language: str, position: int):
        self.language = language
        self.position = position
        super().__init__(f"duplicate evidence point for ({language}, {position})")


class NotFitted(MultiverseError):
    pass


class MissingEvidence(MultiverseError):
    def __init__(self, article_id: str):
        self.article_id = article_id
        super().__init__(f"no evidence stored for article {article_id!r}")


# model

class DegenerateLabels(MultiverseError):
    pass


class NonFiniteFeature(MultiverseError):
    pass


class SchemaMismatch(MultiverseError):
    pass


class TooFewSamples(MultiverseError):
    pass


class UntrainedModel(MultiverseError):
    pass


# study

class InfeasiblePlan(MultiverseError):
    pass


class NoRecords(MultiverseError):
    pass


class InsufficientData(MultiverseError):
    pass


class MissingGold(MultiverseError):
    pass


# report

class NoEvidence(MultiverseError):
    pass
