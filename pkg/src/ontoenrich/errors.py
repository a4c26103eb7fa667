"""Exception hierarchy shared across the toolkit."""


class OntoEnrichError(Exception):
    """Base class for all toolkit errors."""


class TripleParseError(OntoEnrichError):
    """A triple file line could not be parsed; carries the line number."""

    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class EndpointError(OntoEnrichError):
    """A knowledge-graph endpoint failed after retries."""


class CurationError(OntoEnrichError):
    """A curation file contains an unusable row (e.g. unknown label token)."""


class CorpusError(OntoEnrichError):
    """Corpus extraction or assembly failed (e.g. missing anchor article)."""


class ParserFailure(OntoEnrichError):
    """The dependency-parser adapter could not parse a sentence."""


class ModelError(OntoEnrichError):
    """Model construction, training, or (de)serialization failed."""


class EmptyDocumentError(OntoEnrichError):
    """An ingested source yielded no usable text."""


class ConfigError(OntoEnrichError):
    """A run configuration is invalid (unknown key, bad value, missing path)."""


class MissingArtifactError(ConfigError):
    """An upstream artifact is missing; names the subcommand that produces it."""

    def __init__(self, path: str, producer: str):
        super().__init__(
            f"missing artifact {path!r}: run the `{producer}` subcommand first"
        )
        self.artifact_path = path
        self.producer = producer


class DecisionConflictError(OntoEnrichError):
    """A review decision targeted an entry that is already decided."""
