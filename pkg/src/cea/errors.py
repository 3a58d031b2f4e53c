"""Exception hierarchy shared across the package.

Every domain error derives from :class:`CeaError` so callers can catch the
whole family with one clause; the CLI maps subfamilies to exit codes.
"""


class CeaError(Exception):
    """Base class for all errors raised by this package."""


# -- core types -------------------------------------------------------------

class IndexOutOfRange(CeaError):
    """A per-position candidate index exceeds that position's candidate count."""


class DimensionMismatch(CeaError):
    """A distribution and a candidate space disagree on shape."""


class InvalidConfig(CeaError):
    """An attack configuration violates its invariants."""


# -- optimizer --------------------------------------------------------------

class EmptyScores(CeaError):
    """Threshold update was asked to operate on an empty score list."""


class EmptyEliteSet(CeaError):
    """No sample reached the elite threshold during a distribution update."""


class SpaceTooLarge(CeaError):
    """A candidate space exceeds the exhaustive-enumeration cap."""


# -- objectives -------------------------------------------------------------

class InvalidDistribution(CeaError):
    """A class-probability vector does not sum to one."""


class EmptyReference(CeaError):
    """A BLEU-style measure received an empty reference."""


# -- oracle -----------------------------------------------------------------

class BudgetExhausted(CeaError):
    """The query budget would be exceeded by the requested evaluations."""


class RemoteProtocolError(CeaError):
    """A remote victim returned a malformed or failing response."""


class ModelNotLoaded(CeaError):
    """The requested query pathway has no configured backend."""


class SingleClassDataset(CeaError):
    """Victim training data contains fewer than two classes."""


class EmptyDataset(CeaError):
    """Victim training data contains no records."""


# -- lexicon ----------------------------------------------------------------

class MalformedLexicon(CeaError):
    """A candidate-lexicon file does not parse or violates its schema."""


class OriginalMismatch(CeaError):
    """A lexicon entry's original token disagrees with the document."""


# -- metrics ----------------------------------------------------------------

class LengthMismatch(CeaError):
    """Token sequences that must be equal-length are not."""


class NoEmbeddableTokens(CeaError):
    """Neither text contains a token present in the embedding table."""


class EmptyResults(CeaError):
    """Aggregation was asked to summarize an empty result list."""


# -- cli --------------------------------------------------------------------

class ConfigError(CeaError):
    """A run configuration file is missing, malformed, or inconsistent."""


class MalformedResults(CeaError):
    """A results file cannot be parsed into per-example records."""
