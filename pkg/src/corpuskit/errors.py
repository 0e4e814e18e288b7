"""Exception types shared across the toolkit."""


class CorpusKitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(CorpusKitError):
    """Invalid pipeline or subcommand configuration."""


class MalformedRecord(CorpusKitError):
    """A serialized record that cannot be parsed into a Document."""


class InvalidEncoding(MalformedRecord):
    """Input bytes are not valid UTF-8."""


class UnreadableInput(CorpusKitError):
    """An input file or directory cannot be read."""


class InsufficientData(CorpusKitError):
    """Not enough sample text to train a language profile."""


class EmptyText(CorpusKitError):
    """Text is empty after whitespace trimming."""


class NoSentences(CorpusKitError):
    """Operation requires at least one sentence."""


class EmptyDocument(CorpusKitError):
    """Document has no tokens."""


class MalformedEvalFile(CorpusKitError):
    """An evaluation-set file does not parse as any supported format."""


class TokenizerFileError(CorpusKitError):
    """A vocabulary or merges file violates its format contract."""


class MissingBaseToken(CorpusKitError):
    """A non-byte-level vocabulary lacks a base character of the input."""


class MissingPrediction(CorpusKitError):
    """A gold example id has no prediction."""


class UnknownId(CorpusKitError):
    """A prediction id does not occur in the gold set."""


class ZeroVariance(CorpusKitError):
    """A score vector is constant where variance is required."""


class LengthMismatch(CorpusKitError):
    """Aligned sequences have different lengths."""


class InvalidTag(CorpusKitError):
    """A tag is not valid IOB (``O``, ``B-TYPE`` or ``I-TYPE``)."""


class EmptyAfterFilter(CorpusKitError):
    """No examples survive the label-frequency filter."""


class SizeTooLarge(CorpusKitError):
    """Requested subsample exceeds the available examples."""


class NotEnoughDocuments(CorpusKitError):
    """Corpus has fewer documents than the requested splits."""
