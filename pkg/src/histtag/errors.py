"""Exception types shared across the package."""


class HisttagError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(HisttagError):
    """A text file (CoNLL data, word vectors, vocabulary) could not be parsed.

    Carries the file path and 1-based line number where parsing failed.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class DecodeError(HisttagError):
    """A byte stream is not valid UTF-8. ``byte_offset`` points at the bad byte."""

    def __init__(self, message, path=None, byte_offset=None):
        self.path = path
        self.byte_offset = byte_offset
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class SchemeError(HisttagError):
    """A tag or tag sequence violates its declared tagging scheme.

    ``position`` is the 0-based token index of the offending tag, when known.
    """

    def __init__(self, message, position=None):
        self.position = position
        super().__init__(message)


class EmptyCorpusError(HisttagError):
    """An operation that needs data received an empty corpus or file."""


class ConfigError(HisttagError):
    """Invalid configuration: bad parameter values or inconsistent inputs."""


class ModelFormatError(HisttagError):
    """A model file is truncated, version-incompatible, or inconsistent."""


class StructureMismatchError(HisttagError):
    """Two corpora that must align sentence-by-sentence do not.

    ``sentence_index`` identifies the first divergent sentence.
    """

    def __init__(self, message, sentence_index=None):
        self.sentence_index = sentence_index
        super().__init__(message)
