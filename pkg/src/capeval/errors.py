"""Exception types shared across the toolkit."""

from __future__ import annotations


class CapevalError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(CapevalError):
    """Invalid configuration or arguments for an operation."""


class EmptySentenceError(CapevalError):
    """Tokenization of a caption produced no tokens."""


class MissingMetricError(CapevalError):
    """An aggregate was requested but a component metric is absent."""

    def __init__(self, missing, detail: str = ""):
        self.missing = missing
        name = getattr(missing, "name", str(missing))
        message = f"missing component metric: {name}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class FormatError(CapevalError):
    """Malformed input file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateTokenError(FormatError):
    """A token key occurs more than once in an embedding or feature file."""

    def __init__(self, token: str, line: int | None = None):
        self.token = token
        super().__init__(f"duplicate key {token!r}", line=line)


class AllOovError(CapevalError):
    """Every token of a sentence is missing from the embedding table."""

    def __init__(self, tokens):
        self.tokens = tuple(tokens)
        super().__init__("all tokens out of vocabulary: " + " ".join(self.tokens))


class ZeroVectorError(CapevalError):
    """Cosine similarity is undefined for a zero vector."""


class KeyMismatchError(CapevalError):
    """Two rank vectors cover different model sets."""
