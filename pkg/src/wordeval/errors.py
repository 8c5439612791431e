"""Exception types shared across the toolkit."""


class WordevalError(Exception):
    """Base class for all toolkit errors."""


class FormatError(WordevalError):
    """A file does not conform to its documented format."""


class EncodingError(FormatError):
    """Input bytes are not valid UTF-8."""


class EmptyInputError(WordevalError):
    """An operation received an empty corpus or record set."""


class DegenerateInputError(WordevalError):
    """Input is non-empty but too small or malformed to be meaningful."""


class CoverageError(WordevalError):
    """A word cannot be segmented with the loaded subword vocabulary."""


class TransportError(WordevalError):
    """A remote predictor connection failed (timeout, dropped session)."""


class SessionClosedError(TransportError):
    """The remote session is gone; no further requests can succeed."""


class ProtocolError(WordevalError):
    """A remote peer sent a line that violates the wire protocol."""


class ConfigurationError(WordevalError):
    """Inconsistent configuration, e.g. vocabulary handshake mismatch."""


class NumericError(WordevalError):
    """A probability or log-probability is outside its legal range."""


class DegenerateTableError(WordevalError):
    """A contingency table has a zero marginal and cannot be tested."""
