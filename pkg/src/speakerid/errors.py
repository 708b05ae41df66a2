"""Exception types and structured event logging."""

import logging


class SpeakerIdError(Exception):
    """Base class for all errors raised by this package."""


class IoError(SpeakerIdError):
    """A file could not be read or written."""


class EncodingError(SpeakerIdError):
    """A file is empty or not decodable as UTF-8."""


class EmptyBody(SpeakerIdError):
    """Boilerplate markers were found but enclose no text."""


class ConfigError(SpeakerIdError):
    """Invalid configuration value or file."""


class BudgetImpossible(SpeakerIdError):
    """The irreducible parts of an input exceed the token budget."""


class ParseError(SpeakerIdError):
    """A benchmark row could not be parsed."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class ValidationError(SpeakerIdError):
    """A benchmark row violates a record invariant."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class UnsupportedLanguage(SpeakerIdError):
    """The rule pipeline has no rules for the requested language."""


def log_event(logger, event, level=logging.INFO, **fields):
    """Emit one structured ``event=Name key=value ...`` log line."""
    parts = [f"event={event}"]
    parts.extend(f"{k}={v!r}" if isinstance(v, str) else f"{k}={v}" for k, v in fields.items())
    logger.log(level, " ".join(parts))
