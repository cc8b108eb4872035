"""Exception types shared across the package.

The CLI maps these onto exit codes: ValidationError (and subclasses) exit
with 1, everything else with 2.
"""


class PropminerError(Exception):
    """Base class for all package errors."""


class ValidationError(PropminerError):
    """Bad user input detectable up front: missing paths, bad config values."""


class ParseError(ValidationError):
    """Malformed input file; message carries the file and line number."""

    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class ModelFormatError(PropminerError):
    """A model file is corrupt or of an unexpected format."""
