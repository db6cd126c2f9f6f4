"""Exception hierarchy for the whole package.

Every typed failure the library can surface derives from TryFitError so
callers (pipeline, REST layer, CLI) can map errors uniformly.
"""

from __future__ import annotations


class TryFitError(Exception):
    """Base class for all package errors."""


# --- prompt template engine ---

class TemplateError(TryFitError):
    pass


class DuplicateFunction(TemplateError):
    """A function name was registered twice."""


class EmptyInstruction(TemplateError):
    """The user instruction is blank after trimming."""


class TemplateInvalid(TemplateError):
    """A template file violates the template schema or its invariants."""


# --- response parsing ---

class ParseError(TryFitError):
    """Base class for structured-response parse failures."""


class NoStructuredBlock(ParseError):
    """No balanced ``{...}`` block found in the model output."""


class MalformedBlock(ParseError):
    """A block was found but could not be decoded into the expected shape."""


class UnknownFunction(ParseError):
    """The response names a function outside the closed set."""

    def __init__(self, name: str):
        super().__init__(f"unknown function: {name!r}")
        self.name = name


class MissingDetails(ParseError):
    """The response omits the details field or leaves it blank."""


class ItemRequired(ParseError):
    """A full outfit change was requested without a clothing item."""


# --- vectors, matching, imaging ---

class ZeroVector(TryFitError):
    """A vector with zero norm cannot be normalized."""


class DimensionMismatch(TryFitError):
    """Operands disagree in vector dimension or raster shape."""


class EmptyCatalog(TryFitError):
    """No garments remain after filtering; there is nothing to match."""


class TooSmall(TryFitError):
    """Image too small for the windowed metric."""


class ItemUnspecified(TryFitError):
    """A mask was requested for an unspecified clothing item."""


# --- backends ---

class BackendError(TryFitError):
    """Base class for model-backend failures; carries the backend kind."""

    def __init__(self, message: str, kind: str | None = None):
        super().__init__(message)
        self.kind = kind


class BackendUnavailable(BackendError):
    """The backend endpoint could not be reached after all retries."""


class BackendTimeout(BackendError):
    """The backend did not answer within the configured timeout."""


class ProtocolError(BackendError):
    """The backend answered with a malformed or undecodable payload."""


class NoRegionFound(BackendError):
    """The segmenter produced no editable region for the instruction."""


# --- catalog store ---

class CatalogError(TryFitError):
    pass


class MissingImage(CatalogError):
    """A captions entry references an image file that does not exist."""


class CaptionParseError(CatalogError):
    """A captions file line is malformed."""


class IoError(CatalogError):
    """Catalog file could not be read or written."""


class CorruptIndex(CatalogError):
    """Catalog files fail checksum or structural validation."""


class VersionMismatch(CatalogError):
    """Catalog file written by a newer, unsupported format version."""


# --- sessions ---

class SessionNotFound(TryFitError):
    """The referenced session id does not exist."""


class NoPersonImage(TryFitError):
    """A message arrived before any person image was uploaded."""
