"""Exception types shared across the policy generation engine."""

from __future__ import annotations


class PolicygenError(Exception):
    """Base class for all engine errors."""


# --- policy representation -------------------------------------------------

class PolicySyntaxError(PolicygenError):
    """Serialized policy text is not well-formed JSON."""


class SchemaError(PolicygenError):
    """Rule object violates the six-key schema (missing/extra key, bad value)."""


class EmptyPolicyError(PolicygenError):
    """A policy with zero rules is never valid."""


class IncompleteRuleError(PolicygenError):
    """Export requires subject, action, and resource on every rule."""


# --- preprocessing ---------------------------------------------------------

class EmptyDocumentError(PolicygenError):
    """Document text is empty after whitespace strip."""


class ResolverUnavailable(PolicygenError):
    """Remote coreference resolver could not be reached."""


# --- clients ---------------------------------------------------------------

class ClientError(PolicygenError):
    """A model client call failed (network, timeout, refusal, bad payload)."""


class EmptyInputError(PolicygenError):
    """Operation requires non-empty input text."""


# --- retrieval -------------------------------------------------------------

class DimensionMismatch(PolicygenError):
    """Vector dimension differs from the store dimension."""


class ZeroNorm(PolicygenError):
    """Cosine similarity is undefined for zero-norm vectors."""


class ZeroVectorError(PolicygenError):
    """Embedder produced an all-zero vector."""


# --- generation ------------------------------------------------------------

class ParseFailure(PolicygenError):
    """Model output contains no well-formed rule array."""


# --- datasets & metrics ----------------------------------------------------

class FormatError(PolicygenError):
    """Dataset record violates the declared file format."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class RatioError(PolicygenError):
    """Split ratios must be non-negative and sum to 1."""


class PairingError(PolicygenError):
    """Gold and predicted corpora are not keyed by the same sentence ids."""


class LengthMismatch(PolicygenError):
    """Aligned label lists must have equal length."""


# --- pipeline / review -----------------------------------------------------

class PreconditionError(PolicygenError):
    """Operation called outside its declared precondition."""


class NotFound(PolicygenError):
    """No item with the requested id."""


class IllegalTransition(PolicygenError):
    """Review item state machine rejected the transition."""


class RevisionConflict(PolicygenError):
    """Stale revision token; someone else changed the item first."""
