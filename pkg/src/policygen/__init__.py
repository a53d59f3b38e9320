"""Natural language to structured access control policies.

The pipeline preprocesses a policy document, finds the sentences that
express access control requirements, generates a structured policy for
each one with retrieval-augmented prompting, aligns the result to a known
entity vocabulary, verifies it, and iteratively refines anything the
verifier flags.  Policies that never verify land in a human review queue.
"""

from .errors import PolicygenError
from .policy import (
    AccessControlPolicy,
    AccessControlRule,
    Provenance,
    ReconstructionTemplate,
    normalize_entity,
    parse_policy,
    reconstruct_nl,
    serialize_policy,
)
from .verify import VerdictClass, oracle_verify

__all__ = [
    "AccessControlPolicy",
    "AccessControlRule",
    "PolicygenError",
    "Provenance",
    "ReconstructionTemplate",
    "VerdictClass",
    "normalize_entity",
    "oracle_verify",
    "parse_policy",
    "reconstruct_nl",
    "serialize_policy",
]

__version__ = "0.1.0"
