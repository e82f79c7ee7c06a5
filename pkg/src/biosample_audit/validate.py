"""Per-attribute classification and validity verdicts.

Each attribute occurrence is classified (dictionary name vs custom name) and
then judged by its group's rule:

* boolean — exactly ``true`` or ``false``, any capitalization;
* integer — optional sign plus decimal digits, within signed 64-bit range;
* value_set — membership in the attribute's value set (lenient matching is
  case-insensitive with collapsed whitespace; strict is byte-exact);
* ontology_term — exact match of the value against the designated ontology,
  via a resolver;
* term — candidate matching only, never judged;
* unit / pubmed_id / free_text — counted, not assessed.

Verdicts are pure functions of (value, spec, policy) for a fixed resolver
snapshot, so they are safe to evaluate from parallel workers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .dictionary import AttributeSpec, Dictionary, ValidationGroup
from .ingest import Attribute, SampleRecord
from .normalize import normalize_name, normalize_value
from .resolve import ResolverUnavailable, TermHit

__all__ = [
    "VALID",
    "INVALID",
    "NOT_ASSESSED",
    "MatchPolicy",
    "DEFAULT_POLICY",
    "Classification",
    "Verdict",
    "RecordReport",
    "is_filled_in",
    "classify_attribute",
    "validate_boolean",
    "validate_integer",
    "validate_value_set",
    "validate_ontology_term",
    "match_term_any",
    "validate_attribute",
    "validate_record",
]

VALID = "valid"
INVALID = "invalid"
NOT_ASSESSED = "not_assessed"

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1
_INTEGER_RE = re.compile(r"[+-]?[0-9]+", re.ASCII)
_BOOLEAN_WORDS = frozenset(("true", "false"))

DEFAULT_NULL_TOKENS = ("", "-", "--", "n/a", "na", "null", "none")


@dataclass(frozen=True)
class MatchPolicy:
    """Matching configuration: lenient matching is the default reading;
    strict requires byte-exact values. null_tokens are placeholder strings
    flagged (but never auto-invalidated) when seen as values."""

    value_set: str = "lenient"  # lenient | strict
    ontology: str = "lenient"  # lenient | strict
    null_tokens: tuple[str, ...] = DEFAULT_NULL_TOKENS

    def __post_init__(self):
        for name in ("value_set", "ontology"):
            if getattr(self, name) not in ("lenient", "strict"):
                raise ValueError(f"{name} policy must be 'lenient' or 'strict'")
        object.__setattr__(
            self, "_null_set", frozenset(t.strip().casefold() for t in self.null_tokens)
        )

    def is_null_like(self, value: str) -> bool:
        return value.strip().casefold() in self._null_set  # type: ignore[attr-defined]

    def signature(self) -> str:
        """Stable fingerprint used to keep tallies comparable."""
        tokens = ",".join(sorted(self._null_set))  # type: ignore[attr-defined]
        return f"value_set={self.value_set};ontology={self.ontology};null_tokens=[{tokens}]"


DEFAULT_POLICY = MatchPolicy()


@dataclass(frozen=True, slots=True)
class Classification:
    """Dictionary-vs-custom classification of one attribute name."""

    in_dictionary: bool
    normalized_name: str
    spec: Optional[AttributeSpec] = None


@dataclass(frozen=True, slots=True)
class Verdict:
    """Validation outcome for one attribute occurrence."""

    group: ValidationGroup
    filled_in: bool
    well_specified: str  # valid | invalid | not_assessed
    reason: str
    matched_term: Optional[TermHit] = None


@dataclass(frozen=True, slots=True)
class RecordReport:
    """Per-record validation outcome: one (attribute, classification,
    verdict) entry per attribute occurrence, in document order."""

    accession: str
    package_name: str
    owner_name: Optional[str]
    per_attribute: tuple[tuple[Attribute, Classification, Verdict], ...]
    custom_names: tuple[str, ...]


def is_filled_in(value: str) -> bool:
    """True iff the value is non-empty after trimming whitespace.
    Null-like placeholders count as filled-in; they are only flagged."""
    return bool(value.strip())


def _reason(base: str, null_flag: bool) -> str:
    return f"{base},null_like" if null_flag else base


def classify_attribute(dictionary: Dictionary, attr: Attribute) -> Classification:
    """Classify by harmonized name when present, else by normalized raw name."""
    name = attr.harmonized_name if attr.harmonized_name else attr.raw_name
    normalized = normalize_name(name)
    spec = dictionary.index.get(normalized)
    return Classification(in_dictionary=spec is not None, normalized_name=normalized, spec=spec)


def validate_boolean(value: str, policy: MatchPolicy = DEFAULT_POLICY) -> Verdict:
    """Valid iff the trimmed value case-folds to exactly true or false."""
    if not is_filled_in(value):
        return Verdict(ValidationGroup.BOOLEAN, False, NOT_ASSESSED, "empty")
    ok = value.strip().casefold() in _BOOLEAN_WORDS
    if ok:
        return Verdict(ValidationGroup.BOOLEAN, True, VALID, "ok")
    return Verdict(
        ValidationGroup.BOOLEAN, True, INVALID, _reason("not_boolean", policy.is_null_like(value))
    )


def validate_integer(value: str, policy: MatchPolicy = DEFAULT_POLICY) -> Verdict:
    """Valid iff the trimmed value is an optionally signed run of decimal
    digits that fits in a signed 64-bit integer. No separators, decimal
    points, or exponents."""
    if not is_filled_in(value):
        return Verdict(ValidationGroup.INTEGER, False, NOT_ASSESSED, "empty")
    trimmed = value.strip()
    null_flag = policy.is_null_like(value)
    if not _INTEGER_RE.fullmatch(trimmed):
        return Verdict(ValidationGroup.INTEGER, True, INVALID, _reason("not_integer", null_flag))
    if not INT64_MIN <= int(trimmed) <= INT64_MAX:
        return Verdict(ValidationGroup.INTEGER, True, INVALID, _reason("integer_out_of_range", null_flag))
    return Verdict(ValidationGroup.INTEGER, True, VALID, "ok")


def validate_value_set(value: str, spec: AttributeSpec, policy: MatchPolicy = DEFAULT_POLICY) -> Verdict:
    """Valid iff the value is a member of the spec's value set. Lenient
    matching compares normalized forms (underscores preserved); strict
    requires a byte-exact member."""
    if spec.group is not ValidationGroup.VALUE_SET:
        raise ValueError(f"attribute {spec.canonical_name!r} is not in the value_set group")
    if not is_filled_in(value):
        return Verdict(ValidationGroup.VALUE_SET, False, NOT_ASSESSED, "empty")
    members = spec.value_set or ()
    if policy.value_set == "strict":
        ok = value in members
    else:
        ok = normalize_value(value) in spec.normalized_value_set
    if ok:
        return Verdict(ValidationGroup.VALUE_SET, True, VALID, "ok")
    # Set members like "missing" are legitimate values, never null-flagged.
    null_flag = policy.is_null_like(value) and normalize_value(value) not in spec.normalized_value_set
    return Verdict(ValidationGroup.VALUE_SET, True, INVALID, _reason("not_in_value_set", null_flag))


def validate_ontology_term(
    value: str,
    spec: AttributeSpec,
    resolver,
    policy: MatchPolicy = DEFAULT_POLICY,
) -> Verdict:
    """Valid iff the value exactly matches a term (label or synonym) in the
    attribute's designated ontology. Resolver outages yield not_assessed,
    never invalid."""
    if spec.group is not ValidationGroup.ONTOLOGY_TERM or spec.binding is None:
        raise ValueError(f"attribute {spec.canonical_name!r} is not a bound ontology_term attribute")
    if not is_filled_in(value):
        return Verdict(ValidationGroup.ONTOLOGY_TERM, False, NOT_ASSESSED, "empty")
    null_flag = policy.is_null_like(value)
    if resolver is None:
        return Verdict(ValidationGroup.ONTOLOGY_TERM, True, NOT_ASSESSED, "resolver_unavailable")
    try:
        hit = resolver.resolve_exact(
            value, spec.binding.ontology_acronym, strict=policy.ontology == "strict"
        )
    except ResolverUnavailable:
        return Verdict(ValidationGroup.ONTOLOGY_TERM, True, NOT_ASSESSED, "resolver_unavailable")
    if hit is None:
        return Verdict(
            ValidationGroup.ONTOLOGY_TERM, True, INVALID, _reason("no_ontology_match", null_flag)
        )
    return Verdict(ValidationGroup.ONTOLOGY_TERM, True, VALID, "ok", matched_term=hit)


def match_term_any(value: str, resolver, limit: int = 5) -> list[TermHit]:
    """Best-effort candidate matches across all loaded ontologies. Produces
    candidates only, never a verdict."""
    if resolver is None or not value.strip():
        return []
    return resolver.search_any(value, limit)


def validate_attribute(
    dictionary: Dictionary,
    attr: Attribute,
    resolver=None,
    policy: MatchPolicy = DEFAULT_POLICY,
) -> tuple[Classification, Verdict]:
    """Classify one attribute occurrence and judge it by its group's rule."""
    cls = classify_attribute(dictionary, attr)
    return cls, _verdict_for(attr, cls, resolver, policy)


def _verdict_for(
    attr: Attribute,
    cls: Classification,
    resolver,
    policy: MatchPolicy,
) -> Verdict:
    if not cls.in_dictionary:
        return Verdict(ValidationGroup.FREE_TEXT, is_filled_in(attr.value), NOT_ASSESSED, "custom_name")
    spec = cls.spec
    assert spec is not None
    group = spec.group
    if group is ValidationGroup.BOOLEAN:
        return validate_boolean(attr.value, policy)
    if group is ValidationGroup.INTEGER:
        return validate_integer(attr.value, policy)
    if group is ValidationGroup.VALUE_SET:
        return validate_value_set(attr.value, spec, policy)
    if group is ValidationGroup.ONTOLOGY_TERM:
        return validate_ontology_term(attr.value, spec, resolver, policy)
    if group is ValidationGroup.TERM:
        if not is_filled_in(attr.value):
            return Verdict(group, False, NOT_ASSESSED, "empty")
        try:
            candidates = match_term_any(attr.value, resolver, limit=1)
        except ResolverUnavailable:
            return Verdict(group, True, NOT_ASSESSED, "resolver_unavailable")
        top = candidates[0] if candidates else None
        return Verdict(group, True, NOT_ASSESSED, "term_not_judged", matched_term=top)
    return Verdict(group, is_filled_in(attr.value), NOT_ASSESSED, "counted_only")


def validate_record(
    record: SampleRecord,
    dictionary: Dictionary,
    resolver=None,
    policy: MatchPolicy = DEFAULT_POLICY,
) -> RecordReport:
    """Classify and judge every attribute occurrence of one record.
    Deterministic for fixed inputs; occurrences of repeated names are
    validated independently."""
    per_attribute = []
    custom_names = []
    for attr in record.attributes:
        cls, verdict = validate_attribute(dictionary, attr, resolver, policy)
        per_attribute.append((attr, cls, verdict))
        if not cls.in_dictionary:
            custom_names.append(cls.normalized_name)
    return RecordReport(
        accession=record.accession,
        package_name=record.package_name,
        owner_name=record.owner_name,
        per_attribute=tuple(per_attribute),
        custom_names=tuple(custom_names),
    )
