"""Attribute data dictionary: typed attribute specifications, package
definitions, loading from the JSON dictionary document, and lint checks.

The dictionary defines what "well-specified" means for every known attribute
name. Attributes carry exactly one validation group; the ``ontology_term``
group additionally names the ontology that supplies valid values, and the
``value_set`` group carries the closed list of acceptable values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping, Optional, Union

from .normalize import normalize_name, normalize_value

__all__ = [
    "ValidationGroup",
    "OntologyBinding",
    "AttributeSpec",
    "PackageDef",
    "Dictionary",
    "LintFinding",
    "DictionaryError",
    "GENERIC_PACKAGE",
    "load_dictionary",
    "lookup_attribute",
    "lint_dictionary",
    "package_requirements",
]


class DictionaryError(ValueError):
    """Raised when a dictionary document is malformed or internally
    inconsistent. The message always names the offending entry."""


class ValidationGroup(str, Enum):
    """The expected-value category of an attribute."""

    ONTOLOGY_TERM = "ontology_term"
    TERM = "term"
    VALUE_SET = "value_set"
    BOOLEAN = "boolean"
    INTEGER = "integer"
    UNIT = "unit"
    PUBMED_ID = "pubmed_id"
    FREE_TEXT = "free_text"


#: Groups whose filled-in values receive a valid/invalid verdict.
ASSESSED_GROUPS = (
    ValidationGroup.ONTOLOGY_TERM,
    ValidationGroup.VALUE_SET,
    ValidationGroup.BOOLEAN,
    ValidationGroup.INTEGER,
)


@dataclass(frozen=True)
class OntologyBinding:
    """Designates the ontology whose terms are valid values."""

    ontology_acronym: str
    human_label: str = ""


@dataclass(frozen=True)
class AttributeSpec:
    """Specification of one dictionary attribute."""

    canonical_name: str
    group: ValidationGroup
    synonyms: tuple[str, ...] = ()
    binding: Optional[OntologyBinding] = None
    value_set: Optional[tuple[str, ...]] = None
    description: str = ""

    @cached_property
    def normalized_names(self) -> tuple[str, ...]:
        return tuple(normalize_name(n) for n in (self.canonical_name, *self.synonyms))

    @cached_property
    def normalized_value_set(self) -> frozenset[str]:
        """Value-set members under value normalization (empty for other groups)."""
        if not self.value_set:
            return frozenset()
        return frozenset(normalize_value(v) for v in self.value_set)


@dataclass(frozen=True)
class PackageDef:
    """Required/optional attribute names for one sample-type package."""

    name: str
    required: tuple[str, ...] = ()
    optional: tuple[str, ...] = ()


GENERIC_PACKAGE = PackageDef(name="Generic")


@dataclass(frozen=True)
class LintFinding:
    rule: str
    message: str
    location: str


@dataclass(frozen=True)
class Dictionary:
    """Immutable, indexed attribute dictionary. Safe for concurrent reads."""

    version_label: str
    specs: tuple[AttributeSpec, ...]
    packages: Mapping[str, PackageDef] = field(default_factory=dict)

    @cached_property
    def index(self) -> Mapping[str, AttributeSpec]:
        """Normalized name (canonical and synonyms) -> spec."""
        idx: dict[str, AttributeSpec] = {}
        for spec in self.specs:
            for key in spec.normalized_names:
                idx.setdefault(key, spec)
        return MappingProxyType(idx)

    def lookup(self, raw_name: str) -> Optional[AttributeSpec]:
        return self.index.get(normalize_name(raw_name))

    def package(self, package_name: str) -> PackageDef:
        return self.packages.get(package_name, GENERIC_PACKAGE)


_GROUP_TAGS = {g.value: g for g in ValidationGroup}


def _parse_binding(raw: Any, where: str) -> OntologyBinding:
    if isinstance(raw, str):
        raw = {"acronym": raw}
    if not isinstance(raw, dict):
        raise DictionaryError(f"{where}: 'ontology' must be a string acronym or an object")
    acronym = str(raw.get("acronym", "")).strip().upper()
    if not acronym:
        raise DictionaryError(f"{where}: ontology binding has an empty acronym")
    if any(ch.isspace() for ch in acronym):
        raise DictionaryError(f"{where}: ontology acronym {acronym!r} contains whitespace")
    return OntologyBinding(ontology_acronym=acronym, human_label=str(raw.get("label", "")))


def _parse_attribute(entry: Any, where: str) -> AttributeSpec:
    if not isinstance(entry, dict):
        raise DictionaryError(f"{where}: attribute entry must be an object")
    name = str(entry.get("name", "")).strip()
    if not name:
        raise DictionaryError(f"{where}: attribute has no name")
    where = f"{where} ({name!r})"
    group_tag = entry.get("group")
    group = _GROUP_TAGS.get(group_tag)
    if group is None:
        raise DictionaryError(f"{where}: unknown group {group_tag!r}")
    synonyms = entry.get("synonyms", [])
    if not isinstance(synonyms, list) or not all(isinstance(s, str) for s in synonyms):
        raise DictionaryError(f"{where}: 'synonyms' must be a list of strings")

    binding = None
    if group is ValidationGroup.ONTOLOGY_TERM:
        if "ontology" not in entry:
            raise DictionaryError(f"{where}: ontology_term attribute lacks an 'ontology' binding")
        binding = _parse_binding(entry["ontology"], where)
    elif "ontology" in entry:
        raise DictionaryError(f"{where}: group {group.value} must not carry an ontology binding")

    value_set = None
    if group is ValidationGroup.VALUE_SET:
        raw_values = entry.get("value_set")
        if not isinstance(raw_values, list) or not raw_values:
            raise DictionaryError(f"{where}: value_set attribute needs a non-empty 'value_set' list")
        value_set = tuple(str(v) for v in raw_values)
    elif "value_set" in entry:
        raise DictionaryError(f"{where}: group {group.value} must not carry a value set")

    return AttributeSpec(
        canonical_name=name,
        group=group,
        synonyms=tuple(synonyms),
        binding=binding,
        value_set=value_set,
        description=str(entry.get("description", "")),
    )


def _parse_package(entry: Any, where: str, index: Mapping[str, AttributeSpec]) -> PackageDef:
    if not isinstance(entry, dict):
        raise DictionaryError(f"{where}: package entry must be an object")
    name = str(entry.get("name", "")).strip()
    if not name:
        raise DictionaryError(f"{where}: package has no name")
    where = f"{where} ({name!r})"
    lists: dict[str, tuple[str, ...]] = {}
    for kind in ("required", "optional"):
        names = entry.get(kind, [])
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise DictionaryError(f"{where}: '{kind}' must be a list of strings")
        for attr_name in names:
            if normalize_name(attr_name) not in index:
                raise DictionaryError(f"{where}: {kind} attribute {attr_name!r} is not in the dictionary")
        lists[kind] = tuple(names)
    overlap = {normalize_name(n) for n in lists["required"]} & {normalize_name(n) for n in lists["optional"]}
    if overlap:
        raise DictionaryError(f"{where}: attributes {sorted(overlap)} are both required and optional")
    return PackageDef(name=name, required=lists["required"], optional=lists["optional"])


def load_dictionary(source: Union[str, Path, Mapping[str, Any]]) -> Dictionary:
    """Load and validate a dictionary document (path or parsed mapping).

    Raises DictionaryError naming the offending entry on any violation:
    malformed document, duplicate normalized names, package referencing an
    unknown attribute, ontology_term spec without a binding, or a value_set
    spec with an empty set.
    """
    if isinstance(source, (str, Path)):
        try:
            with open(source, "r", encoding="utf-8") as fh:
                document = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DictionaryError(f"cannot read dictionary document {source}: {exc}") from exc
    else:
        document = source
    if not isinstance(document, dict):
        raise DictionaryError("dictionary document must be a JSON object")
    raw_attributes = document.get("attributes")
    if not isinstance(raw_attributes, list):
        raise DictionaryError("dictionary document needs an 'attributes' array")

    specs: list[AttributeSpec] = []
    claimed: dict[str, int] = {}
    for i, entry in enumerate(raw_attributes):
        spec = _parse_attribute(entry, f"attributes[{i}]")
        for key in spec.normalized_names:
            owner = claimed.setdefault(key, i)
            if owner != i:
                raise DictionaryError(
                    f"attributes[{i}] ({spec.canonical_name!r}): name {key!r} collides with "
                    f"{specs[owner].canonical_name!r} after normalization"
                )
        specs.append(spec)

    interim = Dictionary(version_label="", specs=tuple(specs))
    packages: dict[str, PackageDef] = {}
    for i, entry in enumerate(document.get("packages", [])):
        pkg = _parse_package(entry, f"packages[{i}]", interim.index)
        if pkg.name in packages:
            raise DictionaryError(f"packages[{i}]: duplicate package name {pkg.name!r}")
        packages[pkg.name] = pkg

    return Dictionary(
        version_label=str(document.get("version", "unversioned")),
        specs=tuple(specs),
        packages=MappingProxyType(packages),
    )


def lookup_attribute(dictionary: Dictionary, raw_name: str) -> Optional[AttributeSpec]:
    """Resolve a raw attribute name to its spec; absence means a custom name."""
    return dictionary.lookup(raw_name)


def package_requirements(dictionary: Dictionary, package_name: str) -> PackageDef:
    """Return the package definition; unknown or empty names map to Generic."""
    if not package_name.strip():
        return GENERIC_PACKAGE
    return dictionary.package(package_name)


def lint_dictionary(dictionary: Dictionary) -> list[LintFinding]:
    """Check a dictionary (including hand-built ones) against the load-time
    invariants plus advisory rules. An empty result means clean."""
    findings: list[LintFinding] = []

    claimed: dict[str, str] = {}
    for spec in dictionary.specs:
        where = f"attribute {spec.canonical_name!r}"
        for key in spec.normalized_names:
            if key in claimed and claimed[key] != spec.canonical_name:
                findings.append(
                    LintFinding(
                        rule="duplicate-name",
                        message=f"name {key!r} collides with {claimed[key]!r} after normalization",
                        location=where,
                    )
                )
            else:
                claimed.setdefault(key, spec.canonical_name)

        if spec.group is ValidationGroup.ONTOLOGY_TERM:
            acronym = spec.binding.ontology_acronym if spec.binding else ""
            if not acronym:
                findings.append(
                    LintFinding(
                        rule="missing-binding",
                        message="ontology_term attribute has no ontology acronym",
                        location=where,
                    )
                )
            elif acronym != acronym.strip().upper() or any(ch.isspace() for ch in acronym):
                findings.append(
                    LintFinding(
                        rule="binding-acronym",
                        message=f"ontology acronym {acronym!r} is not upper-cased and whitespace-free",
                        location=where,
                    )
                )
        if spec.group is ValidationGroup.VALUE_SET:
            if not spec.value_set:
                findings.append(
                    LintFinding(rule="empty-value-set", message="value set is empty", location=where)
                )
            else:
                seen: dict[str, str] = {}
                for member in spec.value_set:
                    norm = normalize_value(member)
                    if norm in seen and seen[norm] != member:
                        findings.append(
                            LintFinding(
                                rule="value-set-collision",
                                message=f"members {seen[norm]!r} and {member!r} collide under normalization",
                                location=where,
                            )
                        )
                    else:
                        seen.setdefault(norm, member)
        if spec.group not in (ValidationGroup.ONTOLOGY_TERM,) and spec.binding is not None:
            findings.append(
                LintFinding(
                    rule="stray-payload",
                    message=f"group {spec.group.value} must not carry an ontology binding",
                    location=where,
                )
            )
        if spec.group not in (ValidationGroup.VALUE_SET,) and spec.value_set is not None:
            findings.append(
                LintFinding(
                    rule="stray-payload",
                    message=f"group {spec.group.value} must not carry a value set",
                    location=where,
                )
            )

    for pkg in dictionary.packages.values():
        where = f"package {pkg.name!r}"
        for kind in ("required", "optional"):
            for attr_name in getattr(pkg, kind):
                spec = dictionary.lookup(attr_name)
                if spec is None:
                    findings.append(
                        LintFinding(
                            rule="unresolved-reference",
                            message=f"{kind} attribute {attr_name!r} is not in the dictionary",
                            location=where,
                        )
                    )
                elif kind == "required" and spec.group is ValidationGroup.TERM:
                    findings.append(
                        LintFinding(
                            rule="term-required-without-guidance",
                            message=(
                                f"required attribute {attr_name!r} is in the term group, which names "
                                "no ontology to validate against"
                            ),
                            location=where,
                        )
                    )
        overlap = {normalize_name(n) for n in pkg.required} & {normalize_name(n) for n in pkg.optional}
        if overlap:
            findings.append(
                LintFinding(
                    rule="required-optional-overlap",
                    message=f"attributes {sorted(overlap)} are both required and optional",
                    location=where,
                )
            )
    return findings
