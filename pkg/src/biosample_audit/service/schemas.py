"""Request/response models for the audit service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class AttributeIn(BaseModel):
    name: str
    harmonized_name: Optional[str] = None
    value: str = ""


class RecordIn(BaseModel):
    """One sample record, mirroring the jsonl line schema."""

    accession: str
    sample_id: str = ""
    package_name: str = "Generic"
    owner_name: Optional[str] = None
    attributes: list[AttributeIn] = []


class TermHitOut(BaseModel):
    ontology_acronym: str
    term_iri: str
    preferred_label: str
    matched_on: str
    match_kind: str


class VerdictOut(BaseModel):
    group: str
    filled_in: bool
    well_specified: str
    reason: str
    matched_term: Optional[TermHitOut] = None


class AttributeVerdictOut(BaseModel):
    name: str
    normalized_name: str
    in_dictionary: bool
    verdict: VerdictOut


class RecordReportOut(BaseModel):
    accession: str
    package_name: str
    owner_name: Optional[str] = None
    attributes: list[AttributeVerdictOut]
    custom_names: list[str]


class ValueRequest(BaseModel):
    """Validate a single name/value pair."""

    name: str
    value: str
    harmonized_name: Optional[str] = None


class OntologyBindingOut(BaseModel):
    acronym: str
    label: str = ""


class AttributeSpecOut(BaseModel):
    canonical_name: str
    group: str
    synonyms: list[str] = []
    ontology: Optional[OntologyBindingOut] = None
    value_set: Optional[list[str]] = None
    description: str = ""


class PackageOut(BaseModel):
    name: str
    required: list[str] = []
    optional: list[str] = []


class DictionaryInfoOut(BaseModel):
    version: str
    attribute_count: int
    package_count: int
    ontologies_loaded: list[str] = []


class LintFindingOut(BaseModel):
    rule: str
    message: str
    location: str


class LintResponse(BaseModel):
    findings: list[LintFindingOut]
    clean: bool


class SearchResult(BaseModel):
    """One search hit in the BioPortal-compatible wire shape."""

    model_config = ConfigDict(populate_by_name=True)

    iri: str = Field(alias="@id")
    pref_label: str = Field(alias="prefLabel")
    links: dict[str, str] = {}
    match_kind: str = Field(alias="matchKind", default="exact")


class SearchResponse(BaseModel):
    collection: list[SearchResult] = []
