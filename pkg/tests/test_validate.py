"""Per-group validators, classification, and record-level dispatch."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biosample_audit.dictionary import ValidationGroup, load_dictionary
from biosample_audit.ingest import Attribute, SampleRecord, open_corpus
from biosample_audit.resolve import ResolverUnavailable
from biosample_audit.validate import (
    INVALID,
    NOT_ASSESSED,
    VALID,
    MatchPolicy,
    classify_attribute,
    is_filled_in,
    match_term_any,
    validate_boolean,
    validate_integer,
    validate_ontology_term,
    validate_record,
    validate_value_set,
)

STRICT_POLICY = MatchPolicy(value_set="strict", ontology="strict")

BOOLEAN_INVALIDS = [
    "yes", "no", "Y", "N", "0", "--", "never", "never smoker",
    "Former", "ex-smoker", "Non-smoker", "f", "t", "1", "TRUE FALSE",
]


class FailingResolver:
    def resolve_exact(self, query, ontology_acronym, strict=False):
        raise ResolverUnavailable("stubbed outage")

    def search_any(self, query, limit=5):
        raise ResolverUnavailable("stubbed outage")


def test_is_filled_in():
    assert not is_filled_in("")
    assert not is_filled_in("   \t ")
    assert is_filled_in("true")
    assert is_filled_in("--")


@pytest.mark.parametrize("value", ["true", "false", "TRUE", "False", "tRuE", " true "])
def test_boolean_accepts_case_variants(value):
    verdict = validate_boolean(value)
    assert verdict.well_specified == VALID
    assert verdict.filled_in


@pytest.mark.parametrize("value", BOOLEAN_INVALIDS)
def test_boolean_rejects_catalogued_values(value):
    verdict = validate_boolean(value)
    assert verdict.well_specified == INVALID


def test_boolean_empty_is_not_filled():
    verdict = validate_boolean("   ")
    assert not verdict.filled_in
    assert verdict.well_specified == NOT_ASSESSED


def test_boolean_null_like_flagged():
    verdict = validate_boolean("--")
    assert verdict.filled_in
    assert verdict.well_specified == INVALID
    assert "null_like" in verdict.reason


@given(st.sampled_from(["true", "false"]), st.integers(min_value=0, max_value=2**5 - 1))
def test_boolean_accepts_every_case_mask(word, mask):
    cased = "".join(ch.upper() if mask >> i & 1 else ch for i, ch in enumerate(word))
    assert validate_boolean(cased).well_specified == VALID


@given(st.text(max_size=20))
def test_boolean_acceptance_set_is_exact(value):
    verdict = validate_boolean(value)
    expected_valid = value.strip().casefold() in ("true", "false")
    if not value.strip():
        assert not verdict.filled_in
    elif expected_valid:
        assert verdict.well_specified == VALID
    else:
        assert verdict.well_specified == INVALID


def _integer_oracle(value: str) -> bool:
    """Independent big-integer check restricted to signed 64-bit."""
    text = value.strip()
    if text and text[0] in "+-":
        text = text[1:]
    if not text or not all(c in "0123456789" for c in text):
        return False
    return -(2**63) <= int(value.strip()) <= 2**63 - 1


@pytest.mark.parametrize(
    "value, expected",
    [
        ("9606", VALID),
        ("Mus musculus", INVALID),
        ("3.5", INVALID),
        ("-12", VALID),
        ("+7", VALID),
        (" 42 ", VALID),
        ("1_000", INVALID),
        ("1e5", INVALID),
        ("N/A", INVALID),
        ("٤٢", INVALID),  # non-ASCII digits are not integers here
        (str(2**63 - 1), VALID),
        (str(-(2**63)), VALID),
        (str(2**63), INVALID),
    ],
)
def test_integer_examples(value, expected):
    assert validate_integer(value).well_specified == expected


def test_integer_overflow_reason():
    assert validate_integer(str(2**63)).reason.startswith("integer_out_of_range")


@given(st.one_of(st.text(max_size=25), st.integers().map(str)))
@settings(max_examples=300)
def test_integer_agrees_with_oracle(value):
    verdict = validate_integer(value)
    if not value.strip():
        assert not verdict.filled_in
    else:
        assert (verdict.well_specified == VALID) == _integer_oracle(value)


@pytest.fixture(scope="module")
def sex_spec(sample_dictionary):
    return sample_dictionary.lookup("sex")


def test_value_set_members_accepted(sex_spec):
    for member in sex_spec.value_set:
        assert validate_value_set(member, sex_spec).well_specified == VALID
        assert validate_value_set(member, sex_spec, STRICT_POLICY).well_specified == VALID


@pytest.mark.parametrize(
    "value",
    ["castrated horse", "gynoparae", "mal e", "makle", "femLE", "Department I of Internal Medicine", "7", "m"],
)
def test_value_set_anomalies_rejected_under_both_policies(value, sex_spec):
    assert validate_value_set(value, sex_spec).well_specified == INVALID
    assert validate_value_set(value, sex_spec, STRICT_POLICY).well_specified == INVALID


@pytest.mark.parametrize("value", ["Male", "FEMALE", "POOLED male AND female", " female "])
def test_value_set_case_variants_lenient_only(value, sex_spec):
    assert validate_value_set(value, sex_spec).well_specified == VALID
    assert validate_value_set(value, sex_spec, STRICT_POLICY).well_specified == INVALID


def test_value_set_member_never_null_flagged(sex_spec):
    policy = MatchPolicy(null_tokens=("missing", "--"))
    verdict = validate_value_set("missing", sex_spec, policy)
    assert verdict.well_specified == VALID
    assert "null_like" not in verdict.reason
    flagged = validate_value_set("--", sex_spec, policy)
    assert flagged.well_specified == INVALID
    assert "null_like" in flagged.reason


def test_value_set_wrong_group_raises(sample_dictionary):
    smoker = sample_dictionary.lookup("smoker")
    with pytest.raises(ValueError):
        validate_value_set("true", smoker)


@pytest.fixture(scope="module")
def disease_spec(sample_dictionary):
    return sample_dictionary.lookup("disease")


@pytest.mark.parametrize(
    "value, expected",
    [
        ("gastrointestinal stromal tumor", VALID),
        ("gastrointestinal stromal tumor_4", INVALID),
        ("HIV_Positive", INVALID),
        ("lung_squamous_carcinoma", INVALID),
        ("HIV", VALID),
        ("GIST", VALID),  # synonyms count as matches
        ("Gastrointestinal  Stromal Tumor", VALID),  # case/whitespace lenient
    ],
)
def test_ontology_term_semantics(value, expected, disease_spec, local_resolver):
    verdict = validate_ontology_term(value, disease_spec, local_resolver)
    assert verdict.well_specified == expected
    if expected == VALID:
        assert verdict.matched_term is not None
        assert verdict.matched_term.ontology_acronym == "DOID"
    else:
        assert verdict.matched_term is None


def test_ontology_term_strict_policy(disease_spec, local_resolver):
    assert (
        validate_ontology_term("gastrointestinal stromal tumor", disease_spec, local_resolver, STRICT_POLICY).well_specified
        == VALID
    )
    assert (
        validate_ontology_term("Gastrointestinal Stromal Tumor", disease_spec, local_resolver, STRICT_POLICY).well_specified
        == INVALID
    )


def test_ontology_term_resolver_failure_is_not_assessed(disease_spec):
    verdict = validate_ontology_term("melanoma", disease_spec, FailingResolver())
    assert verdict.well_specified == NOT_ASSESSED
    assert verdict.reason == "resolver_unavailable"
    verdict = validate_ontology_term("melanoma", disease_spec, None)
    assert verdict.well_specified == NOT_ASSESSED


def test_ontology_term_empty_not_filled(disease_spec, local_resolver):
    verdict = validate_ontology_term("", disease_spec, local_resolver)
    assert not verdict.filled_in
    assert verdict.well_specified == NOT_ASSESSED


def test_match_term_any(local_resolver):
    assert match_term_any("", local_resolver) == []
    hits = match_term_any("male", local_resolver)
    assert hits and hits[0].match_kind == "exact" and hits[0].preferred_label == "male"
    # an off-domain phrase yields candidates, never a judgement
    hits = match_term_any("hive cell S29", local_resolver)
    assert hits and all(h.match_kind in ("prefix", "token") for h in hits)


def test_classify_attribute(sample_dictionary):
    claimed = classify_attribute(sample_dictionary, Attribute(raw_name="Sex", harmonized_name="sex", value="m"))
    assert claimed.in_dictionary and claimed.spec.canonical_name == "sex"
    custom = classify_attribute(sample_dictionary, Attribute(raw_name="my_lab_batch_id", value="x"))
    assert not custom.in_dictionary and custom.spec is None
    assert custom.normalized_name == "my lab batch id"
    display = classify_attribute(sample_dictionary, Attribute(raw_name="Disease", value="x"))
    assert display.in_dictionary and display.spec.canonical_name == "disease"
    # harmonized name wins over the raw display name
    harmonized = classify_attribute(
        sample_dictionary, Attribute(raw_name="Gender Of Subject", harmonized_name="sex", value="f")
    )
    assert harmonized.in_dictionary and harmonized.spec.canonical_name == "sex"


def test_validate_record_dispatch():
    dictionary = load_dictionary(
        {
            "version": "t",
            "attributes": [
                {
                    "name": "sex",
                    "group": "value_set",
                    "value_set": ["male", "female"],
                },
                {"name": "smoker", "group": "boolean"},
                {"name": "age", "group": "integer"},
            ],
        }
    )
    record = SampleRecord(
        accession="S1",
        attributes=(
            Attribute(raw_name="sex", value="m"),
            Attribute(raw_name="smoker", value="Y"),
            Attribute(raw_name="age", value="31"),
        ),
    )
    report = validate_record(record, dictionary)
    outcomes = [verdict.well_specified for _, _, verdict in report.per_attribute]
    assert outcomes == [INVALID, INVALID, VALID]


def test_validate_record_empty_and_custom(sample_dictionary):
    empty = validate_record(SampleRecord(accession="S0"), sample_dictionary)
    assert empty.per_attribute == ()
    assert empty.custom_names == ()

    record = SampleRecord(accession="S1", attributes=(Attribute(raw_name="robot_arm", value="A3"),))
    report = validate_record(record, sample_dictionary)
    assert report.custom_names == ("robot arm",)
    _, cls, verdict = report.per_attribute[0]
    assert not cls.in_dictionary
    assert verdict.group is ValidationGroup.FREE_TEXT
    assert verdict.well_specified == NOT_ASSESSED
    assert verdict.reason == "custom_name"


def test_verdict_invariants_on_fixture_corpus(fixtures_dir, sample_dictionary, local_resolver):
    assessed = {
        ValidationGroup.ONTOLOGY_TERM,
        ValidationGroup.VALUE_SET,
        ValidationGroup.BOOLEAN,
        ValidationGroup.INTEGER,
    }
    for record in open_corpus(fixtures_dir / "corpus.sample.xml"):
        report = validate_record(record, sample_dictionary, local_resolver)
        assert len(report.per_attribute) == len(record.attributes)
        for _, _, verdict in report.per_attribute:
            if verdict.well_specified in (VALID, INVALID):
                assert verdict.filled_in
                assert verdict.group in assessed
            if verdict.group not in assessed:
                assert verdict.well_specified == NOT_ASSESSED
            if verdict.matched_term is not None:
                assert verdict.group in (ValidationGroup.ONTOLOGY_TERM, ValidationGroup.TERM)


def test_validators_are_pure(sex_spec, disease_spec, local_resolver):
    for _ in range(3):
        assert validate_boolean("Never").reason == validate_boolean("Never").reason
        assert validate_value_set("makle", sex_spec) == validate_value_set("makle", sex_spec)
        first = validate_ontology_term("HIV", disease_spec, local_resolver)
        second = validate_ontology_term("HIV", disease_spec, local_resolver)
        assert first == second


def test_term_group_has_no_verdict(sample_dictionary, local_resolver):
    record = SampleRecord(accession="S1", attributes=(Attribute(raw_name="cell type", value="male"),))
    (_, _, verdict), = validate_record(record, sample_dictionary, local_resolver).per_attribute
    assert verdict.group is ValidationGroup.TERM
    assert verdict.well_specified == NOT_ASSESSED
    assert verdict.matched_term is not None  # candidate reported, not judged
