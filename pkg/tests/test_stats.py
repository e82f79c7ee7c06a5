"""Tally accumulation, merge algebra, finalization arithmetic, rendering."""

from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biosample_audit.dictionary import ValidationGroup, load_dictionary
from biosample_audit.ingest import Attribute, SampleRecord
from biosample_audit.stats import (
    CSV_COLUMNS,
    GROUP_ORDER,
    AuditTally,
    CustomNameCensus,
    GroupTally,
    TallyMismatchError,
    accumulate,
    finalize,
    merge,
    new_tally,
    parse_summary,
    percent_1dp,
    percent_int,
    render_summary,
)
from biosample_audit.validate import validate_record

GROUPS = list(GROUP_ORDER)


@pytest.fixture(scope="module")
def mixed_dictionary():
    return load_dictionary(
        {
            "version": "mixed-1",
            "attributes": [
                {"name": "sex", "group": "value_set", "value_set": ["male", "female"]},
                {"name": "smoker", "group": "boolean"},
                {"name": "age", "group": "integer"},
            ],
        }
    )


def _report(dictionary, *attrs, accession="S1", owner=None, package="Generic"):
    record = SampleRecord(
        accession=accession,
        owner_name=owner,
        package_name=package,
        attributes=tuple(Attribute(raw_name=n, value=v) for n, v in attrs),
    )
    return validate_record(record, dictionary)


def test_new_tally_is_all_zero():
    tally = new_tally()
    assert tally.total_records == 0
    assert tally.total_attributes == 0
    assert all(gt == GroupTally() for gt in tally.per_group.values())
    summary = finalize(tally)
    assert all(row["percent"] is None for row in summary.groups)
    assert summary.corpus["mean_attributes_per_record"] is None


def test_accumulate_hand_counted_single_report(mixed_dictionary):
    # Hand count: sex "m" invalid; smoker "Y" invalid; age "31" valid.
    tally = new_tally()
    accumulate(tally, _report(mixed_dictionary, ("sex", "m"), ("smoker", "Y"), ("age", "31")))
    vs = tally.per_group[ValidationGroup.VALUE_SET]
    assert (vs.filled_in, vs.well_specified, vs.records_containing, vs.records_all_valid) == (1, 0, 1, 0)
    bo = tally.per_group[ValidationGroup.BOOLEAN]
    assert (bo.filled_in, bo.well_specified, bo.records_containing, bo.records_all_valid) == (1, 0, 1, 0)
    it = tally.per_group[ValidationGroup.INTEGER]
    assert (it.filled_in, it.well_specified, it.records_containing, it.records_all_valid) == (1, 1, 1, 1)
    assert tally.total_records == 1
    assert tally.total_attributes == 3


def test_accumulate_zero_attribute_record(mixed_dictionary):
    tally = new_tally()
    accumulate(tally, _report(mixed_dictionary))
    assert tally.records_with_zero_attributes == 1
    assert tally.records_with_any_attribute == 0
    assert tally.total_attributes == 0


def test_accumulate_duplicate_occurrences_one_valid_one_invalid(mixed_dictionary):
    # Hand count: two smoker occurrences, one valid one invalid:
    # filled 2, well-specified 1, containing 1, all-valid 0, any-valid 1.
    tally = new_tally()
    accumulate(tally, _report(mixed_dictionary, ("smoker", "true"), ("smoker", "never")))
    bo = tally.per_group[ValidationGroup.BOOLEAN]
    assert (bo.filled_in, bo.well_specified, bo.records_containing, bo.records_all_valid) == (2, 1, 1, 0)
    assert bo.records_any_valid == 1


def test_accumulate_custom_census(mixed_dictionary):
    tally = new_tally()
    accumulate(
        tally,
        _report(mixed_dictionary, ("Lab_Batch_ID", "7"), ("lab batch id", "8"), ("other", "x"), owner="Lab A"),
    )
    accumulate(tally, _report(mixed_dictionary, ("sex", "male"), accession="S2", owner="Lab B"))
    assert tally.custom_attribute_occurrences == 3
    assert tally.records_with_custom == 1
    assert tally.owner_census == {"Lab A"}  # only owners contributing custom attributes
    assert tally.custom_name_census.counts == {"lab batch id": 2, "other": 1}


def test_unfilled_attributes_not_counted_per_group(mixed_dictionary):
    tally = new_tally()
    accumulate(tally, _report(mixed_dictionary, ("smoker", "   ")))
    bo = tally.per_group[ValidationGroup.BOOLEAN]
    assert bo.filled_in == 0
    assert bo.records_containing == 0
    assert tally.total_attributes == 1


def _random_group_tally(rng: random.Random) -> GroupTally:
    ws = rng.randrange(0, 50)
    invalid = rng.randrange(0, 50)
    na = rng.randrange(0, 10)
    containing = rng.randrange(0, 40)
    return GroupTally(
        filled_in=ws + invalid + na,
        well_specified=ws,
        invalid=invalid,
        not_assessed_resolver=na,
        records_containing=containing,
        records_all_valid=rng.randrange(0, containing + 1),
        records_any_valid=rng.randrange(0, containing + 1),
    )


def _random_tally(seed: int) -> AuditTally:
    rng = random.Random(seed)
    tally = new_tally(dictionary_version="v1", policy_signature="p1")
    tally.total_records = rng.randrange(0, 1000)
    tally.records_with_zero_attributes = rng.randrange(0, tally.total_records + 1)
    tally.records_with_any_attribute = tally.total_records - tally.records_with_zero_attributes
    tally.total_attributes = rng.randrange(0, 5000)
    tally.per_group = {g: _random_group_tally(rng) for g in GROUP_ORDER}
    tally.term_group_attempted = rng.randrange(0, 100)
    tally.custom_attribute_occurrences = rng.randrange(0, 100)
    tally.records_with_custom = rng.randrange(0, 50)
    for i in range(rng.randrange(0, 20)):
        tally.custom_name_census.add(f"name {rng.randrange(12)}", times=rng.randrange(1, 4))
    tally.owner_census = {f"owner {rng.randrange(8)}" for _ in range(rng.randrange(0, 6))}
    for i in range(rng.randrange(0, 5)):
        tally.package_histogram[f"Pkg{rng.randrange(4)}"] += rng.randrange(1, 9)
    tally.resolver_failures = rng.randrange(0, 5)
    return tally


def _tally_key(tally: AuditTally):
    return (
        tally.total_records,
        tally.total_attributes,
        tally.records_with_zero_attributes,
        tally.records_with_any_attribute,
        tuple(sorted(vars(tally.per_group[g]).items()) for g in GROUP_ORDER),
        tally.term_group_attempted,
        tally.custom_attribute_occurrences,
        tally.records_with_custom,
        tuple(sorted((tally.custom_name_census.counts or {}).items())),
        tuple(sorted(tally.owner_census)),
        tuple(sorted(tally.package_histogram.items())),
        tally.resolver_failures,
    )


@given(st.integers(min_value=0, max_value=10**9), st.integers(min_value=0, max_value=10**9), st.integers(min_value=0, max_value=10**9))
@settings(max_examples=150, deadline=None)
def test_merge_is_commutative_and_associative(sa, sb, sc):
    a, b, c = _random_tally(sa), _random_tally(sb), _random_tally(sc)
    assert _tally_key(merge(a, b)) == _tally_key(merge(b, a))
    assert _tally_key(merge(merge(a, b), c)) == _tally_key(merge(a, merge(b, c)))


@given(st.integers(min_value=0, max_value=10**9))
@settings(max_examples=100, deadline=None)
def test_merge_identity(seed):
    tally = _random_tally(seed)
    assert _tally_key(merge(tally, new_tally())) == _tally_key(tally)
    assert _tally_key(merge(new_tally(), tally)) == _tally_key(tally)


@given(st.integers(min_value=0, max_value=10**9), st.integers(min_value=0, max_value=10**9))
@settings(max_examples=100, deadline=None)
def test_conservation_invariant_after_merge(sa, sb):
    merged = merge(_random_tally(sa), _random_tally(sb))
    for gt in merged.per_group.values():
        assert gt.well_specified + gt.invalid + gt.not_assessed_resolver == gt.filled_in
        assert gt.records_all_valid <= gt.records_containing
        assert gt.well_specified <= gt.filled_in


def test_merge_rejects_mismatched_fingerprints():
    a = new_tally(dictionary_version="v1", policy_signature="p")
    b = new_tally(dictionary_version="v2", policy_signature="p")
    a.total_records = b.total_records = 1
    with pytest.raises(TallyMismatchError):
        merge(a, b)


def test_conservation_after_accumulate_sequences(mixed_dictionary):
    rng = random.Random(1234)
    values = {"sex": ["male", "m", "female", ""], "smoker": ["true", "never", "--", ""], "age": ["31", "x", ""]}
    tallies = []
    for shard in range(4):
        tally = new_tally(dictionary_version="mixed-1")
        for i in range(50):
            attrs = []
            for name, pool in values.items():
                for _ in range(rng.randrange(0, 3)):
                    attrs.append((name, rng.choice(pool)))
            accumulate(tally, _report(mixed_dictionary, *attrs, accession=f"S{shard}-{i}"))
        tallies.append(tally)
    total = tallies[0]
    for shard in tallies[1:]:
        total = merge(total, shard)
    for gt in total.per_group.values():
        assert gt.well_specified + gt.invalid + gt.not_assessed_resolver == gt.filled_in


def test_shard_invariance_against_single_pass(mixed_dictionary):
    rng = random.Random(99)
    reports = []
    for i in range(1000):
        attrs = []
        if rng.random() < 0.9:
            attrs.append(("sex", rng.choice(["male", "female", "makle", "m"])))
            attrs.append(("smoker", rng.choice(["true", "false", "Y", "never smoker"])))
            attrs.append(("age", rng.choice(["31", "3.5", "9606"])))
            if rng.random() < 0.2:
                attrs.append(("batch_code", "x"))
        reports.append(
            _report(mixed_dictionary, *attrs, accession=f"R{i}", owner=f"lab {i % 7}", package=f"P{i % 3}")
        )

    single = new_tally(dictionary_version="mixed-1")
    for report in reports:
        accumulate(single, report)

    shards = [new_tally(dictionary_version="mixed-1") for _ in range(4)]
    for i, report in enumerate(reports):
        accumulate(shards[i % 4], report)
    merged = shards[0]
    for shard in shards[1:]:
        merged = merge(merged, shard)

    assert _tally_key(merged) == _tally_key(single)
    assert finalize(merged).to_json() == finalize(single).to_json()


def _inject(pairs):
    tally = new_tally()
    for group, (filled, ws) in zip(GROUP_ORDER, pairs):
        tally.per_group[group] = GroupTally(filled_in=filled, well_specified=ws, invalid=filled - ws)
    return finalize(tally)


def test_headline_percentages_from_injected_counts():
    summary = _inject([(1_976_642, 639_154), (4_165_320, 3_842_733), (7_585, 2_015), (163_535, 120_701)])
    assert [row["percent"] for row in summary.groups] == [32, 92, 27, 74]


def test_record_level_percentages_from_injected_counts():
    tally = new_tally()
    pairs = [(1_016_483, 441_719), (4_028_758, 3_781_283), (6_767, 2_013), (158_854, 120_026)]
    for group, (containing, all_valid) in zip(GROUP_ORDER, pairs):
        tally.per_group[group] = GroupTally(records_containing=containing, records_all_valid=all_valid)
    summary = finalize(tally)
    assert [row["record_percent"] for row in summary.groups] == [43, 94, 30, 76]


def test_not_assessed_excluded_from_percent():
    tally = new_tally()
    tally.per_group[ValidationGroup.ONTOLOGY_TERM] = GroupTally(
        filled_in=10, well_specified=4, invalid=2, not_assessed_resolver=4
    )
    row = finalize(tally).groups[0]
    assert row["percent"] == 67  # 4 of 6 assessed
    assert row["not_assessed"] == 4


def test_percent_rounding_half_away_from_zero():
    assert percent_int(1, 8) == 13  # 12.5 rounds away from zero
    assert percent_int(5, 1000) == 1  # 0.5 rounds up
    assert percent_int(0, 100) == 0
    assert percent_int(1, 0) is None
    assert percent_1dp(1, 3) == 33.3
    assert percent_1dp(0, 0) is None


def test_mean_attributes_per_record():
    tally = new_tally()
    tally.total_records = 5
    tally.total_attributes = 62
    summary = finalize(tally)
    assert summary.corpus["mean_attributes_per_record"] == 12
    assert summary.corpus["mean_attributes_per_record_detailed"] == 12.4


def test_census_sketch_path():
    census = CustomNameCensus(cap=5)
    for i in range(20):
        census.add(f"name-{i}")
    assert census.approximate
    assert census.distinct() == 20  # below sketch capacity the hash set stays exact
    exact = CustomNameCensus(cap=5)
    exact.add("name-0")
    merged = census.merged(exact)
    assert merged.approximate
    assert merged.distinct() == 20


def test_census_sketch_estimates_large_counts():
    census = CustomNameCensus(cap=10)
    for i in range(50_000):
        census.add(f"name-{i}")
    estimate = census.distinct()
    assert census.approximate
    assert 0.85 * 50_000 <= estimate <= 1.15 * 50_000


def test_render_csv_columns():
    summary = _inject([(10, 5), (10, 5), (10, 5), (10, 5)])
    lines = render_summary(summary, "csv").strip().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 5
    assert lines[1].startswith("ontology_term,10,5,5,0,50,")


def test_render_table_matches_headline():
    summary = _inject([(1_976_642, 639_154), (4_165_320, 3_842_733), (7_585, 2_015), (163_535, 120_701)])
    table = render_summary(summary, "table")
    assert "Attribute type" in table and "% Well-specified values" in table
    assert "Ontology term" in table and "1,976,642" in table and "32%" in table


def test_json_round_trip_equality(mixed_dictionary):
    tally = new_tally(dictionary_version="mixed-1")
    accumulate(tally, _report(mixed_dictionary, ("sex", "male"), ("smoker", "maybe"), ("batch_no", "7")))
    summary = finalize(tally, corpus_info={"path": "x.jsonl", "format": "jsonl"})
    text = render_summary(summary, "json")
    assert parse_summary(text) == summary
    assert json.loads(text)["report_version"] == 1


def test_render_unknown_format():
    with pytest.raises(ValueError):
        render_summary(_inject([(1, 1)] * 4), "yaml")
