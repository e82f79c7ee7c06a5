"""Mergeable audit tallies and the finalized summary report.

Tallies accumulate per-record validation reports and merge component-wise,
forming a commutative monoid with the fresh tally as identity; any shard
split of a corpus therefore finalizes to the same summary. Percentages are
rounded half away from zero (integers for headline fields, one decimal for
the detailed variants), and a zero denominator reports an absent percent
rather than zero.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Mapping, Optional

from .dictionary import ValidationGroup
from .validate import INVALID, VALID, RecordReport

__all__ = [
    "GROUP_ORDER",
    "GroupTally",
    "CustomNameCensus",
    "AuditTally",
    "AuditSummary",
    "TallyMismatchError",
    "new_tally",
    "accumulate",
    "merge",
    "finalize",
    "render_summary",
    "parse_summary",
    "percent_int",
    "percent_1dp",
]

#: Report row order for the four judged groups.
GROUP_ORDER = (
    ValidationGroup.ONTOLOGY_TERM,
    ValidationGroup.VALUE_SET,
    ValidationGroup.BOOLEAN,
    ValidationGroup.INTEGER,
)

GROUP_DISPLAY = {
    ValidationGroup.ONTOLOGY_TERM: "Ontology term",
    ValidationGroup.VALUE_SET: "Value set",
    ValidationGroup.BOOLEAN: "Boolean",
    ValidationGroup.INTEGER: "Integer",
}

CSV_COLUMNS = (
    "group",
    "filled_in",
    "well_specified",
    "invalid",
    "not_assessed",
    "percent",
    "records_containing",
    "records_all_valid",
    "record_percent",
)


class TallyMismatchError(ValueError):
    """Tallies from different dictionary versions or policies cannot be
    merged; their counts are not comparable."""


def percent_int(numerator: int, denominator: int) -> Optional[int]:
    """100*n/d rounded half away from zero; None when the denominator is 0."""
    if denominator <= 0:
        return None
    value = Decimal(numerator) * 100 / Decimal(denominator)
    return int(value.quantize(Decimal("1"), rounding=ROUND_HALF_UP))


def percent_1dp(numerator: int, denominator: int) -> Optional[float]:
    """One-decimal variant of percent_int for the detailed report."""
    if denominator <= 0:
        return None
    value = Decimal(numerator) * 100 / Decimal(denominator)
    return float(value.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


@dataclass
class GroupTally:
    """Counters for one judged validation group."""

    filled_in: int = 0
    well_specified: int = 0
    invalid: int = 0
    not_assessed_resolver: int = 0
    records_containing: int = 0
    records_all_valid: int = 0
    records_any_valid: int = 0

    def merged(self, other: "GroupTally") -> "GroupTally":
        return GroupTally(
            filled_in=self.filled_in + other.filled_in,
            well_specified=self.well_specified + other.well_specified,
            invalid=self.invalid + other.invalid,
            not_assessed_resolver=self.not_assessed_resolver + other.not_assessed_resolver,
            records_containing=self.records_containing + other.records_containing,
            records_all_valid=self.records_all_valid + other.records_all_valid,
            records_any_valid=self.records_any_valid + other.records_any_valid,
        )


def _hash64(name: str) -> int:
    return int.from_bytes(hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest(), "big")


class CustomNameCensus:
    """Distinct-count census of custom attribute names (with multiplicity).

    Exact up to ``cap`` distinct names; beyond that it degrades to a
    bottom-k (KMV) sketch and the report is flagged approximate.
    """

    SKETCH_K = 1024

    def __init__(self, cap: int = 10**6):
        self.cap = cap
        self.counts: Optional[Counter] = Counter()
        self._hashes: Optional[set[int]] = None

    @property
    def approximate(self) -> bool:
        return self.counts is None

    def add(self, name: str, times: int = 1) -> None:
        if self.counts is not None:
            self.counts[name] += times
            if len(self.counts) > self.cap:
                self._degrade()
        else:
            self._hashes.add(_hash64(name))  # type: ignore[union-attr]
            self._prune()

    def _degrade(self) -> None:
        self._hashes = {_hash64(name) for name in self.counts}  # type: ignore[union-attr]
        self.counts = None
        self._prune()

    def _prune(self) -> None:
        if self._hashes is not None and len(self._hashes) > self.SKETCH_K:
            self._hashes = set(sorted(self._hashes)[: self.SKETCH_K])

    def distinct(self) -> int:
        if self.counts is not None:
            return len(self.counts)
        hashes = self._hashes or set()
        if len(hashes) < self.SKETCH_K:
            return len(hashes)
        kth = max(hashes) / float(1 << 64)
        return round((self.SKETCH_K - 1) / kth)

    def merged(self, other: "CustomNameCensus") -> "CustomNameCensus":
        out = CustomNameCensus(cap=min(self.cap, other.cap))
        if self.counts is not None and other.counts is not None:
            out.counts = self.counts + other.counts
            if len(out.counts) > out.cap:
                out._degrade()
            return out
        out.counts = None
        out._hashes = set()
        for side in (self, other):
            if side.counts is not None:
                out._hashes |= {_hash64(name) for name in side.counts}
            else:
                out._hashes |= side._hashes or set()
        out._prune()
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CustomNameCensus):
            return NotImplemented
        return (self.counts, self._hashes) == (other.counts, other._hashes)


@dataclass
class AuditTally:
    """Mergeable counters over record reports. Single-writer; parallel
    audits keep one tally per shard and merge at the end."""

    dictionary_version: str = ""
    policy_signature: str = ""
    census_cap: int = 10**6
    total_records: int = 0
    total_attributes: int = 0
    records_with_zero_attributes: int = 0
    records_with_any_attribute: int = 0
    per_group: dict[ValidationGroup, GroupTally] = field(
        default_factory=lambda: {g: GroupTally() for g in GROUP_ORDER}
    )
    term_group_attempted: int = 0
    custom_attribute_occurrences: int = 0
    records_with_custom: int = 0
    custom_name_census: CustomNameCensus = None  # type: ignore[assignment]
    owner_census: set[str] = field(default_factory=set)
    package_histogram: Counter = field(default_factory=Counter)
    resolver_failures: int = 0

    def __post_init__(self):
        if self.custom_name_census is None:
            self.custom_name_census = CustomNameCensus(cap=self.census_cap)


def new_tally(dictionary_version: str = "", policy_signature: str = "", census_cap: int = 10**6) -> AuditTally:
    """Fresh all-zero tally; the identity element for merge."""
    return AuditTally(
        dictionary_version=dictionary_version,
        policy_signature=policy_signature,
        census_cap=census_cap,
    )


def accumulate(tally: AuditTally, report: RecordReport) -> AuditTally:
    """Fold one record report into the tally (mutates and returns it)."""
    tally.total_records += 1
    tally.package_histogram[report.package_name] += 1
    if report.per_attribute:
        tally.records_with_any_attribute += 1
    else:
        tally.records_with_zero_attributes += 1

    containing: set[ValidationGroup] = set()
    all_valid: dict[ValidationGroup, bool] = {}
    any_valid: set[ValidationGroup] = set()
    has_custom = False

    for _attr, cls, verdict in report.per_attribute:
        tally.total_attributes += 1
        if "resolver_unavailable" in verdict.reason:
            tally.resolver_failures += 1
        if not cls.in_dictionary:
            has_custom = True
            tally.custom_attribute_occurrences += 1
            tally.custom_name_census.add(cls.normalized_name)
            continue
        group = verdict.group
        if group in tally.per_group:
            if not verdict.filled_in:
                continue
            gt = tally.per_group[group]
            gt.filled_in += 1
            containing.add(group)
            if verdict.well_specified == VALID:
                gt.well_specified += 1
                any_valid.add(group)
                all_valid.setdefault(group, True)
            elif verdict.well_specified == INVALID:
                gt.invalid += 1
                all_valid[group] = False
            else:
                gt.not_assessed_resolver += 1
                all_valid[group] = False
        elif group is ValidationGroup.TERM and verdict.filled_in:
            tally.term_group_attempted += 1

    for group in containing:
        gt = tally.per_group[group]
        gt.records_containing += 1
        if all_valid.get(group, False):
            gt.records_all_valid += 1
        if group in any_valid:
            gt.records_any_valid += 1

    if has_custom:
        tally.records_with_custom += 1
        if report.owner_name:
            tally.owner_census.add(report.owner_name)
    return tally


def _is_identity(tally: AuditTally) -> bool:
    return not tally.dictionary_version and not tally.policy_signature


def merge(a: AuditTally, b: AuditTally) -> AuditTally:
    """Component-wise sum of two tallies. Tallies must come from the same
    dictionary version and policy (a fresh identity tally matches anything)."""
    for attr in ("dictionary_version", "policy_signature"):
        left, right = getattr(a, attr), getattr(b, attr)
        if left and right and left != right and not _is_identity(a) and not _is_identity(b):
            raise TallyMismatchError(f"cannot merge tallies with different {attr}: {left!r} != {right!r}")
    out = new_tally(
        dictionary_version=a.dictionary_version or b.dictionary_version,
        policy_signature=a.policy_signature or b.policy_signature,
        census_cap=min(a.census_cap, b.census_cap),
    )
    out.total_records = a.total_records + b.total_records
    out.total_attributes = a.total_attributes + b.total_attributes
    out.records_with_zero_attributes = a.records_with_zero_attributes + b.records_with_zero_attributes
    out.records_with_any_attribute = a.records_with_any_attribute + b.records_with_any_attribute
    out.per_group = {g: a.per_group[g].merged(b.per_group[g]) for g in GROUP_ORDER}
    out.term_group_attempted = a.term_group_attempted + b.term_group_attempted
    out.custom_attribute_occurrences = a.custom_attribute_occurrences + b.custom_attribute_occurrences
    out.records_with_custom = a.records_with_custom + b.records_with_custom
    out.custom_name_census = a.custom_name_census.merged(b.custom_name_census)
    out.owner_census = a.owner_census | b.owner_census
    out.package_histogram = a.package_histogram + b.package_histogram
    out.resolver_failures = a.resolver_failures + b.resolver_failures
    return out


@dataclass
class AuditSummary:
    """The finalized audit report. Renders to JSON/CSV/text-table; the JSON
    form parses back to an equal summary."""

    corpus: dict[str, Any]
    groups: list[dict[str, Any]]
    census: dict[str, Any]
    packages: list[dict[str, Any]]
    provenance: dict[str, Any]
    report_version: int = 1

    def to_json(self) -> str:
        doc = {
            "report_version": self.report_version,
            "corpus": self.corpus,
            "groups": self.groups,
            "census": self.census,
            "packages": self.packages,
            "provenance": self.provenance,
        }
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "AuditSummary":
        doc = json.loads(text)
        return cls(
            corpus=doc["corpus"],
            groups=doc["groups"],
            census=doc["census"],
            packages=doc["packages"],
            provenance=doc["provenance"],
            report_version=doc.get("report_version", 1),
        )


NAME_NORMALIZATION_NOTE = "lower-case, trim, collapse whitespace runs, underscores to spaces (names only)"
VALUE_NORMALIZATION_NOTE = "case-fold, trim, collapse whitespace runs, underscores preserved"
PACKAGE_PRECEDENCE_NOTE = "explicit Package element overrides the first Models/Model entry"


def finalize(
    tally: AuditTally,
    corpus_info: Optional[Mapping[str, Any]] = None,
    provenance: Optional[Mapping[str, Any]] = None,
    report_any_valid: bool = False,
) -> AuditSummary:
    """Compute all percentages and assemble the summary. Resolver-unavailable
    verdicts are excluded from the well-specified percent's numerator and
    denominator; they appear in the separate not_assessed column."""
    corpus: dict[str, Any] = dict(corpus_info or {})
    corpus["total_records"] = tally.total_records
    corpus["total_attributes"] = tally.total_attributes
    corpus["records_with_zero_attributes"] = tally.records_with_zero_attributes
    # Computed share, not copied from anywhere: callers can check the arithmetic.
    corpus["records_with_zero_attributes_percent_detailed"] = percent_1dp(
        tally.records_with_zero_attributes, tally.total_records
    )
    corpus["records_with_any_attribute"] = tally.records_with_any_attribute
    if tally.total_records > 0:
        mean = Decimal(tally.total_attributes) / Decimal(tally.total_records)
        corpus["mean_attributes_per_record"] = int(mean.quantize(Decimal("1"), rounding=ROUND_HALF_UP))
        corpus["mean_attributes_per_record_detailed"] = float(
            mean.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
        )
    else:
        corpus["mean_attributes_per_record"] = None
        corpus["mean_attributes_per_record_detailed"] = None

    groups: list[dict[str, Any]] = []
    for group in GROUP_ORDER:
        gt = tally.per_group[group]
        assessed = gt.filled_in - gt.not_assessed_resolver
        row: dict[str, Any] = {
            "group": group.value,
            "filled_in": gt.filled_in,
            "well_specified": gt.well_specified,
            "invalid": gt.invalid,
            "not_assessed": gt.not_assessed_resolver,
            "percent": percent_int(gt.well_specified, assessed),
            "percent_detailed": percent_1dp(gt.well_specified, assessed),
            "records_containing": gt.records_containing,
            "records_all_valid": gt.records_all_valid,
            "record_percent": percent_int(gt.records_all_valid, gt.records_containing),
            "record_percent_detailed": percent_1dp(gt.records_all_valid, gt.records_containing),
        }
        if report_any_valid:
            row["records_any_valid"] = gt.records_any_valid
            row["record_any_valid_percent"] = percent_int(gt.records_any_valid, gt.records_containing)
        groups.append(row)

    census = {
        "unique_custom_names": tally.custom_name_census.distinct(),
        "approximate": tally.custom_name_census.approximate,
        "custom_attribute_occurrences": tally.custom_attribute_occurrences,
        "custom_occurrence_percent": percent_int(tally.custom_attribute_occurrences, tally.total_attributes),
        "custom_occurrence_percent_detailed": percent_1dp(
            tally.custom_attribute_occurrences, tally.total_attributes
        ),
        "records_with_custom": tally.records_with_custom,
        "records_with_custom_percent": percent_int(tally.records_with_custom, tally.total_records),
        "records_with_custom_percent_detailed": percent_1dp(tally.records_with_custom, tally.total_records),
        "custom_owner_count": len(tally.owner_census),
        "term_group_attempted": tally.term_group_attempted,
    }

    packages = [
        {
            "name": name,
            "count": count,
            "percent": percent_int(count, tally.total_records),
            "percent_detailed": percent_1dp(count, tally.total_records),
        }
        for name, count in sorted(tally.package_histogram.items(), key=lambda kv: (-kv[1], kv[0]))
    ]

    prov: dict[str, Any] = {
        "dictionary_version": tally.dictionary_version,
        "policy_signature": tally.policy_signature,
        "name_normalization": NAME_NORMALIZATION_NOTE,
        "value_normalization": VALUE_NORMALIZATION_NOTE,
        "package_precedence": PACKAGE_PRECEDENCE_NOTE,
        "record_validity": "any_valid_also_reported" if report_any_valid else "all_valid",
        "resolver_failures": tally.resolver_failures,
    }
    prov.update(provenance or {})

    return AuditSummary(corpus=corpus, groups=groups, census=census, packages=packages, provenance=prov)


def render_summary(summary: AuditSummary, format: str = "json") -> str:
    """Render the summary as json (full report), csv (one row per group,
    fixed columns), or a human-readable table."""
    if format == "json":
        return summary.to_json()
    if format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in summary.groups:
            writer.writerow(["" if row[col] is None else row[col] for col in CSV_COLUMNS])
        return buffer.getvalue()
    if format == "table":
        header = ("Attribute type", "# Filled-in values", "# Well-specified values", "% Well-specified values")
        rows = [header]
        for row in summary.groups:
            percent = row["percent"]
            rows.append(
                (
                    GROUP_DISPLAY[ValidationGroup(row["group"])],
                    f"{row['filled_in']:,}",
                    f"{row['well_specified']:,}",
                    "-" if percent is None else f"{percent}%",
                )
            )
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)).rstrip() for r in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown render format {format!r}")


def parse_summary(text: str) -> AuditSummary:
    """Inverse of the json rendering."""
    return AuditSummary.from_json(text)
