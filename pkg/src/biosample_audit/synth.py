"""Synthetic corpus generation with planted ground truth.

The generator emits a corpus (XML or jsonl, optionally gzipped) plus a
manifest recording the exact planted counts per group: filled-in values,
well-specified values, record-level counts, the custom-name census, and the
package histogram. The manifest is computed with independent arithmetic
during generation, so an audit of the output can be checked against it
count-for-count.

Planted invalid values are drawn from catalogued real-world anomalies
(misspelled value-set members, pseudo-booleans like ``never smoker``,
species names where integers belong, underscored ontology labels), and
planted valid values are byte-exact so they hold under both lenient and
strict matching policies.
"""

from __future__ import annotations

import gzip
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Iterator, Mapping, Optional, Union
from xml.sax.saxutils import escape, quoteattr

from .ingest import Attribute, SampleRecord, record_to_jsonl_dict

__all__ = ["SynthSpec", "generate_corpus", "DISEASE_TERMS", "SEX_VALUES"]

#: Labels that must stay aligned with fixtures/terms_doid.tsv.
DISEASE_TERMS = (
    "gastrointestinal stromal tumor",
    "lung squamous carcinoma",
    "melanoma",
    "asthma",
    "diabetes mellitus",
    "HIV",
)

DISEASE_INVALID = (
    "gastrointestinal stromal tumor_4",
    "HIV_Positive",
    "lung_squamous_carcinoma",
    "infected with Tomato spotted wilt virus isolate p105RBMar",
    "42",
)

#: The ten accepted sex values.
SEX_VALUES = (
    "male",
    "female",
    "pooled male and female",
    "neuter",
    "hermaphrodite",
    "intersex",
    "not determined",
    "missing",
    "not applicable",
    "not collected",
)

SEX_INVALID = (
    "castrated horse",
    "gynoparae",
    "mal e",
    "makle",
    "femLE",
    "Department I of Internal Medicine",
    "m",
    "f",
    "7",
    "Sexual equality",
    "parthenogenic",
    "uncertainty",
)

BOOLEAN_INVALID = (
    "yes",
    "no",
    "Y",
    "N",
    "0",
    "--",
    "never",
    "never smoker",
    "Former",
    "ex-smoker",
    "Non-smoker",
    "nonsmoker",
    "current smoker",
)

INTEGER_INVALID = (
    "Mus musculus",
    "N/A",
    "NO",
    "e;N/A",
    "3.5",
    "1e5",
    "twelve",
    "12 years",
    "9223372036854775808",
)

CUSTOM_NAME_POOL = (
    "Lab_Batch_ID",
    "sample storage buffer",
    "Internal_QC_Flag",
    "sequencing robot",
    "freezer shelf",
    "Collection_Protocol_Rev",
    "spike in mix",
)

OWNER_POOL = (
    "Coastal Genomics Lab",
    "Highland Sequencing Center",
    "Metabolite Survey Group",
    "Plankton Ecology Unit",
    "Urban Microbiome Initiative",
)

ORGANISMS = (
    (9606, "Homo sapiens"),
    (10090, "Mus musculus"),
    (562, "Escherichia coli"),
    (4932, "Saccharomyces cerevisiae"),
)

#: Attribute names used for each planted group, with display-name variants
#: exercising the name-normalization path.
GROUP_ATTRIBUTES = {
    "ontology_term": ("disease", ("disease", "Disease")),
    "value_set": ("sex", ("sex", "Sex")),
    "boolean": ("smoker", ("smoker", "Smoker")),
    "integer": ("host taxonomy id", ("host taxonomy id", "Host_Taxonomy_ID")),
}

ASSESSED_TAGS = ("ontology_term", "value_set", "boolean", "integer")

DEFAULT_VALID_FRACTIONS = {
    "ontology_term": 0.32,
    "value_set": 0.92,
    "boolean": 0.27,
    "integer": 0.74,
}

DEFAULT_PACKAGE_MIX = {"Generic": 0.85, "Pathogen": 0.10, "Human": 0.05}


@dataclass(frozen=True)
class SynthSpec:
    """Generation parameters. The seed makes output byte-identical across
    runs; every fraction lies in [0, 1]."""

    record_count: int
    seed: int = 0
    valid_fractions: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_VALID_FRACTIONS))
    custom_fraction: float = 0.15
    zero_attribute_fraction: float = 0.03
    duplicate_fraction: float = 0.05
    term_fraction: float = 0.0
    unit_fraction: float = 0.10
    package_mix: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_PACKAGE_MIX))

    def __post_init__(self):
        if self.record_count < 0:
            raise ValueError("record_count must be non-negative")
        fractions = dict(self.valid_fractions)
        for tag in ASSESSED_TAGS:
            fractions.setdefault(tag, DEFAULT_VALID_FRACTIONS[tag])
        for tag, value in fractions.items():
            if tag not in ASSESSED_TAGS:
                raise ValueError(f"unknown group tag {tag!r} in valid_fractions")
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"valid fraction for {tag} must be in [0, 1]")
        object.__setattr__(self, "valid_fractions", fractions)
        for name in ("custom_fraction", "zero_attribute_fraction", "duplicate_fraction", "term_fraction", "unit_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if not self.package_mix or any(w < 0 for w in self.package_mix.values()) or sum(self.package_mix.values()) <= 0:
            raise ValueError("package_mix needs non-negative weights summing to a positive total")


def _balanced_count(fraction: float, total: int) -> int:
    """Exact planted count: half-up rounding of fraction*total."""
    return int(math.floor(fraction * total + 0.5))


def _case_mask(word: str, rng: random.Random) -> str:
    return "".join(ch.upper() if rng.random() < 0.5 else ch for ch in word)


class _Plan:
    """Pre-drawn per-record structure plus exact validity assignments."""

    def __init__(self, spec: SynthSpec, rng: random.Random):
        n = spec.record_count
        self.zero_attr = [rng.random() < spec.zero_attribute_fraction for _ in range(n)]
        nonempty = [i for i in range(n) if not self.zero_attr[i]]
        names = list(spec.package_mix)
        weights = [spec.package_mix[name] for name in names]
        self.package = [
            "Generic" if self.zero_attr[i] else rng.choices(names, weights=weights)[0] for i in range(n)
        ]
        self.occurrences: dict[str, list[int]] = {}
        self.validity: dict[str, Iterator[bool]] = {}
        self.planted: dict[str, dict[str, int]] = {}
        for tag in ASSESSED_TAGS:
            occ = [0] * n
            for i in nonempty:
                occ[i] = 2 if rng.random() < spec.duplicate_fraction else 1
            total = sum(occ)
            valid_count = _balanced_count(spec.valid_fractions[tag], total)
            flags = [True] * valid_count + [False] * (total - valid_count)
            rng.shuffle(flags)
            self.occurrences[tag] = occ
            self.validity[tag] = iter(flags)
            self.planted[tag] = {"filled_in": total, "well_specified": valid_count, "invalid": total - valid_count}
        custom_record_count = _balanced_count(spec.custom_fraction, len(nonempty))
        self.custom_records = set(rng.sample(nonempty, custom_record_count)) if custom_record_count else set()
        self.custom_extra = {i: rng.random() < 0.25 for i in self.custom_records}
        self.has_term = [not self.zero_attr[i] and rng.random() < spec.term_fraction for i in range(n)]
        self.has_unit = [not self.zero_attr[i] and rng.random() < spec.unit_fraction for i in range(n)]
        self.owner = [rng.choice(OWNER_POOL) for _ in range(n)]


def _iter_records(spec: SynthSpec, plan: _Plan, rng: random.Random, manifest: dict[str, Any]) -> Iterator[SampleRecord]:
    group_counts = {tag: dict(plan.planted[tag], records_containing=0, records_all_valid=0) for tag in ASSESSED_TAGS}
    custom_names: dict[str, int] = {}
    custom_owners: set[str] = set()
    packages: dict[str, int] = {}
    total_attributes = 0
    records_with_custom = 0
    term_attempted = 0

    for i in range(spec.record_count):
        package = plan.package[i]
        packages[package] = packages.get(package, 0) + 1
        attributes: list[Attribute] = []

        if not plan.zero_attr[i]:
            for tag in ASSESSED_TAGS:
                occ = plan.occurrences[tag][i]
                if not occ:
                    continue
                flags = [next(plan.validity[tag]) for _ in range(occ)]
                for flag in flags:
                    attributes.append(_group_attribute(tag, flag, rng))
                counts = group_counts[tag]
                counts["records_containing"] += 1
                if all(flags):
                    counts["records_all_valid"] += 1
            if i in plan.custom_records:
                records_with_custom += 1
                custom_owners.add(plan.owner[i])
                occurrences = 2 if plan.custom_extra[i] else 1
                for _ in range(occurrences):
                    raw = rng.choice(CUSTOM_NAME_POOL)
                    normalized = " ".join(raw.replace("_", " ").split()).lower()
                    custom_names[normalized] = custom_names.get(normalized, 0) + 1
                    attributes.append(Attribute(raw_name=raw, value=f"batch-{rng.randrange(1000)}"))
            if plan.has_term[i]:
                attributes.append(Attribute(raw_name="cell type", value=rng.choice(("male", "hive cell S29", "for pig and horse"))))
                term_attempted += 1
            if plan.has_unit[i]:
                value = "" if rng.random() < 0.3 else str(rng.randrange(1, 90))
                attributes.append(Attribute(raw_name="age", value=value))
            rng.shuffle(attributes)

        total_attributes += len(attributes)
        taxid, organism = rng.choice(ORGANISMS) if package != "Human" else (9606, "Homo sapiens")
        yield SampleRecord(
            accession=f"SYN{i:08d}",
            sample_id=str(i + 1),
            publication_date=f"2016-{1 + i % 12:02d}-{1 + i % 28:02d}",
            access="public",
            organism_taxid=taxid,
            organism_name=organism,
            owner_name=plan.owner[i],
            package_name=package,
            status="live",
            status_date=f"2017-{1 + i % 12:02d}-{1 + i % 28:02d}",
            attributes=tuple(attributes),
        )

    zero_count = sum(plan.zero_attr)
    manifest["totals"] = {
        "records": spec.record_count,
        "attributes": total_attributes,
        "records_with_zero_attributes": zero_count,
        "records_with_any_attribute": spec.record_count - zero_count,
    }
    manifest["groups"] = group_counts
    manifest["custom"] = {
        "occurrences": sum(custom_names.values()),
        "unique_names": len(custom_names),
        "records_with_custom": records_with_custom,
        "owner_count": len(custom_owners),
        "names": dict(sorted(custom_names.items())),
    }
    manifest["packages"] = dict(sorted(packages.items()))
    manifest["term_attempted"] = term_attempted


def _group_attribute(tag: str, valid: bool, rng: random.Random) -> Attribute:
    harmonized, raw_variants = GROUP_ATTRIBUTES[tag]
    raw = rng.choice(raw_variants)
    harmonized_name = harmonized if rng.random() < 0.5 else None
    if tag == "boolean":
        value = _case_mask(rng.choice(("true", "false")), rng) if valid else rng.choice(BOOLEAN_INVALID)
    elif tag == "integer":
        value = str(rng.randint(-(10**12), 10**12)) if valid else rng.choice(INTEGER_INVALID)
    elif tag == "value_set":
        value = rng.choice(SEX_VALUES) if valid else rng.choice(SEX_INVALID)
    else:
        value = rng.choice(DISEASE_TERMS) if valid else rng.choice(DISEASE_INVALID)
    return Attribute(raw_name=raw, harmonized_name=harmonized_name, value=value)


def _write_xml(records: Iterator[SampleRecord], fh: IO[str]) -> None:
    fh.write('<?xml version="1.0" encoding="UTF-8"?>\n<BioSampleSet>\n')
    for record in records:
        parts = [f"  <BioSample id={quoteattr(record.sample_id)} accession={quoteattr(record.accession)}"]
        for xml_attr, value in (
            ("publication_date", record.publication_date),
            ("last_update", record.last_update_date),
            ("submission_date", record.submission_date),
        ):
            if value is not None:
                parts.append(f" {xml_attr}={quoteattr(value)}")
        parts.append(f" access={quoteattr(record.access)}>\n")
        if record.organism_taxid is not None or record.organism_name is not None:
            taxid = "" if record.organism_taxid is None else str(record.organism_taxid)
            name = record.organism_name or ""
            parts.append(
                f"    <Description><Organism taxonomy_id={quoteattr(taxid)} taxonomy_name={quoteattr(name)}/></Description>\n"
            )
        if record.owner_name is not None:
            parts.append(f"    <Owner><Name>{escape(record.owner_name)}</Name></Owner>\n")
        parts.append(f"    <Models><Model>{escape(record.package_name)}</Model></Models>\n")
        if record.status or record.status_date is not None:
            when = "" if record.status_date is None else f" when={quoteattr(record.status_date)}"
            parts.append(f"    <Status status={quoteattr(record.status)}{when}/>\n")
        parts.append("    <Attributes>\n")
        for attr in record.attributes:
            harmonized = (
                "" if attr.harmonized_name is None else f" harmonized_name={quoteattr(attr.harmonized_name)}"
            )
            parts.append(
                f"      <Attribute attribute_name={quoteattr(attr.raw_name)}{harmonized}>{escape(attr.value)}</Attribute>\n"
            )
        parts.append("    </Attributes>\n  </BioSample>\n")
        fh.write("".join(parts))
    fh.write("</BioSampleSet>\n")


def _write_jsonl(records: Iterator[SampleRecord], fh: IO[str]) -> None:
    for record in records:
        fh.write(json.dumps(record_to_jsonl_dict(record), ensure_ascii=False))
        fh.write("\n")


def generate_corpus(
    spec: SynthSpec,
    out_path: Union[str, Path],
    format: str = "biosample-xml",
    manifest_path: Optional[Union[str, Path]] = None,
) -> dict[str, Any]:
    """Write a synthetic corpus and its ground-truth manifest; returns the
    manifest. A ``.gz`` suffix on the output path gzips the corpus."""
    if format not in ("biosample-xml", "jsonl"):
        raise ValueError(f"unknown corpus format {format!r}")
    out_path = Path(out_path)
    manifest_path = Path(manifest_path) if manifest_path else out_path.with_name(out_path.name + ".manifest.json")

    rng = random.Random(spec.seed)
    plan = _Plan(spec, rng)
    manifest: dict[str, Any] = {
        "spec": {
            "record_count": spec.record_count,
            "seed": spec.seed,
            "valid_fractions": dict(spec.valid_fractions),
            "custom_fraction": spec.custom_fraction,
            "zero_attribute_fraction": spec.zero_attribute_fraction,
            "duplicate_fraction": spec.duplicate_fraction,
            "term_fraction": spec.term_fraction,
            "unit_fraction": spec.unit_fraction,
            "package_mix": dict(spec.package_mix),
        },
        "format": format,
    }

    records = _iter_records(spec, plan, rng, manifest)
    opener = gzip.open if out_path.suffix == ".gz" else open
    with opener(out_path, "wt", encoding="utf-8", newline="") as fh:  # type: ignore[operator]
        if format == "biosample-xml":
            _write_xml(records, fh)
        else:
            _write_jsonl(records, fh)

    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    return manifest
