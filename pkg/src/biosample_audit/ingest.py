"""Streaming ingestion of sample-metadata corpora.

Two container formats are supported:

* ``biosample-xml`` — a ``BioSampleSet`` root holding one ``BioSample``
  element per record (optionally gzip-compressed);
* ``jsonl`` — one JSON object per line mirroring SampleRecord field names
  (also gzip-friendly), used for tests and fast synthetic corpora.

Records are yielded one at a time; peak memory is bounded by the largest
single record regardless of corpus size. Per-record malformation (e.g. a
record element missing its accession, or an unparseable JSON line) is
skipped and counted; container-level problems (unreadable file, wrong root
element, XML syntax errors) abort the stream.
"""

from __future__ import annotations

import gzip
import io
import json
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Any, Iterator, Optional, Union

from .normalize import normalize_name

__all__ = [
    "Attribute",
    "SampleRecord",
    "CorpusStats",
    "CorpusError",
    "RecordParseError",
    "RecordStream",
    "open_corpus",
    "parse_record",
    "normalize_attribute_name",
    "record_to_jsonl_dict",
    "record_from_jsonl_dict",
    "write_jsonl",
]

logger = logging.getLogger(__name__)

_GZIP_MAGIC = b"\x1f\x8b"
_CHUNK_SIZE = 1 << 16
_FORMATS = ("biosample-xml", "jsonl")


class CorpusError(RuntimeError):
    """Fatal container-level problem: the stream cannot continue."""


class RecordParseError(ValueError):
    """One record could not be extracted; the stream skips and continues."""


def normalize_attribute_name(raw: str) -> str:
    """Normal form used for dictionary lookup of attribute names."""
    return normalize_name(raw)


@dataclass(frozen=True, slots=True)
class Attribute:
    """One name-value pair. The value is kept raw and untrimmed; emptiness
    is meaningful for filled-in accounting."""

    raw_name: str
    value: str
    harmonized_name: Optional[str] = None


@dataclass(frozen=True, slots=True)
class SampleRecord:
    """One sample-metadata record with its provenance fields."""

    accession: str
    sample_id: str = ""
    publication_date: Optional[str] = None
    last_update_date: Optional[str] = None
    submission_date: Optional[str] = None
    access: str = "unknown"
    organism_taxid: Optional[int] = None
    organism_name: Optional[str] = None
    owner_name: Optional[str] = None
    package_name: str = "Generic"
    status: str = ""
    status_date: Optional[str] = None
    attributes: tuple[Attribute, ...] = ()


@dataclass
class CorpusStats:
    """Ingest-side accounting: records_read + parse_errors equals the number
    of record elements encountered in the source."""

    records_read: int = 0
    parse_errors: int = 0
    bytes_read: int = 0


def _child_text(elem: ET.Element, path: str) -> Optional[str]:
    child = elem.find(path)
    if child is None or child.text is None:
        return None
    return child.text


def parse_record(fragment: ET.Element) -> SampleRecord:
    """Map one well-formed ``BioSample`` element onto a SampleRecord.

    Dates are captured verbatim; absent optional fields stay absent. A
    missing accession is a record-level parse error.
    """
    accession = fragment.get("accession", "").strip()
    if not accession:
        raise RecordParseError("record element has no accession")

    access_raw = fragment.get("access")
    access = access_raw if access_raw in ("public", "controlled") else "unknown"

    organism_taxid: Optional[int] = None
    organism_name: Optional[str] = None
    organism = fragment.find("Description/Organism")
    if organism is not None:
        taxid_raw = (organism.get("taxonomy_id") or "").strip()
        if taxid_raw.isdigit():
            organism_taxid = int(taxid_raw)
        organism_name = organism.get("taxonomy_name")

    # First Model child wins; an explicit Package element overrides Models.
    package_name = _child_text(fragment, "Models/Model")
    package_override = _child_text(fragment, "Package")
    if package_override is not None and package_override.strip():
        package_name = package_override
    package_name = (package_name or "").strip() or "Generic"

    status = ""
    status_date: Optional[str] = None
    status_elem = fragment.find("Status")
    if status_elem is not None:
        status = status_elem.get("status", "")
        status_date = status_elem.get("when")

    attributes: list[Attribute] = []
    for attr_elem in fragment.iterfind("Attributes/Attribute"):
        raw_name = attr_elem.get("attribute_name", "")
        if not raw_name:
            raise RecordParseError(f"record {accession}: attribute element has no attribute_name")
        attributes.append(
            Attribute(
                raw_name=raw_name,
                harmonized_name=attr_elem.get("harmonized_name"),
                value=attr_elem.text or "",
            )
        )

    return SampleRecord(
        accession=accession,
        sample_id=fragment.get("id", ""),
        publication_date=fragment.get("publication_date"),
        last_update_date=fragment.get("last_update"),
        submission_date=fragment.get("submission_date"),
        access=access,
        organism_taxid=organism_taxid,
        organism_name=organism_name,
        owner_name=_child_text(fragment, "Owner/Name"),
        package_name=package_name,
        status=status,
        status_date=status_date,
        attributes=tuple(attributes),
    )


def record_to_jsonl_dict(record: SampleRecord) -> dict[str, Any]:
    """SampleRecord -> plain dict matching the jsonl line schema. Absent
    optional fields are omitted, not null."""
    doc: dict[str, Any] = {"accession": record.accession}
    if record.sample_id:
        doc["sample_id"] = record.sample_id
    for key in ("publication_date", "last_update_date", "submission_date"):
        value = getattr(record, key)
        if value is not None:
            doc[key] = value
    doc["access"] = record.access
    if record.organism_taxid is not None:
        doc["organism_taxid"] = record.organism_taxid
    if record.organism_name is not None:
        doc["organism_name"] = record.organism_name
    if record.owner_name is not None:
        doc["owner_name"] = record.owner_name
    doc["package_name"] = record.package_name
    doc["status"] = record.status
    if record.status_date is not None:
        doc["status_date"] = record.status_date
    attributes = []
    for attr in record.attributes:
        attr_doc: dict[str, Any] = {"name": attr.raw_name}
        if attr.harmonized_name is not None:
            attr_doc["harmonized_name"] = attr.harmonized_name
        attr_doc["value"] = attr.value
        attributes.append(attr_doc)
    doc["attributes"] = attributes
    return doc


def record_from_jsonl_dict(doc: Any) -> SampleRecord:
    if not isinstance(doc, dict):
        raise RecordParseError("jsonl line is not a JSON object")
    accession = str(doc.get("accession", "")).strip()
    if not accession:
        raise RecordParseError("jsonl record has no accession")
    attributes = []
    for entry in doc.get("attributes", []):
        if not isinstance(entry, dict) or not entry.get("name"):
            raise RecordParseError(f"record {accession}: malformed attribute entry")
        harmonized = entry.get("harmonized_name")
        attributes.append(
            Attribute(
                raw_name=str(entry["name"]),
                harmonized_name=None if harmonized is None else str(harmonized),
                value=str(entry.get("value", "")),
            )
        )
    taxid = doc.get("organism_taxid")
    if taxid is not None and (not isinstance(taxid, int) or taxid < 0):
        taxid = None
    access = doc.get("access")
    package_name = str(doc.get("package_name", "")).strip() or "Generic"

    def _opt(key: str) -> Optional[str]:
        value = doc.get(key)
        return None if value is None else str(value)

    return SampleRecord(
        accession=accession,
        sample_id=str(doc.get("sample_id", "")),
        publication_date=_opt("publication_date"),
        last_update_date=_opt("last_update_date"),
        submission_date=_opt("submission_date"),
        access=access if access in ("public", "controlled") else "unknown",
        organism_taxid=taxid,
        organism_name=_opt("organism_name"),
        owner_name=_opt("owner_name"),
        package_name=package_name,
        status=str(doc.get("status", "")),
        status_date=_opt("status_date"),
        attributes=tuple(attributes),
    )


def write_jsonl(records, destination: Union[str, Path, IO[str]]) -> int:
    """Write records to a jsonl file (or text handle); returns the count."""
    own = isinstance(destination, (str, Path))
    fh: IO[str] = open(destination, "w", encoding="utf-8") if own else destination
    count = 0
    try:
        for record in records:
            fh.write(json.dumps(record_to_jsonl_dict(record), ensure_ascii=False))
            fh.write("\n")
            count += 1
    finally:
        if own:
            fh.close()
    return count


def _open_binary(path: Union[str, Path]) -> IO[bytes]:
    """Open a corpus file, unwrapping gzip detected by magic bytes."""
    fh = open(path, "rb")
    try:
        magic = fh.read(2)
        fh.seek(0)
    except OSError:
        fh.close()
        raise
    if magic == _GZIP_MAGIC:
        return gzip.open(fh, "rb")  # type: ignore[return-value]
    return fh


def _sniff_format(path: Union[str, Path]) -> str:
    with _open_binary(path) as fh:
        head = fh.read(256).lstrip()
    return "biosample-xml" if head.startswith(b"<") else "jsonl"


class RecordStream:
    """Single-consumer iterator over a corpus file, with skip-and-count
    accounting exposed via ``stats``."""

    def __init__(self, path: Union[str, Path], format: str = "auto"):
        self.path = Path(path)
        if not self.path.is_file():
            raise CorpusError(f"corpus file not found: {self.path}")
        if format == "auto":
            format = _sniff_format(self.path)
        if format not in _FORMATS:
            raise CorpusError(f"unknown corpus format {format!r} (expected one of {_FORMATS})")
        self.format = format
        self.stats = CorpusStats()

    def __iter__(self) -> Iterator[SampleRecord]:
        if self.format == "jsonl":
            return self._iter_jsonl()
        return self._iter_xml()

    def _iter_jsonl(self) -> Iterator[SampleRecord]:
        with _open_binary(self.path) as raw:
            text = io.TextIOWrapper(raw, encoding="utf-8")
            for lineno, line in enumerate(text, start=1):
                self.stats.bytes_read += len(line)
                if not line.strip():
                    continue
                try:
                    record = record_from_jsonl_dict(json.loads(line))
                except (json.JSONDecodeError, RecordParseError) as exc:
                    self.stats.parse_errors += 1
                    logger.warning("%s line %d: skipped malformed record: %s", self.path, lineno, exc)
                    continue
                self.stats.records_read += 1
                yield record

    def _iter_xml(self) -> Iterator[SampleRecord]:
        parser = ET.XMLPullParser(events=("start", "end"))
        root: Optional[ET.Element] = None
        with _open_binary(self.path) as fh:
            while True:
                chunk = fh.read(_CHUNK_SIZE)
                try:
                    if chunk:
                        parser.feed(chunk)
                    else:
                        parser.close()
                except ET.ParseError as exc:
                    raise CorpusError(f"{self.path}: malformed XML container: {exc}") from exc
                for event, elem in parser.read_events():
                    if event == "start":
                        if root is None:
                            if elem.tag != "BioSampleSet":
                                raise CorpusError(
                                    f"{self.path}: expected BioSampleSet root, found {elem.tag!r}"
                                )
                            root = elem
                        continue
                    if elem.tag != "BioSample" or root is None:
                        continue
                    try:
                        record = parse_record(elem)
                    except RecordParseError as exc:
                        self.stats.parse_errors += 1
                        logger.warning(
                            "%s: skipped malformed record near byte %d: %s",
                            self.path,
                            self.stats.bytes_read + len(chunk or b""),
                            exc,
                        )
                    else:
                        self.stats.records_read += 1
                        yield record
                    # Drop the finished subtree so memory stays flat.
                    elem.clear()
                    root.clear()
                if chunk:
                    self.stats.bytes_read += len(chunk)
                else:
                    if root is None:
                        raise CorpusError(f"{self.path}: no XML content found")
                    return


def open_corpus(path: Union[str, Path], format: str = "auto") -> RecordStream:
    """Open a corpus for streaming. ``format`` is ``biosample-xml``,
    ``jsonl``, or ``auto`` to sniff; gzip is detected by magic bytes."""
    return RecordStream(path, format=format)
