"""Ontology term resolution.

Terms are resolved either against a local index built from flat TSV term
files, or against a BioPortal-compatible HTTP search service. The remote
client applies a sliding-window rate limit, retries transient failures with
exponential backoff, and keeps a persistent append-only query cache so a
repeated audit never re-asks the service the same question.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import httpx

from .normalize import normalize_value

__all__ = [
    "TermHit",
    "TermIndex",
    "TermFileError",
    "ResolverUnavailable",
    "ResolverConfig",
    "QueryCache",
    "RateLimiter",
    "LocalResolver",
    "RemoteResolver",
    "FallbackResolver",
    "build_term_index",
    "make_resolver",
]

logger = logging.getLogger(__name__)

MATCH_KINDS = ("exact", "prefix", "token")
_KIND_RANK = {kind: rank for rank, kind in enumerate(MATCH_KINDS)}
_MATCHED_ON_RANK = {"label": 0, "synonym": 1}


class TermFileError(ValueError):
    """A term file is malformed; the message carries file and line number."""


class ResolverUnavailable(RuntimeError):
    """The resolver cannot answer (remote outage after retries, or no
    resolution capability was configured). Callers map this to a
    ``not_assessed`` verdict, never to ``invalid``."""


@dataclass(frozen=True, slots=True)
class TermHit:
    ontology_acronym: str
    term_iri: str
    preferred_label: str
    matched_on: str  # label | synonym
    match_kind: str  # exact | prefix | token


@dataclass(frozen=True, slots=True)
class _IndexEntry:
    term_iri: str
    preferred_label: str
    matched_on: str
    matched_text: str  # the label/synonym exactly as written in the source


class TermIndex:
    """Immutable per-ontology mapping of normalized labels and synonyms to
    term entries. Unrestricted concurrent reads are safe."""

    def __init__(self, entries: Iterable[tuple[str, str, _IndexEntry]] = ()):
        per_ontology: dict[str, dict[str, list[_IndexEntry]]] = {}
        seen: set[tuple[str, str, str, str]] = set()
        for acronym, key, entry in entries:
            dedup_key = (acronym, entry.term_iri, entry.matched_on, key)
            if dedup_key in seen:
                continue
            seen.add(dedup_key)
            per_ontology.setdefault(acronym, {}).setdefault(key, []).append(entry)
        for buckets in per_ontology.values():
            for bucket in buckets.values():
                bucket.sort(key=lambda e: (e.term_iri, _MATCHED_ON_RANK.get(e.matched_on, 9)))
        self._per_ontology = per_ontology

    def ontologies(self) -> list[str]:
        return sorted(self._per_ontology)

    def __len__(self) -> int:
        return sum(len(buckets) for buckets in self._per_ontology.values())

    def exact(self, query: str, ontology_acronym: str) -> Optional[TermHit]:
        """First exact hit for the normalized query within one ontology;
        ties resolve to the lexicographically smallest term IRI."""
        key = normalize_value(query)
        if not key:
            return None
        bucket = self._per_ontology.get(ontology_acronym, {}).get(key)
        if not bucket:
            return None
        entry = bucket[0]
        return TermHit(
            ontology_acronym=ontology_acronym,
            term_iri=entry.term_iri,
            preferred_label=entry.preferred_label,
            matched_on=entry.matched_on,
            match_kind="exact",
        )

    def exact_strict(self, query: str, ontology_acronym: str) -> Optional[TermHit]:
        """Exact hit requiring the query to equal the indexed label/synonym
        byte-for-byte (after trimming outer whitespace only)."""
        key = normalize_value(query)
        wanted = query.strip()
        if not key:
            return None
        for entry in self._per_ontology.get(ontology_acronym, {}).get(key, []):
            if entry.matched_text == wanted:
                return TermHit(
                    ontology_acronym=ontology_acronym,
                    term_iri=entry.term_iri,
                    preferred_label=entry.preferred_label,
                    matched_on=entry.matched_on,
                    match_kind="exact",
                )
        return None

    def search(self, query: str, limit: int, ontologies: Optional[Sequence[str]] = None) -> list[TermHit]:
        """Ranked candidates across ontologies: exact before prefix before
        token overlap (higher overlap first), ties broken by
        (ontology_acronym, term_iri). Deterministic total order."""
        norm = normalize_value(query)
        if not norm or limit < 1:
            return []
        tokens = set(norm.split())
        scope = self.ontologies() if ontologies is None else [a for a in sorted(ontologies) if a in self._per_ontology]
        candidates: list[tuple[tuple, TermHit]] = []
        for acronym in scope:
            for key, bucket in self._per_ontology[acronym].items():
                if key == norm:
                    kind, overlap = "exact", len(tokens)
                elif key.startswith(norm):
                    kind, overlap = "prefix", len(tokens)
                else:
                    overlap = len(tokens & set(key.split()))
                    if overlap == 0:
                        continue
                    kind = "token"
                for entry in bucket:
                    rank = (
                        _KIND_RANK[kind],
                        -overlap,
                        acronym,
                        entry.term_iri,
                        _MATCHED_ON_RANK.get(entry.matched_on, 9),
                        key,
                    )
                    hit = TermHit(
                        ontology_acronym=acronym,
                        term_iri=entry.term_iri,
                        preferred_label=entry.preferred_label,
                        matched_on=entry.matched_on,
                        match_kind=kind,
                    )
                    candidates.append((rank, hit))
        candidates.sort(key=lambda pair: pair[0])
        hits: list[TermHit] = []
        taken: set[tuple[str, str]] = set()
        for _, hit in candidates:
            ident = (hit.ontology_acronym, hit.term_iri)
            if ident in taken:
                continue
            taken.add(ident)
            hits.append(hit)
            if len(hits) >= limit:
                break
        return hits


_TERM_FILE_HEADER = ["ontology", "iri", "label", "synonyms"]


def build_term_index(sources: Sequence[Union[str, Path]]) -> TermIndex:
    """Build a TermIndex from TSV term files (columns: ontology, iri, label,
    synonyms; synonyms pipe-separated). Deterministic; duplicates are
    tolerated and deduplicated."""
    entries: list[tuple[str, str, _IndexEntry]] = []
    for source in sources:
        path = Path(source)
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            if header != _TERM_FILE_HEADER:
                raise TermFileError(f"{path} line 1: expected header {_TERM_FILE_HEADER}, found {header}")
            for lineno, line in enumerate(fh, start=2):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                fields = line.split("\t")
                if len(fields) != 4:
                    raise TermFileError(f"{path} line {lineno}: expected 4 tab-separated fields, found {len(fields)}")
                acronym, iri, label, synonyms = fields
                acronym = acronym.strip().upper()
                iri = iri.strip()
                if not acronym or not iri or not label.strip():
                    raise TermFileError(f"{path} line {lineno}: ontology, iri, and label must be non-empty")
                key = normalize_value(label)
                entries.append(
                    (acronym, key, _IndexEntry(iri, label, "label", label))
                )
                for synonym in synonyms.split("|"):
                    synonym = synonym.strip()
                    if not synonym:
                        continue
                    entries.append(
                        (acronym, normalize_value(synonym), _IndexEntry(iri, label, "synonym", synonym))
                    )
    return TermIndex(entries)


@dataclass(frozen=True)
class ResolverConfig:
    """Resolution settings. Remote modes require an endpoint URL."""

    mode: str = "local"  # local | remote | remote_with_local_fallback
    endpoint_url: Optional[str] = None
    api_key: Optional[str] = None
    rate_limit: float = 5.0  # requests per second
    max_retries: int = 3
    cache_path: Optional[str] = None
    timeout: float = 10.0
    backoff_base: float = 0.25

    def __post_init__(self):
        if self.mode not in ("local", "remote", "remote_with_local_fallback"):
            raise ValueError(f"unknown resolver mode {self.mode!r}")
        if self.mode != "local" and not self.endpoint_url:
            raise ValueError(f"resolver mode {self.mode!r} requires an endpoint URL")
        if self.rate_limit <= 0:
            raise ValueError("rate_limit must be positive")


class RateLimiter:
    """Sliding-window request admission: at most ``rate`` request starts in
    any one-second window. Thread-safe; admission is serialized."""

    def __init__(self, rate: float):
        self.rate = rate
        self._window = 1.0
        self._starts: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            while True:
                now = time.monotonic()
                while self._starts and now - self._starts[0] >= self._window:
                    self._starts.popleft()
                if len(self._starts) < self.rate:
                    self._starts.append(now)
                    return
                # Small margin keeps the boundary request out of the window.
                time.sleep(self._starts[0] + self._window - now + 0.005)


def cache_key(query: str, scope: str, exact: bool) -> str:
    """Stable digest of (normalized query, ontology scope, exactness)."""
    payload = json.dumps([normalize_value(query), scope, bool(exact)], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class QueryCache:
    """Persistent query cache: an append-only log of JSON lines. A corrupt
    file is rebuilt empty with a warning, never a crash. Entries never
    expire within a run; delete the file to clear."""

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, list[TermHit]] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        entries: dict[str, list[TermHit]] = {}
        try:
            with open(self.path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    doc = json.loads(line)
                    hits = [TermHit(**hit) for hit in doc["hits"]]
                    entries[doc["key"]] = hits
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            logger.warning("cache file %s is corrupt (%s); rebuilding empty", self.path, exc)
            self._entries = {}
            try:
                self.path.write_text("", encoding="utf-8")
            except OSError:
                pass
            return
        self._entries = entries

    def get(self, key: str) -> Optional[list[TermHit]]:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, hits: list[TermHit]) -> None:
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = hits
            if self.path is None:
                return
            doc = {
                "key": key,
                "hits": [_hit_dict(hit) for hit in hits],
                "fetched_at": time.time(),
            }
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(doc, ensure_ascii=False))
                    fh.write("\n")
                    fh.flush()
            except OSError as exc:
                logger.warning("cannot append to cache file %s: %s", self.path, exc)


def _hit_dict(hit: TermHit) -> dict:
    return {
        "ontology_acronym": hit.ontology_acronym,
        "term_iri": hit.term_iri,
        "preferred_label": hit.preferred_label,
        "matched_on": hit.matched_on,
        "match_kind": hit.match_kind,
    }


class LocalResolver:
    """Resolution against an in-memory TermIndex."""

    def __init__(self, index: TermIndex):
        self.index = index

    def resolve_exact(self, query: str, ontology_acronym: str, strict: bool = False) -> Optional[TermHit]:
        if strict:
            return self.index.exact_strict(query, ontology_acronym)
        return self.index.exact(query, ontology_acronym)

    def search_any(self, query: str, limit: int = 5) -> list[TermHit]:
        return self.index.search(query, limit)


class RemoteResolver:
    """Client for a BioPortal-compatible search service.

    GET {endpoint}/search?q=...&ontologies=ACR&require_exact_match=true&pagesize=N
    with header ``Authorization: apikey token={api_key}``. Responses carry a
    ``collection`` array of objects with ``@id``, ``prefLabel``, and a link
    naming the ontology. 4xx responses are permanent failures; 5xx and
    timeouts are retried with exponential backoff and jitter.
    """

    def __init__(self, config: ResolverConfig, transport: Optional[httpx.BaseTransport] = None):
        if not config.endpoint_url:
            raise ValueError("RemoteResolver requires an endpoint URL")
        self.config = config
        headers = {}
        if config.api_key:
            headers["Authorization"] = f"apikey token={config.api_key}"
        self._client = httpx.Client(
            base_url=config.endpoint_url.rstrip("/"),
            headers=headers,
            timeout=config.timeout,
            transport=transport,
        )
        self._limiter = RateLimiter(config.rate_limit)
        self._cache = QueryCache(config.cache_path)
        self._rng = random.Random()

    def close(self) -> None:
        self._client.close()

    def _request(self, params: dict) -> dict:
        last_error: Optional[Exception] = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                delay = self.config.backoff_base * (2 ** (attempt - 1))
                time.sleep(delay + self._rng.uniform(0, delay))
            self._limiter.acquire()
            try:
                response = self._client.get("/search", params=params)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = RuntimeError(f"server error {response.status_code}")
                continue
            if response.status_code >= 400:
                raise ResolverUnavailable(
                    f"search service rejected the request ({response.status_code}); not retrying"
                )
            try:
                return response.json()
            except ValueError as exc:
                last_error = exc
                continue
        raise ResolverUnavailable(f"search service unavailable after {self.config.max_retries + 1} attempts: {last_error}")

    def _hits_from_response(self, document: dict, query: str) -> list[TermHit]:
        norm = normalize_value(query)
        hits: list[TermHit] = []
        for item in document.get("collection", []):
            iri = item.get("@id", "")
            label = item.get("prefLabel", "")
            if not iri:
                continue
            ontology_link = ""
            links = item.get("links", {})
            if isinstance(links, dict):
                ontology_link = str(links.get("ontology", ""))
            acronym = ontology_link.rstrip("/").rsplit("/", 1)[-1].upper() if ontology_link else ""
            synonyms = item.get("synonym", []) or []
            matched_on = "label"
            if normalize_value(label) == norm:
                kind = "exact"
            elif any(normalize_value(s) == norm for s in synonyms):
                kind, matched_on = "exact", "synonym"
            elif normalize_value(label).startswith(norm):
                kind = "prefix"
            else:
                kind = "token"
            hits.append(
                TermHit(
                    ontology_acronym=acronym,
                    term_iri=iri,
                    preferred_label=label,
                    matched_on=matched_on,
                    match_kind=kind,
                )
            )
        return hits

    def resolve_exact(self, query: str, ontology_acronym: str, strict: bool = False) -> Optional[TermHit]:
        if not normalize_value(query):
            return None
        key = cache_key(query, ontology_acronym, True)
        hits = self._cache.get(key)
        if hits is None:
            document = self._request(
                {
                    "q": query,
                    "ontologies": ontology_acronym,
                    "require_exact_match": "true",
                    "pagesize": 1,
                }
            )
            hits = self._hits_from_response(document, query)
            self._cache.put(key, hits)
        for hit in hits:
            if strict and hit.preferred_label != query.strip():
                continue
            return hit
        return None

    def search_any(self, query: str, limit: int = 5) -> list[TermHit]:
        if not normalize_value(query) or limit < 1:
            return []
        key = cache_key(query, "", False)
        hits = self._cache.get(key)
        if hits is None:
            document = self._request({"q": query, "pagesize": limit})
            hits = self._hits_from_response(document, query)
            self._cache.put(key, hits)
        return hits[:limit]


class FallbackResolver:
    """Remote resolution with a local index standing in when the service is
    unavailable."""

    def __init__(self, remote: RemoteResolver, local: LocalResolver):
        self.remote = remote
        self.local = local

    def resolve_exact(self, query: str, ontology_acronym: str, strict: bool = False) -> Optional[TermHit]:
        try:
            return self.remote.resolve_exact(query, ontology_acronym, strict=strict)
        except ResolverUnavailable:
            return self.local.resolve_exact(query, ontology_acronym, strict=strict)

    def search_any(self, query: str, limit: int = 5) -> list[TermHit]:
        try:
            return self.remote.search_any(query, limit)
        except ResolverUnavailable:
            return self.local.search_any(query, limit)


def make_resolver(
    config: ResolverConfig,
    index: Optional[TermIndex] = None,
    transport: Optional[httpx.BaseTransport] = None,
):
    """Build the resolver named by the config. Local modes require an index."""
    if config.mode == "local":
        if index is None:
            raise ValueError("local resolver mode requires a term index")
        return LocalResolver(index)
    remote = RemoteResolver(config, transport=transport)
    if config.mode == "remote":
        return remote
    if index is None:
        raise ValueError("remote_with_local_fallback requires a term index")
    return FallbackResolver(remote, LocalResolver(index))
