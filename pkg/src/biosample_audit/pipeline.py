"""Batch audit pipeline: stream a corpus, validate every record, accumulate
mergeable tallies, and finalize the summary report.

Parallel runs use one ingest thread feeding a bounded queue and N validation
workers, each building its own shard tally; shards merge at the end. Because
validators are pure and merging is commutative, the report content is
independent of the worker count.
"""

from __future__ import annotations

import logging
import queue
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .dictionary import load_dictionary
from .ingest import open_corpus
from .resolve import ResolverConfig, TermIndex, build_term_index, make_resolver
from .stats import AuditSummary, AuditTally, accumulate, finalize, merge, new_tally
from .validate import DEFAULT_POLICY, INVALID, MatchPolicy, RecordReport, validate_record

__all__ = ["AuditConfig", "AuditResult", "run_audit", "anomaly_lines"]

logger = logging.getLogger(__name__)

_QUEUE_DEPTH_PER_WORKER = 64
_SENTINEL = None


@dataclass(frozen=True)
class AuditConfig:
    """Everything one audit run needs. Paths are validated at startup."""

    dictionary_path: str
    corpus_path: str
    corpus_format: str = "auto"
    terms: tuple[str, ...] = ()
    resolver: ResolverConfig = field(default_factory=ResolverConfig)
    policy: MatchPolicy = DEFAULT_POLICY
    workers: int = 1
    output_path: Optional[str] = None
    anomaly_log_path: Optional[str] = None
    record_level_any_valid: bool = False
    census_cap: int = 10**6

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class AuditResult:
    summary: AuditSummary
    tally: AuditTally
    records_read: int
    parse_errors: int
    resolver_failures: int


def anomaly_lines(report: RecordReport) -> list[str]:
    """One TSV line per invalid attribute occurrence: accession, raw name,
    normalized name, group, value, reason."""
    lines = []
    for attr, cls, verdict in report.per_attribute:
        if verdict.well_specified == INVALID:
            lines.append(
                "\t".join(
                    (
                        report.accession,
                        attr.raw_name,
                        cls.normalized_name,
                        verdict.group.value,
                        attr.value,
                        verdict.reason,
                    )
                )
            )
    return lines


def _build_resolver(config: AuditConfig, index: Optional[TermIndex]):
    if config.resolver.mode == "local":
        # Local resolution without any term files means no resolution
        # capability: ontology-term attributes become not_assessed.
        if index is None or len(index) == 0:
            return None
        return make_resolver(config.resolver, index)
    return make_resolver(config.resolver, index)


def run_audit(
    config: AuditConfig,
    on_progress: Optional[Callable[[int], None]] = None,
    progress_every: int = 100_000,
) -> AuditResult:
    """Run one audit end to end and return the finalized summary (also
    written to output_path when set, with the anomaly side log when asked)."""
    dictionary = load_dictionary(config.dictionary_path)
    index = build_term_index(config.terms) if config.terms else None
    resolver = _build_resolver(config, index)
    stream = open_corpus(config.corpus_path, format=config.corpus_format)

    def shard_tally() -> AuditTally:
        return new_tally(
            dictionary_version=dictionary.version_label,
            policy_signature=config.policy.signature(),
            census_cap=config.census_cap,
        )

    anomaly_fh = None
    if config.anomaly_log_path:
        anomaly_fh = open(config.anomaly_log_path, "w", encoding="utf-8")
    try:
        if config.workers == 1:
            tally = _run_serial(config, dictionary, resolver, stream, shard_tally, anomaly_fh, on_progress, progress_every)
        else:
            tally = _run_parallel(config, dictionary, resolver, stream, shard_tally, anomaly_fh, on_progress, progress_every)
    finally:
        if anomaly_fh is not None:
            anomaly_fh.close()

    corpus_info = {
        "path": str(config.corpus_path),
        "format": stream.format,
        "records_read": stream.stats.records_read,
        "parse_errors": stream.stats.parse_errors,
        "bytes_read": stream.stats.bytes_read,
    }
    # Worker count is deliberately absent: reports are worker-invariant.
    provenance = {"resolver_mode": config.resolver.mode}
    summary = finalize(
        tally,
        corpus_info=corpus_info,
        provenance=provenance,
        report_any_valid=config.record_level_any_valid,
    )
    if config.output_path:
        Path(config.output_path).write_text(summary.to_json(), encoding="utf-8")
    return AuditResult(
        summary=summary,
        tally=tally,
        records_read=stream.stats.records_read,
        parse_errors=stream.stats.parse_errors,
        resolver_failures=tally.resolver_failures,
    )


def _run_serial(config, dictionary, resolver, stream, shard_tally, anomaly_fh, on_progress, progress_every):
    tally = shard_tally()
    for count, record in enumerate(stream, start=1):
        report = validate_record(record, dictionary, resolver, config.policy)
        accumulate(tally, report)
        if anomaly_fh is not None:
            for line in anomaly_lines(report):
                anomaly_fh.write(line)
                anomaly_fh.write("\n")
        if on_progress and count % progress_every == 0:
            on_progress(count)
    return tally


def _run_parallel(config, dictionary, resolver, stream, shard_tally, anomaly_fh, on_progress, progress_every):
    in_q: queue.Queue = queue.Queue(maxsize=config.workers * _QUEUE_DEPTH_PER_WORKER)
    shards = [shard_tally() for _ in range(config.workers)]
    collected: list[tuple[int, list[str]]] = []
    collect_lock = threading.Lock()
    errors: list[BaseException] = []

    def worker(shard: AuditTally) -> None:
        try:
            while True:
                item = in_q.get()
                if item is _SENTINEL:
                    return
                seq, record = item
                report = validate_record(record, dictionary, resolver, config.policy)
                accumulate(shard, report)
                if anomaly_fh is not None:
                    lines = anomaly_lines(report)
                    if lines:
                        with collect_lock:
                            collected.append((seq, lines))
        except BaseException as exc:  # propagate to the feeding thread
            errors.append(exc)
            raise

    threads = [threading.Thread(target=worker, args=(shard,), daemon=True) for shard in shards]
    for thread in threads:
        thread.start()
    count = 0
    try:
        for seq, record in enumerate(stream):
            in_q.put((seq, record))
            count += 1
            if on_progress and count % progress_every == 0:
                on_progress(count)
            if errors:
                break
    finally:
        for _ in threads:
            in_q.put(_SENTINEL)
        for thread in threads:
            thread.join()
    if errors:
        raise errors[0]

    # Anomaly lines are written in record order regardless of scheduling.
    if anomaly_fh is not None:
        collected.sort(key=lambda pair: pair[0])
        for _seq, lines in collected:
            for line in lines:
                anomaly_fh.write(line)
                anomaly_fh.write("\n")

    tally = shards[0]
    for shard in shards[1:]:
        tally = merge(tally, shard)
    return tally
