"""biosample-audit: quality auditing for sample-metadata corpora.

Streams BioSample-format XML (or jsonl) corpora in bounded memory, validates
every attribute against a typed data dictionary, resolves ontology-term
values locally or against a search service, and produces mergeable audit
tallies finalized into corpus-level quality reports.
"""

from .dictionary import (
    AttributeSpec,
    Dictionary,
    DictionaryError,
    LintFinding,
    OntologyBinding,
    PackageDef,
    ValidationGroup,
    lint_dictionary,
    load_dictionary,
    lookup_attribute,
    package_requirements,
)
from .ingest import (
    Attribute,
    CorpusError,
    CorpusStats,
    RecordParseError,
    SampleRecord,
    normalize_attribute_name,
    open_corpus,
    parse_record,
)
from .pipeline import AuditConfig, AuditResult, run_audit
from .resolve import (
    LocalResolver,
    RemoteResolver,
    ResolverConfig,
    ResolverUnavailable,
    TermHit,
    TermIndex,
    build_term_index,
    make_resolver,
)
from .stats import (
    AuditSummary,
    AuditTally,
    GroupTally,
    TallyMismatchError,
    accumulate,
    finalize,
    merge,
    new_tally,
    parse_summary,
    render_summary,
)
from .synth import SynthSpec, generate_corpus
from .validate import (
    Classification,
    MatchPolicy,
    RecordReport,
    Verdict,
    classify_attribute,
    is_filled_in,
    match_term_any,
    validate_attribute,
    validate_boolean,
    validate_integer,
    validate_ontology_term,
    validate_record,
    validate_value_set,
)

__version__ = "0.1.0"
