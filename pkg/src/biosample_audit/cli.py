"""Command-line front end.

Subcommands wire the core package into batch workflows: ``audit`` runs a
full corpus audit, ``validate`` prints per-attribute verdicts for the
records in a file, ``dict lint`` checks a dictionary document, ``synth``
generates test corpora with planted ground truth, and ``serve`` starts the
HTTP service.

Exit codes for ``audit``: 0 success; 2 fatal ingest/startup error (no
partial report is written); 3 resolver hard-failure when running in remote
mode without local fallback. Fatal errors print one machine-parseable line
to standard error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
from click.core import ParameterSource

from .dictionary import DictionaryError, lint_dictionary, load_dictionary
from .ingest import CorpusError, open_corpus
from .pipeline import AuditConfig, run_audit
from .resolve import ResolverConfig, TermFileError, build_term_index, make_resolver
from .stats import render_summary
from .synth import SynthSpec, generate_corpus
from .validate import DEFAULT_NULL_TOKENS, MatchPolicy, validate_record

_RESOLVER_MODES = {
    "local": "local",
    "remote": "remote",
    "remote-with-fallback": "remote_with_local_fallback",
}


def _fail(category: str, message: str, code: int) -> None:
    click.echo(f"error: {category}: {message}", err=True)
    sys.exit(code)


def _config_value(ctx: click.Context, file_config: dict, name: str, flag_value):
    """Flags override config-file values; config-file values override defaults."""
    if ctx.get_parameter_source(name) == ParameterSource.COMMANDLINE:
        return flag_value
    return file_config.get(name, flag_value)


def _resolver_options(fn):
    options = [
        click.option("--terms", multiple=True, type=click.Path(), help="Term TSV file for the local index (repeatable)."),
        click.option("--resolver-mode", type=click.Choice(sorted(_RESOLVER_MODES)), default="local", show_default=True),
        click.option("--endpoint", default=None, help="Base URL of a search service (remote modes)."),
        click.option("--api-key-env", default=None, metavar="VAR", help="Environment variable holding the service API key."),
        click.option("--rate-limit", type=float, default=5.0, show_default=True, help="Remote requests per second."),
        click.option("--max-retries", type=int, default=3, show_default=True),
        click.option("--cache", "cache_path", type=click.Path(), default=None, help="Persistent query cache file."),
        click.option("--clear-cache", is_flag=True, help="Delete the query cache before running."),
        click.option("--policy-value-set", type=click.Choice(["lenient", "strict"]), default="lenient", show_default=True),
        click.option("--policy-ontology", type=click.Choice(["lenient", "strict"]), default="lenient", show_default=True),
        click.option("--null-token", "null_tokens", multiple=True, help="Override the null-like token set (repeatable)."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _build_resolver_config(ctx, file_config, resolver_mode, endpoint, api_key_env, rate_limit, max_retries, cache_path, clear_cache) -> ResolverConfig:
    mode = _RESOLVER_MODES[_config_value(ctx, file_config, "resolver_mode", resolver_mode)]
    endpoint = _config_value(ctx, file_config, "endpoint", endpoint)
    api_key_env = _config_value(ctx, file_config, "api_key_env", api_key_env)
    cache_path = _config_value(ctx, file_config, "cache_path", cache_path)
    api_key = os.environ.get(api_key_env) if api_key_env else None
    if clear_cache and cache_path and Path(cache_path).exists():
        Path(cache_path).unlink()
    return ResolverConfig(
        mode=mode,
        endpoint_url=endpoint,
        api_key=api_key,
        rate_limit=_config_value(ctx, file_config, "rate_limit", rate_limit),
        max_retries=_config_value(ctx, file_config, "max_retries", max_retries),
        cache_path=cache_path,
    )


def _build_policy(ctx, file_config, policy_value_set, policy_ontology, null_tokens) -> MatchPolicy:
    tokens = _config_value(ctx, file_config, "null_tokens", list(null_tokens) or None)
    return MatchPolicy(
        value_set=_config_value(ctx, file_config, "policy_value_set", policy_value_set),
        ontology=_config_value(ctx, file_config, "policy_ontology", policy_ontology),
        null_tokens=tuple(tokens) if tokens else DEFAULT_NULL_TOKENS,
    )


@click.group()
@click.version_option(package_name="biosample-audit")
def main() -> None:
    """Quality auditing for sample-metadata corpora."""


@main.command()
@click.option("--dictionary", "dictionary_path", type=click.Path(), required=False)
@click.option("--corpus", "corpus_path", type=click.Path(), required=False)
@click.option("--format", "corpus_format", type=click.Choice(["auto", "biosample-xml", "jsonl"]), default="auto", show_default=True)
@_resolver_options
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--output", "output_path", type=click.Path(), default=None, help="Report path (default: standard out).")
@click.option("--report-format", type=click.Choice(["json", "csv", "table"]), default="json", show_default=True)
@click.option("--anomaly-log", "anomaly_log_path", type=click.Path(), default=None, help="TSV side log of invalid attributes.")
@click.option("--record-level-any-valid", is_flag=True, help="Also report the any-valid record-level counts.")
@click.option("--census-cap", type=int, default=10**6, show_default=True, help="Exact custom-name census limit.")
@click.option("--progress-every", type=int, default=100_000, show_default=True)
@click.option("--quiet", is_flag=True, help="Suppress progress output.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="JSON config file; flags override it.")
@click.pass_context
def audit(ctx, dictionary_path, corpus_path, corpus_format, terms, resolver_mode, endpoint, api_key_env,
          rate_limit, max_retries, cache_path, clear_cache, policy_value_set, policy_ontology, null_tokens,
          workers, output_path, report_format, anomaly_log_path, record_level_any_valid, census_cap,
          progress_every, quiet, config_path):
    """Audit a corpus and write the summary report."""
    file_config = json.loads(Path(config_path).read_text(encoding="utf-8")) if config_path else {}
    dictionary_path = _config_value(ctx, file_config, "dictionary_path", dictionary_path)
    corpus_path = _config_value(ctx, file_config, "corpus_path", corpus_path)
    if not dictionary_path or not corpus_path:
        _fail("config", "both --dictionary and --corpus are required (flags or config file)", 2)
    term_files = tuple(terms) or tuple(file_config.get("terms", ()))

    try:
        resolver_config = _build_resolver_config(
            ctx, file_config, resolver_mode, endpoint, api_key_env, rate_limit, max_retries, cache_path, clear_cache
        )
        policy = _build_policy(ctx, file_config, policy_value_set, policy_ontology, null_tokens)
        config = AuditConfig(
            dictionary_path=str(dictionary_path),
            corpus_path=str(corpus_path),
            corpus_format=_config_value(ctx, file_config, "corpus_format", corpus_format),
            terms=term_files,
            resolver=resolver_config,
            policy=policy,
            workers=int(_config_value(ctx, file_config, "workers", workers)),
            output_path=output_path,
            anomaly_log_path=_config_value(ctx, file_config, "anomaly_log_path", anomaly_log_path),
            record_level_any_valid=record_level_any_valid or bool(file_config.get("record_level_any_valid")),
            census_cap=int(_config_value(ctx, file_config, "census_cap", census_cap)),
        )
    except ValueError as exc:
        _fail("config", str(exc), 2)

    def on_progress(count: int) -> None:
        if not quiet:
            click.echo(f"processed {count:,} records", err=True)

    try:
        result = run_audit(config, on_progress=on_progress, progress_every=progress_every)
    except (CorpusError, DictionaryError, TermFileError, OSError) as exc:
        _fail("ingest", str(exc), 2)

    if output_path:
        if report_format != "json":
            Path(output_path).write_text(render_summary(result.summary, report_format), encoding="utf-8")
        if not quiet:
            click.echo(f"report written to {output_path}", err=True)
    else:
        click.echo(render_summary(result.summary, report_format), nl=False)

    if config.resolver.mode == "remote" and result.resolver_failures > 0:
        _fail("resolver", f"{result.resolver_failures} lookups failed against {config.resolver.endpoint_url}", 3)


@main.command()
@click.argument("source", type=click.Path())
@click.option("--dictionary", "dictionary_path", type=click.Path(), required=True)
@click.option("--format", "corpus_format", type=click.Choice(["auto", "biosample-xml", "jsonl"]), default="auto", show_default=True)
@_resolver_options
@click.pass_context
def validate(ctx, source, dictionary_path, corpus_format, terms, resolver_mode, endpoint, api_key_env,
             rate_limit, max_retries, cache_path, clear_cache, policy_value_set, policy_ontology, null_tokens):
    """Print one verdict line per attribute for every record in SOURCE."""
    try:
        dictionary = load_dictionary(dictionary_path)
        resolver_config = _build_resolver_config(ctx, {}, resolver_mode, endpoint, api_key_env, rate_limit, max_retries, cache_path, clear_cache)
        policy = _build_policy(ctx, {}, policy_value_set, policy_ontology, null_tokens)
        index = build_term_index(terms) if terms else None
        if resolver_config.mode == "local":
            resolver = make_resolver(resolver_config, index) if index is not None and len(index) else None
        else:
            resolver = make_resolver(resolver_config, index)
        stream = open_corpus(source, format=corpus_format)
    except (CorpusError, DictionaryError, TermFileError, ValueError, OSError) as exc:
        _fail("startup", str(exc), 2)

    for record in stream:
        click.echo(f"# {record.accession} (package {record.package_name})")
        report = validate_record(record, dictionary, resolver, policy)
        if not report.per_attribute:
            click.echo("  no attributes")
            continue
        for attr, cls, verdict in report.per_attribute:
            filled = "filled" if verdict.filled_in else "empty"
            click.echo(
                f"  {attr.raw_name}\t{verdict.group.value}\t{filled}\t{verdict.well_specified}\t{verdict.reason}"
            )
    if stream.stats.parse_errors:
        _fail("parse", f"{stream.stats.parse_errors} records could not be parsed", 1)


@main.group(name="dict")
def dict_group() -> None:
    """Dictionary tools."""


@dict_group.command(name="lint")
@click.argument("dictionary_path", type=click.Path())
def dict_lint(dictionary_path):
    """Lint a dictionary document; exit 1 when findings exist."""
    try:
        dictionary = load_dictionary(dictionary_path)
    except DictionaryError as exc:
        _fail("dictionary", str(exc), 2)
    findings = lint_dictionary(dictionary)
    for finding in findings:
        click.echo(f"{finding.rule}\t{finding.location}\t{finding.message}")
    click.echo(f"{len(findings)} finding{'s' if len(findings) != 1 else ''}")
    if findings:
        sys.exit(1)


@main.command()
@click.option("--records", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--format", "corpus_format", type=click.Choice(["biosample-xml", "jsonl"]), default="biosample-xml", show_default=True)
@click.option("--manifest", "manifest_path", type=click.Path(), default=None, help="Manifest path (default: <out>.manifest.json).")
@click.option("--valid-ontology-term", type=float, default=0.32, show_default=True)
@click.option("--valid-value-set", type=float, default=0.92, show_default=True)
@click.option("--valid-boolean", type=float, default=0.27, show_default=True)
@click.option("--valid-integer", type=float, default=0.74, show_default=True)
@click.option("--custom-fraction", type=float, default=0.15, show_default=True)
@click.option("--zero-fraction", type=float, default=0.03, show_default=True)
@click.option("--dup-fraction", type=float, default=0.05, show_default=True)
@click.option("--term-fraction", type=float, default=0.0, show_default=True)
@click.option("--unit-fraction", type=float, default=0.10, show_default=True)
@click.option("--package-mix", default="Generic=0.85,Pathogen=0.10,Human=0.05", show_default=True)
def synth(records, seed, out_path, corpus_format, manifest_path, valid_ontology_term, valid_value_set,
          valid_boolean, valid_integer, custom_fraction, zero_fraction, dup_fraction, term_fraction,
          unit_fraction, package_mix):
    """Generate a synthetic corpus plus its ground-truth manifest."""
    mix = {}
    try:
        for part in package_mix.split(","):
            name, _, weight = part.partition("=")
            mix[name.strip()] = float(weight)
        spec = SynthSpec(
            record_count=records,
            seed=seed,
            valid_fractions={
                "ontology_term": valid_ontology_term,
                "value_set": valid_value_set,
                "boolean": valid_boolean,
                "integer": valid_integer,
            },
            custom_fraction=custom_fraction,
            zero_attribute_fraction=zero_fraction,
            duplicate_fraction=dup_fraction,
            term_fraction=term_fraction,
            unit_fraction=unit_fraction,
            package_mix=mix,
        )
        manifest = generate_corpus(spec, out_path, format=corpus_format, manifest_path=manifest_path)
    except (ValueError, OSError) as exc:
        _fail("synth", str(exc), 2)
    totals = manifest["totals"]
    click.echo(
        f"wrote {totals['records']:,} records ({totals['attributes']:,} attributes) to {out_path}",
        err=True,
    )


@main.command()
@click.option("--dictionary", "dictionary_path", type=click.Path(exists=True), required=True)
@click.option("--terms", multiple=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(dictionary_path, terms, host, port):
    """Run the HTTP service (dictionary lookups, validation, term search)."""
    import uvicorn

    from .service import create_app

    try:
        dictionary = load_dictionary(dictionary_path)
        index = build_term_index(terms) if terms else None
    except (DictionaryError, TermFileError) as exc:
        _fail("startup", str(exc), 2)
    uvicorn.run(create_app(dictionary, index), host=host, port=port)


if __name__ == "__main__":
    main()
