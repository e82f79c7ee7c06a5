"""FastAPI service wrapping the core package.

The service loads one dictionary (and optionally a term index) at startup
and serves dictionary lookups, lint results, single-record validation, and
term search. The ``/search`` endpoint speaks the same wire protocol the
remote resolver consumes, so a running service doubles as a shared term
resolution server for audit clients.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException, Query, Request

from ..dictionary import Dictionary, lint_dictionary, package_requirements
from ..ingest import Attribute
from ..resolve import LocalResolver, TermIndex
from ..validate import DEFAULT_POLICY, MatchPolicy, validate_attribute
from . import schemas

__all__ = ["create_app"]


def _spec_out(spec) -> schemas.AttributeSpecOut:
    binding = None
    if spec.binding is not None:
        binding = schemas.OntologyBindingOut(
            acronym=spec.binding.ontology_acronym, label=spec.binding.human_label
        )
    return schemas.AttributeSpecOut(
        canonical_name=spec.canonical_name,
        group=spec.group.value,
        synonyms=list(spec.synonyms),
        ontology=binding,
        value_set=None if spec.value_set is None else list(spec.value_set),
        description=spec.description,
    )


def _verdict_out(verdict) -> schemas.VerdictOut:
    matched = None
    if verdict.matched_term is not None:
        hit = verdict.matched_term
        matched = schemas.TermHitOut(
            ontology_acronym=hit.ontology_acronym,
            term_iri=hit.term_iri,
            preferred_label=hit.preferred_label,
            matched_on=hit.matched_on,
            match_kind=hit.match_kind,
        )
    return schemas.VerdictOut(
        group=verdict.group.value,
        filled_in=verdict.filled_in,
        well_specified=verdict.well_specified,
        reason=verdict.reason,
        matched_term=matched,
    )


def create_app(
    dictionary: Dictionary,
    index: Optional[TermIndex] = None,
    policy: MatchPolicy = DEFAULT_POLICY,
) -> FastAPI:
    app = FastAPI(title="biosample-audit service", version="0.1.0")
    resolver = LocalResolver(index) if index is not None and len(index) else None
    ontologies = index.ontologies() if index is not None else []

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/dictionary", response_model=schemas.DictionaryInfoOut)
    def dictionary_info() -> schemas.DictionaryInfoOut:
        return schemas.DictionaryInfoOut(
            version=dictionary.version_label,
            attribute_count=len(dictionary.specs),
            package_count=len(dictionary.packages),
            ontologies_loaded=ontologies,
        )

    @app.get("/dictionary/attributes/{name}", response_model=schemas.AttributeSpecOut)
    def attribute_spec(name: str) -> schemas.AttributeSpecOut:
        spec = dictionary.lookup(name)
        if spec is None:
            raise HTTPException(status_code=404, detail=f"{name!r} is not a dictionary attribute (custom name)")
        return _spec_out(spec)

    @app.get("/dictionary/packages/{name}", response_model=schemas.PackageOut)
    def package(name: str) -> schemas.PackageOut:
        pkg = package_requirements(dictionary, name)
        return schemas.PackageOut(name=pkg.name, required=list(pkg.required), optional=list(pkg.optional))

    @app.get("/dictionary/lint", response_model=schemas.LintResponse)
    def lint() -> schemas.LintResponse:
        findings = lint_dictionary(dictionary)
        return schemas.LintResponse(
            findings=[
                schemas.LintFindingOut(rule=f.rule, message=f.message, location=f.location)
                for f in findings
            ],
            clean=not findings,
        )

    @app.post("/validate/value", response_model=schemas.AttributeVerdictOut)
    def validate_value(body: schemas.ValueRequest) -> schemas.AttributeVerdictOut:
        attr = Attribute(raw_name=body.name, harmonized_name=body.harmonized_name, value=body.value)
        cls, verdict = validate_attribute(dictionary, attr, resolver, policy)
        return schemas.AttributeVerdictOut(
            name=body.name,
            normalized_name=cls.normalized_name,
            in_dictionary=cls.in_dictionary,
            verdict=_verdict_out(verdict),
        )

    @app.post("/validate/record", response_model=schemas.RecordReportOut)
    def validate_one_record(body: schemas.RecordIn) -> schemas.RecordReportOut:
        rows = []
        custom = []
        for item in body.attributes:
            attr = Attribute(raw_name=item.name, harmonized_name=item.harmonized_name, value=item.value)
            cls, verdict = validate_attribute(dictionary, attr, resolver, policy)
            rows.append(
                schemas.AttributeVerdictOut(
                    name=item.name,
                    normalized_name=cls.normalized_name,
                    in_dictionary=cls.in_dictionary,
                    verdict=_verdict_out(verdict),
                )
            )
            if not cls.in_dictionary:
                custom.append(cls.normalized_name)
        return schemas.RecordReportOut(
            accession=body.accession,
            package_name=body.package_name,
            owner_name=body.owner_name,
            attributes=rows,
            custom_names=custom,
        )

    @app.get("/search", response_model=schemas.SearchResponse, response_model_by_alias=True)
    def search(
        request: Request,
        q: str = Query(..., description="term to look up"),
        ontologies_param: Optional[str] = Query(None, alias="ontologies", description="comma-separated acronyms"),
        require_exact_match: bool = Query(False),
        pagesize: int = Query(20, ge=1, le=500),
    ) -> schemas.SearchResponse:
        if resolver is None:
            raise HTTPException(status_code=503, detail="no term index loaded")
        scope = None
        if ontologies_param:
            scope = [a.strip().upper() for a in ontologies_param.split(",") if a.strip()]
        if require_exact_match:
            hits = []
            for acronym in scope if scope is not None else resolver.index.ontologies():
                hit = resolver.index.exact(q, acronym)
                if hit is not None:
                    hits.append(hit)
            hits.sort(key=lambda h: (h.ontology_acronym, h.term_iri))
            hits = hits[:pagesize]
        else:
            hits = resolver.index.search(q, pagesize, ontologies=scope)
        base = str(request.base_url).rstrip("/")
        return schemas.SearchResponse(
            collection=[
                schemas.SearchResult(
                    iri=hit.term_iri,
                    pref_label=hit.preferred_label,
                    links={"ontology": f"{base}/ontologies/{hit.ontology_acronym}"},
                    match_kind=hit.match_kind,
                )
                for hit in hits
            ]
        )

    return app
