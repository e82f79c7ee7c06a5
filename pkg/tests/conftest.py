"""Shared fixtures: the sample dictionary, term index, and a programmable
recording stub server speaking the search wire protocol."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import pytest

from biosample_audit import build_term_index, load_dictionary
from biosample_audit.resolve import LocalResolver

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

TERM_FILES = (
    str(FIXTURES / "terms_doid.tsv"),
    str(FIXTURES / "terms_pato.tsv"),
    str(FIXTURES / "terms_extra.tsv"),
)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def dictionary_path() -> str:
    return str(FIXTURES / "dictionary.sample.json")


@pytest.fixture(scope="session")
def sample_dictionary(dictionary_path):
    return load_dictionary(dictionary_path)


@pytest.fixture(scope="session")
def term_files() -> tuple[str, ...]:
    return TERM_FILES


@pytest.fixture(scope="session")
def term_index(term_files):
    return build_term_index(term_files)


@pytest.fixture(scope="session")
def local_resolver(term_index):
    return LocalResolver(term_index)


class StubSearchServer:
    """Minimal search service for client-contract tests.

    Records every request (path, query, headers, arrival time) and can be
    told to fail: ``fail_with(status, times)`` makes the next ``times``
    requests return that status before reverting to normal answers.
    """

    def __init__(self, terms: dict[tuple[str, str], dict] | None = None):
        self.terms = terms or {}
        self.requests: list[dict] = []
        self._failures: list[int] = []
        self._lock = threading.Lock()
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output clean
                pass

            def do_GET(self):
                parsed = urlparse(self.path)
                query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
                with server._lock:
                    server.requests.append(
                        {
                            "path": parsed.path,
                            "query": query,
                            "authorization": self.headers.get("Authorization"),
                            "time": time.monotonic(),
                        }
                    )
                    failure = server._failures.pop(0) if server._failures else None
                if failure is not None:
                    self.send_response(failure)
                    self.end_headers()
                    return
                if parsed.path != "/search":
                    self.send_response(404)
                    self.end_headers()
                    return
                q = " ".join(query.get("q", "").split()).casefold()
                scope = query.get("ontologies", "")
                collection = []
                for (acronym, key), payload in sorted(server.terms.items()):
                    if key != q:
                        continue
                    if scope and acronym not in scope.split(","):
                        continue
                    collection.append(
                        {
                            "@id": payload["iri"],
                            "prefLabel": payload["label"],
                            "links": {"ontology": f"http://stub/ontologies/{acronym}"},
                        }
                    )
                body = json.dumps({"collection": collection}).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address
        return f"http://{host}:{port}"

    def fail_with(self, status: int, times: int = 1) -> None:
        with self._lock:
            self._failures.extend([status] * times)

    def request_count(self) -> int:
        with self._lock:
            return len(self.requests)

    def close(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture
def stub_server():
    server = StubSearchServer(
        terms={
            ("DOID", "gastrointestinal stromal tumor"): {
                "iri": "http://example.org/doid/DOID_9253",
                "label": "gastrointestinal stromal tumor",
            },
            ("DOID", "hiv"): {"iri": "http://example.org/doid/DOID_526", "label": "HIV"},
            ("DOID", "gist"): {
                "iri": "http://example.org/doid/DOID_9253",
                "label": "gastrointestinal stromal tumor",
            },
            ("DOID", "lung squamous carcinoma"): {
                "iri": "http://example.org/doid/DOID_3907",
                "label": "lung squamous carcinoma",
            },
            ("DOID", "melanoma"): {"iri": "http://example.org/doid/DOID_1909", "label": "melanoma"},
            ("DOID", "asthma"): {"iri": "http://example.org/doid/DOID_2841", "label": "asthma"},
            ("DOID", "diabetes mellitus"): {
                "iri": "http://example.org/doid/DOID_9351",
                "label": "diabetes mellitus",
            },
            ("PATO", "male"): {"iri": "http://example.org/pato/PATO_0000384", "label": "male"},
            ("PATO", "female"): {"iri": "http://example.org/pato/PATO_0000383", "label": "female"},
        }
    )
    yield server
    server.close()
