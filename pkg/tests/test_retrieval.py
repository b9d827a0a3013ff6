import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from multiverse.corpus import NewsArticle, SnapshotStore
from multiverse.errors import (
    AllProvidersFailed,
    ExtractionFailed,
    NonTextMedia,
    UnsupportedLanguage,
)
from multiverse.retrieval import (
    FixtureSearchProvider,
    FixtureTranslator,
    HttpSearchProvider,
    IdentityTranslator,
    QuerySpec,
    extract_text,
    looks_like_html,
    retrieve_evidence,
    translate_title,
)

HTML_PAGE = b"""<html><head><title>Bubonic plague outbreak</title>
<script>ignore_me();</script></head>
<body><h1>Heading text</h1><p>First paragraph here.</p>
<p>Second paragraph.</p></body></html>"""


class TestExtractText:
    def test_title_and_paragraph(self):
        title, content = extract_text(
            b"<html><title>A story</title><p>One paragraph.</p></html>",
            "text/html")
        assert title == "A story"
        assert content == "One paragraph."

    def test_full_page(self):
        title, content = extract_text(HTML_PAGE, "text/html; charset=utf-8")
        assert title == "Bubonic plague outbreak"
        assert "First paragraph here." in content
        assert "ignore_me" not in content

    def test_pdf_is_non_text(self):
        with pytest.raises(NonTextMedia):
            extract_text(b"%PDF-1.4 ...", "application/pdf")

    def test_image_is_non_text(self):
        with pytest.raises(NonTextMedia):
            extract_text(b"\x89PNG", "image/png")

    def test_heading_fallback(self):
        title, _ = extract_text(b"<html><h2>Only heading</h2><p>x</p></html>",
                                "text/html")
        assert title == "Only heading"

    def test_no_title_anywhere(self):
        with pytest.raises(ExtractionFailed):
            extract_text(b"<html><p>just text</p></html>", "text/html")

    def test_plain_text(self):
        title, content = extract_text(b"Headline line\nbody line one\nbody two",
                                      "text/plain")
        assert title == "Headline line"
        assert content == "body line one\nbody two"

    def test_empty_plain_text(self):
        with pytest.raises(ExtractionFailed):
            extract_text(b"   \n  ", "text/plain")

    def test_charset_honored(self):
        page = "<html><title>Épidémie</title></html>".encode("latin-1")
        title, _ = extract_text(page, "text/html; charset=latin-1")
        assert title == "Épidémie"

    def test_nested_markup_in_title_fixture(self):
        page = b"<html><head><title> Spaced   out \n title </title></head></html>"
        title, _ = extract_text(page, "text/html")
        assert title == "Spaced out title"


class TestTranslate:
    def test_identity_same_language(self):
        translator = FixtureTranslator({}, languages=("en", "es"))
        result = translate_title("Bubonic plague outbreak in Mongolia", "en",
                                 translator)
        assert result.text == "Bubonic plague outbreak in Mongolia"

    def test_fixture_lookup(self, fixtures_dir):
        translator = FixtureTranslator.from_file(
            fixtures_dir / "corpus20" / "translations.json")
        result = translate_title("Bubonic plague outbreak in Mongolia", "es",
                                 translator)
        assert result.text == "BROTE DE PESTE BUBÓNICA EN MONGOLIA"

    def test_unknown_language(self):
        translator = FixtureTranslator({}, languages=("en",))
        with pytest.raises(UnsupportedLanguage):
            translate_title("whatever", "xx", translator)

    def test_missing_entry_falls_back(self, caplog):
        translator = FixtureTranslator({}, languages=("en", "fr"))
        with caplog.at_level("WARNING"):
            result = translate_title("No entry for this", "fr", translator)
        assert result.text == "No entry for this"
        assert any("no fixture translation" in r.message for r in caplog.records)

    def test_identity_translator(self):
        result = translate_title("anything", "ru", IdentityTranslator())
        assert result.text == "anything"


def fixture_provider(n_hits=10, language="en", query="some query"):
    results = [
        {"url": f"https://site{i}.com/page{i}", "title": f"hit {i}",
         "content": "", "position": i}
        for i in range(1, n_hits + 1)
    ]
    return FixtureSearchProvider({(query, language): results})


class TestFixtureSearch:
    def test_pure_function_of_inputs(self):
        provider = fixture_provider()
        a = provider.search("some query", "en", 10)
        b = provider.search("Some  QUERY", "en", 10)  # normalization folds case/space
        assert [d.url for d in a] == [d.url for d in b]

    def test_zero_hits_language(self):
        provider = fixture_provider(language="en")
        assert provider.search("some query", "fr", 10) == []

    def test_truncation_to_top_n(self):
        provider = fixture_provider(n_hits=12)
        docs = provider.search("some query", "en", 10)
        assert [d.position for d in docs] == list(range(1, 11))

    def test_from_dir(self, fixtures_dir):
        provider = FixtureSearchProvider.from_dir(
            fixtures_dir / "corpus20" / "search")
        docs = provider.search(
            "Lottery winner arrested for dumping $200,000 of manure on ex-boss’ lawn",
            "en", 10)
        assert len(docs) == 10
        assert docs[0].title.startswith("Lottery winner arrested")

    def test_non_html_flag_from_extension(self):
        provider = FixtureSearchProvider({("q", "en"): [
            {"url": "https://x.com/file.pdf", "title": "a pdf", "position": 1},
            {"url": "https://x.com/page", "title": "a page", "position": 2},
        ]})
        docs = provider.search("q", "en", 10)
        assert docs[0].is_html is False
        assert docs[1].is_html is True
        assert looks_like_html("https://x.com/doc.PDF") is False


class _StubSearchHandler(BaseHTTPRequestHandler):
    requests: list = []
    fail_first = False

    def log_message(self, *args):
        pass

    def do_POST(self):
        payload = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).requests.append(payload)
        if type(self).fail_first and len(type(self).requests) == 1:
            self.send_error(500)
            return
        body = json.dumps({
            "results": [
                {"url": "https://remote.example/1", "title": f"remote hit for "
                 f"{payload['query']}", "content": "", "position": 1}
            ]
        }).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


@pytest.fixture()
def stub_search_server():
    handler = type("Handler", (_StubSearchHandler,), {"requests": [], "fail_first": False})
    httpd = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{httpd.server_address[1]}", handler
    httpd.shutdown()
    httpd.server_close()


class TestHttpSearchProvider:
    def test_wire_protocol_shape(self, stub_search_server):
        url, handler = stub_search_server
        provider = HttpSearchProvider(url)
        docs = provider.search("plague outbreak", "fr", 5,
                               time_range=("2018-01-01", "2018-12-31"))
        assert handler.requests[0] == {
            "query": "plague outbreak", "language": "fr", "top_n": 5,
            "time_range": ["2018-01-01", "2018-12-31"],
        }
        assert docs[0].language == "fr"
        assert docs[0].title == "remote hit for plague outbreak"

    def test_retry_once(self, stub_search_server):
        url, handler = stub_search_server
        handler.fail_first = True
        provider = HttpSearchProvider(url, retries=1)
        docs = provider.search("q", "en", 3)
        assert len(docs) == 1
        assert len(handler.requests) == 2

    def test_unreachable_endpoint(self):
        provider = HttpSearchProvider("http://127.0.0.1:1/none", timeout=0.2,
                                      retries=0)
        with pytest.raises(AllProvidersFailed):
            provider.search("q", "en", 3)


class _FlakyProvider:
    def __init__(self, bad_langs=()):
        self.bad_langs = set(bad_langs)

    def search(self, query, language, top_n, time_range=None):
        if language in self.bad_langs:
            raise RuntimeError(f"boom for {language}")
        return fixture_provider(10, language, query).search(query, language, top_n)


class TestRetrieveEvidence:
    def article(self):
        return NewsArticle(id="a1", title="some query", label="Legit")

    def test_five_languages_fifty_docs(self):
        spec = QuerySpec(article_id="a1")
        evidence = retrieve_evidence(self.article(), spec, IdentityTranslator(),
                                     _FlakyProvider())
        assert sorted(evidence) == ["de", "en", "es", "fr", "ru"]
        assert sum(len(docs) for docs in evidence.values()) == 50
        for lang, docs in evidence.items():
            assert [d.position for d in docs] == list(range(1, 11))
            assert all(d.language == lang for d in docs)

    def test_failed_language_is_isolated(self):
        spec = QuerySpec(article_id="a1", languages=("en", "fr"))
        failures = {}
        evidence = retrieve_evidence(self.article(), spec, IdentityTranslator(),
                                     _FlakyProvider(bad_langs=["fr"]),
                                     failures=failures)
        assert len(evidence["en"]) == 10
        assert evidence["fr"] == []
        assert "fr" in failures

    def test_all_languages_failed(self):
        spec = QuerySpec(article_id="a1", languages=("en", "fr"))
        with pytest.raises(AllProvidersFailed):
            retrieve_evidence(self.article(), spec, IdentityTranslator(),
                              _FlakyProvider(bad_langs=["en", "fr"]))

    def test_snapshots_persisted(self, tmp_path):
        store = SnapshotStore(tmp_path / "snaps")
        spec = QuerySpec(article_id="a1", languages=("en",), top_n=10)
        retrieve_evidence(self.article(), spec, IdentityTranslator(),
                          _FlakyProvider(), snapshot_store=store,
                          captured_at="2020-01-01T00:00:00+00:00")
        snapshot = store.load("a1", "en")
        assert len(snapshot.results) == 10
        assert snapshot.query == "some query"

    def test_result_order_equals_provider_order(self):
        provider = FixtureSearchProvider({("some query", "en"): [
            {"url": "https://a.com/1", "title": "first", "position": 1},
            {"url": "https://b.com/2", "title": "second", "position": 2},
        ]})
        spec = QuerySpec(article_id="a1", languages=("en",))
        evidence = retrieve_evidence(self.article(), spec, IdentityTranslator(),
                                     provider)
        assert [d.title for d in evidence["en"]] == ["first", "second"]

    def test_query_spec_validation(self):
        with pytest.raises(ValueError):
            QuerySpec(article_id="a", top_n=0)
        with pytest.raises(ValueError):
            QuerySpec(article_id="a", languages=())
        with pytest.raises(ValueError):
            QuerySpec(article_id="a", languages=("en", "en"))
