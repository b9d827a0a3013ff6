"""Wire-protocol tests for the external embedding and NLI bindings."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from multiverse.errors import EmptyText, ProviderUnavailable
from multiverse.similarity import HttpEmbedder, HttpNliProvider, cosine_similarity


class _ScorerStub(BaseHTTPRequestHandler):
    requests: list = []

    def log_message(self, *args):
        pass

    def do_POST(self):
        payload = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).requests.append((self.path, payload))
        if self.path == "/embed":
            vectors = []
            for text in payload["texts"]:
                vec = [float(len(text)), 1.0, 0.0]
                vectors.append(vec)
            body = json.dumps({"vectors": vectors}).encode()
        elif self.path == "/nli":
            if "not releasing" in payload["hypothesis"]:
                scores = {"entailment": 0.05, "neutral": 0.15, "contradiction": 0.8}
            else:
                scores = {"entailment": 0.7, "neutral": 0.2, "contradiction": 0.1}
            body = json.dumps(scores).encode()
        else:
            self.send_error(404)
            return
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


@pytest.fixture()
def scorer_stub():
    handler = type("Handler", (_ScorerStub,), {"requests": []})
    httpd = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{httpd.server_address[1]}", handler
    httpd.shutdown()
    httpd.server_close()


class TestHttpEmbedder:
    def test_batch_request_and_vectors(self, scorer_stub):
        url, handler = scorer_stub
        embedder = HttpEmbedder(f"{url}/embed")
        vectors = embedder.embed_batch(["abc", "defgh"])
        assert handler.requests[0] == ("/embed", {"texts": ["abc", "defgh"]})
        assert vectors[0].dim == 3
        assert vectors[0].values[0] == 3.0
        assert vectors[1].values[0] == 5.0

    def test_single_embed(self, scorer_stub):
        url, _ = scorer_stub
        vec = HttpEmbedder(f"{url}/embed").embed("xy")
        assert np.allclose(vec.values, [2.0, 1.0, 0.0])
        assert cosine_similarity(vec, vec) == pytest.approx(1.0)

    def test_empty_text_rejected_before_wire(self, scorer_stub):
        url, handler = scorer_stub
        with pytest.raises(EmptyText):
            HttpEmbedder(f"{url}/embed").embed("  ")
        assert handler.requests == []

    def test_unreachable(self):
        embedder = HttpEmbedder("http://127.0.0.1:1/embed", timeout=0.2)
        with pytest.raises(ProviderUnavailable):
            embedder.embed("abc")

    def test_concurrent_batches(self, scorer_stub):
        url, _ = scorer_stub
        embedder = HttpEmbedder(f"{url}/embed", max_concurrency=2)
        results, errors = [], []

        def work(i):
            try:
                results.append(embedder.embed(f"text-{i}"))
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=work, args=(i,)) for i in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        assert len(results) == 8


class TestHttpNli:
    def test_wire_shape_and_scores(self, scorer_stub):
        url, handler = scorer_stub
        provider = HttpNliProvider(f"{url}/nli")
        scores = provider.score("The news \"x\" is legit",
                                "Israel is not releasing a coronavirus vaccine")
        assert handler.requests[0][1] == {
            "premise": 'The news "x" is legit',
            "hypothesis": "Israel is not releasing a coronavirus vaccine",
        }
        assert scores.label == "contradiction"
        assert scores.support is False

    def test_entailing_reply(self, scorer_stub):
        url, _ = scorer_stub
        scores = HttpNliProvider(f"{url}/nli").score("p", "supportive h")
        assert scores.label == "entailment"
        assert scores.support is True

    def test_unreachable(self):
        provider = HttpNliProvider("http://127.0.0.1:1/nli", timeout=0.2)
        with pytest.raises(ProviderUnavailable):
            provider.score("p", "h")
