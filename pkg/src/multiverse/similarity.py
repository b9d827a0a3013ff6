"""Content-similarity scoring between an original article and scraped evidence.

Two scorers are provided.  The cosine scorer embeds titles and takes their
cosine, with two hard overrides applied first: evidence that is not an HTML
page scores 0, and evidence whose title or content contains a refutation
lexeme for its language scores 0.  The NLI scorer wraps the original news in
a ``The news "..." is legit`` premise and asks an inference provider for
entailment / neutral / contradiction scores, binarized to support iff
entailment outweighs the other two classes combined.

The reference embedding provider is a hashed character 3..5-gram bag with
dimension 2**14, L2-normalized: deterministic, language-agnostic, and usable
without model weights.  External embedding and NLI services plug in behind
the same bindings via a small JSON-over-HTTP protocol.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import EvidenceDoc, NewsArticle
from .errors import (
    DegenerateGold,
    DimMismatch,
    EmptyText,
    ProviderUnavailable,
    ZeroVector,
)

REFERENCE_DIM = 16384
NGRAM_RANGE = (3, 5)
SUPPORT = "Support"
NOT_SUPPORT = "NotSupport"

_REFUTATION_LANGS = ("en", "fr", "de", "es", "ru")


def load_refutation_lexicons() -> dict[str, frozenset[str]]:
    """Per-language refutation word lists bundled with the package."""
    lexicons: dict[str, frozenset[str]] = {}
    for lang in _REFUTATION_LANGS:
        text = resources.files("multiverse.data").joinpath(
            f"refutation.{lang}.txt").read_text(encoding="utf-8")
        lexicons[lang] = frozenset(
            w.strip().casefold() for w in text.splitlines() if w.strip())
    return lexicons


def load_lexicon_file(path) -> frozenset[str]:
    words = Path(path).read_text(encoding="utf-8").splitlines()
    return frozenset(w.strip().casefold() for w in words if w.strip())


def _normalize_text(text: str) -> str:
    return " ".join(text.casefold().split())


def char_ngrams(text: str, n_lo: int = NGRAM_RANGE[0], n_hi: int = NGRAM_RANGE[1]) -> list[str]:
    """Character n-grams of the whitespace-normalized, case-folded text."""
    norm = _normalize_text(text)
    grams = [norm[i:i + n] for n in range(n_lo, n_hi + 1)
             for i in range(len(norm) - n + 1)]
    return grams or [norm]


@lru_cache(maxsize=1 << 20)
def _bucket(gram: str, dim: int) -> int:
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("embedding must be a 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


class ReferenceEmbedder:
    """Deterministic hashed n-gram embedder emitting unit-norm vectors."""

    def __init__(self, dim: int = REFERENCE_DIM):
        self.dim = dim
        self._cache: dict[str, EmbeddingVector] = {}

    def embed(self, text: str) -> EmbeddingVector:
        if not text or not text.strip():
            raise EmptyText("cannot embed empty text")
        norm = _normalize_text(text)
        cached = self._cache.get(norm)
        if cached is not None:
            return cached
        vec = np.zeros(self.dim)
        for gram in char_ngrams(text):
            vec[_bucket(gram, self.dim)] += 1.0
        vec /= np.linalg.norm(vec)
        result = EmbeddingVector(vec)
        if len(self._cache) > 50_000:
            self._cache.clear()
        self._cache[norm] = result
        return result

    def embed_batch(self, texts) -> list[EmbeddingVector]:
        return [self.embed(t) for t in texts]


def _post_json(endpoint: str, payload: dict, timeout: float) -> dict:
    data = json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(
        endpoint, data=data, headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return json.loads(response.read().decode("utf-8"))
    except (urllib.error.URLError, OSError, ValueError) as exc:
        raise ProviderUnavailable(f"{endpoint}: {exc}") from exc


class HttpEmbedder:
    """Embedding service client: ``{"texts": [...]} -> {"vectors": [[...]]}``.

    Safe under concurrent use; at most ``max_concurrency`` requests are in
    flight at once.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0,
                 max_concurrency: int = 8):
        self.endpoint = endpoint
        self.timeout = timeout
        self._slots = threading.Semaphore(max_concurrency)

    def embed(self, text: str) -> EmbeddingVector:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts) -> list[EmbeddingVector]:
        texts = list(texts)
        if any(not t or not t.strip() for t in texts):
            raise EmptyText("cannot embed empty text")
        with self._slots:
            reply = _post_json(self.endpoint, {"texts": texts}, self.timeout)
        vectors = reply.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderUnavailable(f"{self.endpoint}: malformed embedding reply")
        return [EmbeddingVector(np.asarray(v, dtype=np.float64)) for v in vectors]


def embed_text(text: str, binding) -> EmbeddingVector:
    return binding.embed(text)


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.dim != b.dim:
        raise DimMismatch(f"dims differ: {a.dim} vs {b.dim}")
    norm_a = float(np.linalg.norm(a.values))
    norm_b = float(np.linalg.norm(b.values))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine undefined for zero vectors")
    value = float(np.dot(a.values, b.values) / (norm_a * norm_b))
    return min(1.0, max(-1.0, value))


@dataclass(frozen=True)
class NliScores:
    entailment: float
    neutral: float
    contradiction: float

    def __post_init__(self):
        values = (self.entailment, self.neutral, self.contradiction)
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ValueError(f"NLI scores must lie in [0, 1], got {values}")
        if abs(sum(values) - 1.0) > 1e-6:
            raise ValueError(f"NLI scores must sum to 1, got {sum(values)}")

    @property
    def label(self) -> str:
        best = max(
            ("entailment", self.entailment),
            ("neutral", self.neutral),
            ("contradiction", self.contradiction),
            key=lambda kv: kv[1],
        )
        return best[0]

    @property
    def support(self) -> bool:
        """Two-class decision after merging neutral and contradiction."""
        return self.entailment > self.neutral + self.contradiction


class StubNliProvider:
    """Uniform scores; useful as an always-available no-signal binding."""

    def score(self, premise: str, hypothesis: str) -> NliScores:
        return NliScores(1 / 3, 1 / 3, 1 / 3)


class TableNliProvider:
    """Fixture lookup keyed by (premise, hypothesis); unknown pairs are uniform."""

    def __init__(self, table: dict[tuple[str, str], tuple[float, float, float]]):
        self.table = dict(table)

    def score(self, premise: str, hypothesis: str) -> NliScores:
        e, n, c = self.table.get((premise, hypothesis), (1 / 3, 1 / 3, 1 / 3))
        return NliScores(e, n, c)


class HttpNliProvider:
    """NLI service client: ``{premise, hypothesis} -> {entailment, neutral,
    contradiction}``, with the same in-flight cap as the embedder."""

    def __init__(self, endpoint: str, timeout: float = 30.0,
                 max_concurrency: int = 8):
        self.endpoint = endpoint
        self.timeout = timeout
        self._slots = threading.Semaphore(max_concurrency)

    def score(self, premise: str, hypothesis: str) -> NliScores:
        with self._slots:
            reply = _post_json(
                self.endpoint, {"premise": premise, "hypothesis": hypothesis},
                self.timeout)
        try:
            return NliScores(
                float(reply["entailment"]),
                float(reply["neutral"]),
                float(reply["contradiction"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderUnavailable(f"{self.endpoint}: malformed NLI reply") from exc


@dataclass
class ScorerConfig:
    """Knobs for both similarity scorers."""

    theta: float = 0.5
    content_len: int = 500
    compare: str = "title"  # or "title+content"
    refutation_lexicon: dict[str, frozenset[str]] = field(default_factory=load_refutation_lexicons)
    embedding: object = field(default_factory=ReferenceEmbedder)
    nli: object = field(default_factory=StubNliProvider)

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie strictly between 0 and 1")
        if self.content_len <= 0:
            raise ValueError("content_len must be positive")
        if self.compare not in ("title", "title+content"):
            raise ValueError(f"unknown compare mode {self.compare!r}")

    def lexicon_for(self, lang: str) -> frozenset[str]:
        if lang not in self.refutation_lexicon:
            raise LookupError(f"no refutation lexicon configured for {lang!r}")
        return self.refutation_lexicon[lang]


@lru_cache(maxsize=256)
def _lexicon_pattern(lexemes: frozenset[str]) -> re.Pattern:
    alternatives = "|".join(re.escape(w) for w in sorted(lexemes))
    return re.compile(rf"(?<!\w)(?:{alternatives})(?!\w)")


def contains_refutation(text: str, lexemes: frozenset[str]) -> bool:
    """Case-folded whole-word match of any lexeme inside the text."""
    if not lexemes:
        return False
    return bool(_lexicon_pattern(lexemes).search(text.casefold()))


def _scorer_text(title: str, content: str, is_html: bool, cfg: ScorerConfig) -> str:
    if cfg.compare == "title" or not content or not is_html:
        return title
    return f"{title} {content[:cfg.content_len]}"


def cosine_news_similarity(article: NewsArticle, doc: EvidenceDoc, lang: str,
                           cfg: ScorerConfig, query_text: str | None = None) -> float:
    """Similarity in [0, 1] with the two zero-overrides applied first.

    Branch order is fixed: the file-type check, then the refutation-lexeme
    check, then the embedding cosine (clamped at 0).  ``query_text``, when
    given, replaces the article title on the original side so the comparison
    happens in the evidence language (the pipeline passes the translated
    query here).
    """
    if not doc.is_html:
        return 0.0
    lexemes = cfg.lexicon_for(lang)
    if contains_refutation(f"{doc.title} {doc.content}", lexemes):
        return 0.0
    original = query_text or _scorer_text(article.title, article.content, True, cfg)
    scraped = _scorer_text(doc.title, doc.content, doc.is_html, cfg)
    value = cosine_similarity(cfg.embedding.embed(original), cfg.embedding.embed(scraped))
    return max(0.0, value)


def _nli_clip(title: str, content: str, is_html: bool, content_len: int) -> str:
    if content and is_html:
        return f"{title} {content[:content_len]}"
    return title


def nli_news_similarity(article: NewsArticle, doc: EvidenceDoc, cfg: ScorerConfig) -> NliScores:
    """Score the evidence pair with the NLI binding.

    The original news fills the premise template ``The news "<text>" is
    legit``; the scraped news is the hypothesis.  Both texts are the title
    plus the first ``content_len`` characters of content; non-HTML evidence
    contributes its title only.
    """
    original = _nli_clip(article.title, article.content, True, cfg.content_len)
    scraped = _nli_clip(doc.title, doc.content, doc.is_html, cfg.content_len)
    premise = f'The news "{original}" is legit'
    return cfg.nli.score(premise, scraped)


THETA_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))


@dataclass(frozen=True)
class ThetaResult:
    theta: float
    accuracy: float
    grid: tuple[tuple[float, float], ...]


def tune_threshold(pairs) -> ThetaResult:
    """Grid-search the support threshold over {0.1, ..., 0.9}.

    Accuracy of the predicate ``score >= theta`` against the gold labels;
    ties break toward the smaller theta.
    """
    pairs = [(float(score), label) for score, label in pairs]
    if not pairs:
        raise DegenerateGold("no gold pairs given")
    labels = {label for _, label in pairs}
    unknown = labels - {SUPPORT, NOT_SUPPORT}
    if unknown:
        raise ValueError(f"labels must be Support/NotSupport, got {sorted(unknown)}")
    if len(labels) < 2:
        raise DegenerateGold(f"gold pairs contain a single class: {labels}")
    grid = []
    best_theta, best_acc = THETA_GRID[0], -1.0
    for theta in THETA_GRID:
        hits = sum(
            1 for score, label in pairs
            if (score >= theta) == (label == SUPPORT)
        )
        acc = hits / len(pairs)
        grid.append((theta, acc))
        if acc > best_acc:
            best_theta, best_acc = theta, acc
    return ThetaResult(theta=best_theta, accuracy=best_acc, grid=tuple(grid))
