"""Evidence retrieval: text extraction, query translation, and search.

Search providers sit behind one wire shape, whether live or replayed from
fixtures: request ``{query, language, top_n, time_range}``, response
``{"results": [{url, title, content, position}]}``.  The fixture provider
is an index over stored response files and is a pure function of
(query, language, top_n), which keeps pipeline runs hermetic.
"""

from __future__ import annotations

import json
import logging
import re
import urllib.error
import urllib.parse
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from html.parser import HTMLParser
from pathlib import Path

from .corpus import EvidenceDoc, NewsArticle, SearchSnapshot, SnapshotStore
from .errors import (
    AllProvidersFailed,
    ExtractionFailed,
    NonTextMedia,
    TranslatorUnavailable,
    UnsupportedLanguage,
)

log = logging.getLogger(__name__)

DEFAULT_LANGUAGES = ("en", "fr", "de", "es", "ru")

_HTML_TYPES = ("text/html", "application/xhtml+xml")
_NON_HTML_EXTENSIONS = {
    ".pdf", ".doc", ".docx", ".ppt", ".pptx", ".xls", ".xlsx", ".zip",
    ".gz", ".tar", ".rar", ".jpg", ".jpeg", ".png", ".gif", ".svg",
    ".mp3", ".mp4", ".avi", ".mov", ".exe", ".dmg",
}


def looks_like_html(url: str) -> bool:
    path = urllib.parse.urlparse(url).path if "://" in url else url
    suffix = Path(path).suffix.casefold()
    return suffix not in _NON_HTML_EXTENSIONS


class _HtmlTextParser(HTMLParser):
    _SKIP = {"script", "style", "noscript"}
    _HEADINGS = {"h1", "h2", "h3", "h4", "h5", "h6"}

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.title_parts: list[str] = []
        self.heading_parts: list[str] = []
        self.paragraphs: list[str] = []
        self._current: list[str] = []
        self._stack: list[str] = []
        self._have_heading = False

    def handle_starttag(self, tag, attrs):
        self._stack.append(tag)
        if tag == "p" or tag in self._HEADINGS:
            self._current = []

    def handle_endtag(self, tag):
        while self._stack and self._stack[-1] != tag:
            self._stack.pop()
        if self._stack:
            self._stack.pop()
        text = " ".join(" ".join(self._current).split())
        if tag == "p" and text:
            self.paragraphs.append(text)
        elif tag in self._HEADINGS and text and not self._have_heading:
            self.heading_parts.append(text)
            self._have_heading = True
        if tag == "p" or tag in self._HEADINGS:
            self._current = []

    def handle_data(self, data):
        if any(t in self._SKIP for t in self._stack):
            return
        if "title" in self._stack:
            self.title_parts.append(data)
        if self._stack and (self._stack[-1] == "p" or self._stack[-1] in self._HEADINGS):
            self._current.append(data)


def _media_kind(media_type: str) -> str:
    base = media_type.split(";")[0].strip().casefold()
    if base in _HTML_TYPES:
        return "html"
    if base == "text/plain":
        return "plain"
    raise NonTextMedia(f"cannot extract text from media type {media_type!r}")


def _charset_of(media_type: str) -> str:
    match = re.search(r"charset=([\w\-]+)", media_type, re.IGNORECASE)
    return match.group(1) if match else "utf-8"


def extract_text(raw: bytes | str, media_type: str) -> tuple[str, str]:
    """Title and content of a document.

    HTML uses the ``<title>`` element, falling back to the first heading;
    plain text uses the first nonempty line.  Non-text media raises
    :class:`NonTextMedia`, which downstream scorers map to similarity 0.
    """
    kind = _media_kind(media_type)
    if isinstance(raw, bytes):
        text = raw.decode(_charset_of(media_type), errors="replace")
    else:
        text = raw
    if kind == "plain":
        lines = [line.strip() for line in text.splitlines() if line.strip()]
        if not lines:
            raise ExtractionFailed("plain-text document is empty")
        return lines[0], "\n".join(lines[1:])
    parser = _HtmlTextParser()
    parser.feed(text)
    parser.close()
    title = " ".join(" ".join(parser.title_parts).split())
    if not title and parser.heading_parts:
        title = parser.heading_parts[0]
    if not title:
        raise ExtractionFailed("no <title> element or heading found")
    return title, "\n\n".join(parser.paragraphs)


@dataclass(frozen=True)
class QuerySpec:
    article_id: str
    languages: tuple[str, ...] = DEFAULT_LANGUAGES
    top_n: int = 10
    time_range: tuple[str, str] | None = None

    def __post_init__(self):
        object.__setattr__(self, "languages", tuple(self.languages))
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")
        if not self.languages:
            raise ValueError("languages must be nonempty")
        if len(set(self.languages)) != len(self.languages):
            raise ValueError("languages must be unique")


@dataclass(frozen=True)
class TranslatedQuery:
    article_id: str
    language: str
    text: str

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("translated query text must be nonempty")


def _norm_query(text: str) -> str:
    return " ".join(text.casefold().split())


class FixtureTranslator:
    """Lookup-table translator; missing entries fall back to the source text
    with a logged warning so the pipeline stays total."""

    def __init__(self, table: dict[tuple[str, str], str], languages=DEFAULT_LANGUAGES,
                 source_language: str = "en"):
        self.table = {(_norm_query(text), lang): out
                      for (text, lang), out in table.items()}
        self.languages = tuple(languages)
        self.source_language = source_language

    @classmethod
    def from_file(cls, path) -> "FixtureTranslator":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        table = {
            (entry["text"], entry["lang"]): entry["translation"]
            for entry in payload.get("entries", [])
        }
        return cls(
            table,
            languages=tuple(payload.get("languages", DEFAULT_LANGUAGES)),
            source_language=payload.get("source_language", "en"),
        )

    def supports(self, lang: str) -> bool:
        return lang in self.languages

    def translate(self, text: str, lang: str) -> str:
        if not self.supports(lang):
            raise UnsupportedLanguage(f"language {lang!r} not in fixture table")
        if lang == self.source_language:
            return text
        hit = self.table.get((_norm_query(text), lang))
        if hit is None:
            log.warning("no fixture translation for %r into %s; using source text",
                        text, lang)
            return text
        return hit


class IdentityTranslator:
    """Passes queries through unchanged; any language is supported."""

    def supports(self, lang: str) -> bool:
        return True

    def translate(self, text: str, lang: str) -> str:
        return text


class HttpTranslator:
    """Translation service client: ``{text, language} -> {text}``."""

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def supports(self, lang: str) -> bool:
        return True

    def translate(self, text: str, lang: str) -> str:
        payload = json.dumps({"text": text, "language": lang}).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint, data=payload,
            headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                reply = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise TranslatorUnavailable(f"{self.endpoint}: {exc}") from exc
        out = reply.get("text")
        if not out:
            raise TranslatorUnavailable(f"{self.endpoint}: empty translation reply")
        return out


def translate_title(title: str, lang: str, translator,
                    article_id: str = "") -> TranslatedQuery:
    if hasattr(translator, "supports") and not translator.supports(lang):
        raise UnsupportedLanguage(f"language {lang!r} unsupported by translator")
    return TranslatedQuery(article_id=article_id, language=lang,
                           text=translator.translate(title, lang))


def _docs_from_records(records, language: str, top_n: int) -> list[EvidenceDoc]:
    docs = []
    for i, rec in enumerate(records[:top_n], start=1):
        url = rec.get("url", "")
        docs.append(EvidenceDoc(
            url=url,
            title=rec.get("title", ""),
            content=rec.get("content", "") or "",
            language=rec.get("language") or language,
            position=int(rec.get("position", i)),
            is_html=bool(rec.get("is_html", looks_like_html(url))),
        ))
    return docs


class FixtureSearchProvider:
    """Replays stored search responses keyed by (normalized query, language).

    Each fixture file carries ``{"query", "language", "results": [...]}``
    with the same result schema as the live wire protocol.
    """

    def __init__(self, index: dict[tuple[str, str], list[dict]]):
        self.index = {(_norm_query(q), lang): results
                      for (q, lang), results in index.items()}

    @classmethod
    def from_dir(cls, path) -> "FixtureSearchProvider":
        index: dict[tuple[str, str], list[dict]] = {}
        for file in sorted(Path(path).glob("*.json")):
            payload = json.loads(file.read_text(encoding="utf-8"))
            key = (payload["query"], payload["language"])
            index[key] = payload.get("results", [])
        return cls(index)

    def search(self, query: str, language: str, top_n: int,
               time_range=None) -> list[EvidenceDoc]:
        records = self.index.get((_norm_query(query), language), [])
        return _docs_from_records(records, language, top_n)


class HttpSearchProvider:
    """Live search adapter speaking the JSON wire protocol, with one retry
    and a per-request timeout."""

    def __init__(self, endpoint: str, timeout: float = 10.0, retries: int = 1):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries

    def search(self, query: str, language: str, top_n: int,
               time_range=None) -> list[EvidenceDoc]:
        payload = json.dumps({
            "query": query,
            "language": language,
            "top_n": top_n,
            "time_range": list(time_range) if time_range else None,
        }).encode("utf-8")
        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            request = urllib.request.Request(
                self.endpoint, data=payload,
                headers={"Content-Type": "application/json"})
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as response:
                    reply = json.loads(response.read().decode("utf-8"))
                return _docs_from_records(reply.get("results", []), language, top_n)
            except (urllib.error.URLError, OSError, ValueError) as exc:
                last_error = exc
        raise AllProvidersFailed(f"search endpoint failed: {last_error}")


def retrieve_evidence(article: NewsArticle, query: QuerySpec, translator,
                      search_provider, snapshot_store: SnapshotStore | None = None,
                      captured_at: str = "", failures: dict | None = None,
                      ) -> dict[str, list[EvidenceDoc]]:
    """Translate the title per language and fetch top-N evidence for each.

    Languages are fetched concurrently and merged deterministically in the
    order given by the query spec.  A failing language yields an empty list
    and an entry in ``failures``; only a failure of every language raises
    :class:`AllProvidersFailed`.  Results are persisted to the snapshot
    store when one is attached; the write per (article, language) is atomic.
    """
    recorded_failures: dict[str, str] = {} if failures is None else failures

    def fetch(lang: str):
        translated = translate_title(article.title, lang, translator,
                                     article_id=article.id)
        docs = search_provider.search(translated.text, lang, query.top_n,
                                      query.time_range)
        return translated.text, docs

    results: dict[str, list[EvidenceDoc]] = {}
    with ThreadPoolExecutor(max_workers=max(1, len(query.languages))) as pool:
        futures = {lang: pool.submit(fetch, lang) for lang in query.languages}
        for lang in query.languages:
            try:
                query_text, docs = futures[lang].result()
            except Exception as exc:  # per-language isolation
                log.warning("retrieval failed for language %s: %s", lang, exc)
                recorded_failures[lang] = str(exc)
                results[lang] = []
                continue
            results[lang] = docs
            if snapshot_store is not None:
                snapshot_store.store(SearchSnapshot(
                    article_id=article.id,
                    language=lang,
                    results=tuple(docs),
                    captured_at=captured_at,
                    query=query_text,
                ))
    if recorded_failures and len(recorded_failures) == len(query.languages):
        raise AllProvidersFailed(
            f"every language failed for article {article.id}: {recorded_failures}")
    return results
