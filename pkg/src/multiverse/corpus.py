"""Article data model, dataset ingestion, deterministic splits, and the
offline search-snapshot store.

The canonical article interchange format is JSON-lines with the keys
``id,title,content,url,label,topic,language,published``.  CSV files with the
same header are accepted for dataset import only.  Search snapshots live
under ``<root>/<article_id>/<lang>.json`` and make reruns hermetic: the
pipeline never needs a live search engine once snapshots exist.
"""

from __future__ import annotations

import csv
import json
import random
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urlparse

from .errors import MissingSnapshot, SchemaViolation, TooSmall, UnreadableFile

LABELS = ("Fake", "Legit", "Unknown")

_LABEL_ALIASES = {
    "fake": "Fake",
    "unreliable": "Fake",
    "legit": "Legit",
    "real": "Legit",
    "true": "Legit",
    "reliable": "Legit",
    "unknown": "Unknown",
}

ARTICLE_FIELDS = ("id", "title", "content", "url", "label", "topic", "language", "published")


def hostname_of(url: str) -> str:
    """Lowercase hostname of ``url`` with any leading ``www.`` stripped."""
    parsed = urlparse(url if "://" in url else "//" + url)
    host = parsed.netloc.rsplit("@", 1)[-1].split(":")[0].casefold()
    return host[4:] if host.startswith("www.") else host


def normalize_label(value) -> str | None:
    if value is None:
        return None
    text = str(value).strip()
    if text in LABELS:
        return text
    return _LABEL_ALIASES.get(text.casefold())


@dataclass(frozen=True)
class NewsArticle:
    """One labeled news item, the unit the whole pipeline operates on."""

    id: str
    title: str
    content: str = ""
    url: str = ""
    source_domain: str = ""
    language: str = "en"
    label: str = "Unknown"
    topic: str = ""
    published: str | None = None

    def __post_init__(self):
        if not self.title or not self.title.strip():
            raise ValueError("article title must be nonempty")
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if not self.source_domain and self.url:
            object.__setattr__(self, "source_domain", hostname_of(self.url))

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "content": self.content,
            "url": self.url,
            "label": self.label,
            "topic": self.topic,
            "language": self.language,
            "published": self.published,
        }


@dataclass(frozen=True)
class EvidenceDoc:
    """One scraped search result for an article in one language."""

    url: str
    title: str
    content: str = ""
    language: str = "und"
    position: int = 1
    source_domain: str = ""
    is_html: bool = True

    def __post_init__(self):
        if self.position < 1:
            raise ValueError("position must be >= 1")
        if not self.source_domain and self.url:
            object.__setattr__(self, "source_domain", hostname_of(self.url))

    def to_record(self) -> dict:
        return {
            "url": self.url,
            "title": self.title,
            "content": self.content,
            "language": self.language,
            "position": self.position,
            "source_domain": self.source_domain,
            "is_html": self.is_html,
        }

    @classmethod
    def from_record(cls, rec: dict, language: str | None = None) -> "EvidenceDoc":
        return cls(
            url=rec.get("url", ""),
            title=rec.get("title", ""),
            content=rec.get("content", "") or "",
            language=rec.get("language") or language or "und",
            position=int(rec.get("position", 1)),
            source_domain=rec.get("source_domain", ""),
            is_html=bool(rec.get("is_html", True)),
        )


@dataclass
class Dataset:
    name: str
    articles: list[NewsArticle] = field(default_factory=list)
    error_report: list[dict] = field(default_factory=list)

    def __post_init__(self):
        ids = [a.id for a in self.articles]
        if len(set(ids)) != len(ids):
            dupes = sorted(i for i, c in Counter(ids).items() if c > 1)
            raise ValueError(f"duplicate article ids: {dupes}")

    @property
    def counts(self) -> dict[str, int]:
        return dict(Counter(a.label for a in self.articles))

    def __len__(self) -> int:
        return len(self.articles)

    def __iter__(self):
        return iter(self.articles)

    def by_id(self, article_id: str) -> NewsArticle:
        for a in self.articles:
            if a.id == article_id:
                return a
        raise KeyError(article_id)


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.7
    test_frac: float = 0.2
    dev_frac: float = 0.1
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_frac, self.test_frac, self.dev_frac)
        if any(f < 0 for f in fracs):
            raise ValueError("split fractions must be nonnegative")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(fracs)}")


def ingest_dataset(path, format: str | None = None, name: str | None = None,
                   strict: bool = True) -> Dataset:
    """Load and validate a dataset from a JSON-lines or CSV file.

    Every row needs a nonempty ``title`` and a recognizable ``label``.
    In strict mode the first malformed row raises :class:`SchemaViolation`;
    otherwise bad rows are skipped and collected into ``error_report``.
    """
    path = Path(path)
    fmt = format or ("csv" if path.suffix.casefold() == ".csv" else "jsonl")
    if fmt not in ("jsonl", "csv"):
        raise ValueError(f"unknown dataset format {fmt!r}")
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc

    rows: list[tuple[int, dict]] = []
    errors: list[dict] = []

    def bad(row: int, fieldname: str, message: str):
        if strict:
            raise SchemaViolation(row, fieldname, message)
        errors.append({"row": row, "field": fieldname, "message": message})

    if fmt == "jsonl":
        for i, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                bad(i, "record", f"invalid JSON: {exc}")
                continue
            if not isinstance(rec, dict):
                bad(i, "record", "row is not an object")
                continue
            rows.append((i, rec))
    else:
        reader = csv.DictReader(text.splitlines())
        for i, rec in enumerate(reader, start=2):  # header is line 1
            rows.append((i, {k: v for k, v in rec.items() if k is not None}))

    articles: list[NewsArticle] = []
    seen_ids: set[str] = set()
    for i, rec in rows:
        title = str(rec.get("title") or "").strip()
        if not title:
            bad(i, "title", "missing or empty title")
            continue
        label = normalize_label(rec.get("label"))
        if label is None:
            bad(i, "label", f"unrecognized label {rec.get('label')!r}")
            continue
        article_id = str(rec.get("id") or f"art-{i}")
        if article_id in seen_ids:
            bad(i, "id", f"duplicate id {article_id!r}")
            continue
        published = rec.get("published") or None
        try:
            article = NewsArticle(
                id=article_id,
                title=title,
                content=str(rec.get("content") or ""),
                url=str(rec.get("url") or ""),
                language=str(rec.get("language") or "en"),
                label=label,
                topic=str(rec.get("topic") or ""),
                published=str(published) if published else None,
            )
        except ValueError as exc:
            bad(i, "record", str(exc))
            continue
        seen_ids.add(article_id)
        articles.append(article)

    return Dataset(name or path.stem, articles, error_report=errors)


def write_articles_jsonl(dataset: Dataset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for a in dataset.articles:
            fh.write(json.dumps(a.to_record(), ensure_ascii=False) + "\n")


def _largest_remainder(n: int, fracs) -> list[int]:
    ideals = [n * f for f in fracs]
    counts = [int(v) for v in ideals]
    remainder = n - sum(counts)
    order = sorted(range(len(fracs)), key=lambda j: (-(ideals[j] - counts[j]), j))
    for j in order[:remainder]:
        counts[j] += 1
    return counts


def split_dataset(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministic stratified train/test/dev partition.

    Procedure (fixed so the partition is reproducible from the seed alone):
    one ``random.Random(seed)`` instance shuffles each label group, with
    groups visited in sorted label order and each group holding its articles
    in original dataset order.  Within a group the split sizes come from
    largest-remainder rounding of the fractions (ties favor train, then
    test), so each label's proportions hold within one article per split.
    """
    if len(d) < 10:
        raise TooSmall(f"need at least 10 articles to split, got {len(d)}")
    rng = random.Random(spec.seed)
    parts: tuple[list[NewsArticle], ...] = ([], [], [])
    for label in sorted({a.label for a in d.articles}):
        group = [a for a in d.articles if a.label == label]
        rng.shuffle(group)
        n_train, n_test, _ = _largest_remainder(
            len(group), (spec.train_frac, spec.test_frac, spec.dev_frac))
        parts[0].extend(group[:n_train])
        parts[1].extend(group[n_train:n_train + n_test])
        parts[2].extend(group[n_train + n_test:])
    names = ("train", "test", "dev")
    return tuple(Dataset(f"{d.name}/{part}", articles)
                 for part, articles in zip(names, parts))  # type: ignore[return-value]


@dataclass(frozen=True)
class SearchSnapshot:
    """Frozen search results for one (article, language) query."""

    article_id: str
    language: str
    results: tuple[EvidenceDoc, ...]
    captured_at: str
    query: str = ""

    def __post_init__(self):
        object.__setattr__(self, "results", tuple(self.results))
        positions = [doc.position for doc in self.results]
        if positions != sorted(positions):
            raise ValueError("snapshot results must be ordered by position")

    @property
    def query_key(self) -> tuple[str, str]:
        return (self.article_id, self.language)


class SnapshotStore:
    """Content-addressed on-disk snapshot store.

    Reads are safe from any thread; writes are serialized by a store-level
    lock and performed atomically (write to a temp file, then replace), so
    storing the same key twice deterministically overwrites.
    """

    def __init__(self, root):
        self.root = Path(root)
        self._lock = threading.Lock()

    def path_for(self, article_id: str, language: str) -> Path:
        return self.root / article_id / f"{language}.json"

    def store(self, snapshot: SearchSnapshot) -> Path:
        target = self.path_for(snapshot.article_id, snapshot.language)
        payload = {
            "captured_at": snapshot.captured_at,
            "query": snapshot.query,
            "results": [doc.to_record() for doc in snapshot.results],
        }
        data = json.dumps(payload, ensure_ascii=False, indent=1)
        with self._lock:
            target.parent.mkdir(parents=True, exist_ok=True)
            tmp = target.with_suffix(".json.tmp")
            tmp.write_text(data, encoding="utf-8")
            tmp.replace(target)
        return target

    def load(self, article_id: str, language: str) -> SearchSnapshot:
        target = self.path_for(article_id, language)
        if not target.exists():
            raise MissingSnapshot((article_id, language))
        payload = json.loads(target.read_text(encoding="utf-8"))
        docs = tuple(EvidenceDoc.from_record(rec, language=language)
                     for rec in payload.get("results", []))
        return SearchSnapshot(
            article_id=article_id,
            language=language,
            results=docs,
            captured_at=payload.get("captured_at", ""),
            query=payload.get("query", ""),
        )

    def has(self, article_id: str, language: str) -> bool:
        return self.path_for(article_id, language).exists()

    def keys(self) -> list[tuple[str, str]]:
        if not self.root.exists():
            return []
        found = []
        for article_dir in sorted(self.root.iterdir()):
            if not article_dir.is_dir():
                continue
            for f in sorted(article_dir.glob("*.json")):
                found.append((article_dir.name, f.stem))
        return found
