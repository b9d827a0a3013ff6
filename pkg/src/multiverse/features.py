"""Feature assembly: cross-lingual evidence blocks plus linguistic baselines.

The cross-lingual evidence (CE) block lays out ``<lang>_<pos>_sim`` and
``<lang>_<pos>_rank`` dimensions in fixed (language, position) order, one
similarity and one normalized source rank per search slot; absent slots are
filled with zeros.  The monolingual (ME) block is the same layout restricted
to English.  Linguistic blocks are tf-idf n-grams, punctuation counts, and
readability statistics.  LIWC-style psycholinguistic and CFG-syntax blocks
are extension points: register a custom block with :func:`register_block`.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Dataset, NewsArticle
from .credibility import SourceRank, extract_named_entities, ne_popularity
from .errors import DuplicatePoint, EmptyText, MissingEvidence, NotFitted

DEFAULT_LANGS = ("en", "fr", "de", "es", "ru")


@dataclass(frozen=True)
class EvidencePoint:
    """Similarity and source rank for one (language, position) search slot."""

    language: str
    position: int
    sim: float
    rank: SourceRank

    def __post_init__(self):
        if self.position < 1:
            raise ValueError("position must be >= 1")
        if not 0.0 <= self.sim <= 1.0:
            raise ValueError(f"similarity must lie in [0, 1], got {self.sim}")

    def to_record(self) -> dict:
        return {
            "language": self.language,
            "position": self.position,
            "sim": self.sim,
            "rank_raw": self.rank.raw,
            "rank_norm": self.rank.normalized,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EvidencePoint":
        return cls(
            language=rec["language"],
            position=int(rec["position"]),
            sim=float(rec["sim"]),
            rank=SourceRank(int(rec["rank_raw"]), float(rec["rank_norm"])),
        )


def save_evidence_store(store: dict[str, list[EvidencePoint]], path,
                        scorer: str = "") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for article_id in sorted(store):
            row = {
                "article_id": article_id,
                "scorer": scorer,
                "points": [p.to_record() for p in store[article_id]],
            }
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def load_evidence_store(path) -> dict[str, list[EvidencePoint]]:
    store: dict[str, list[EvidencePoint]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        store[row["article_id"]] = [EvidencePoint.from_record(r) for r in row["points"]]
    return store


@dataclass(frozen=True, eq=False)
class FeatureVector:
    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] != len(self.names):
            raise ValueError("names and values must align")
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")
        arr.setflags(write=False)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", arr)

    def concat(self, other: "FeatureVector") -> "FeatureVector":
        return FeatureVector(self.names + other.names,
                             np.concatenate([self.values, other.values]))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))


def ce_dim_names(langs, top_n: int, include_sim: bool = True,
                 include_rank: bool = True) -> tuple[str, ...]:
    names = []
    for lang in langs:
        for pos in range(1, top_n + 1):
            if include_sim:
                names.append(f"{lang}_{pos}_sim")
            if include_rank:
                names.append(f"{lang}_{pos}_rank")
    return tuple(names)


def assemble_ce_block(points, langs=DEFAULT_LANGS, top_n: int = 10,
                      include_sim: bool = True, include_rank: bool = True) -> FeatureVector:
    """Fixed-layout evidence block; absent slots become (0, 0).

    Points outside the requested languages or beyond ``top_n`` are ignored,
    which makes monolingual projection a special case of assembly.
    """
    langs = tuple(langs)
    slot: dict[tuple[str, int], EvidencePoint] = {}
    for point in points:
        key = (point.language, point.position)
        if key[0] not in langs or key[1] > top_n:
            continue
        if key in slot:
            raise DuplicatePoint(*key)
        slot[key] = point
    values = []
    for lang in langs:
        for pos in range(1, top_n + 1):
            point = slot.get((lang, pos))
            if include_sim:
                values.append(point.sim if point else 0.0)
            if include_rank:
                values.append(point.rank.normalized if point else 0.0)
    return FeatureVector(ce_dim_names(langs, top_n, include_sim, include_rank),
                         np.asarray(values))


def assemble_me_block(points, top_n: int = 10, include_sim: bool = True,
                      include_rank: bool = True) -> FeatureVector:
    """The CE layout restricted to English evidence."""
    return assemble_ce_block(points, langs=("en",), top_n=top_n,
                             include_sim=include_sim, include_rank=include_rank)


_WORD_RE = re.compile(r"[\w’']+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Unicode word tokens, case-folded, no stemming."""
    return [m.group(0).strip("’'") for m in _WORD_RE.finditer(text.casefold())
            if m.group(0).strip("’'")]


class NgramTfidf:
    """Unigram+bigram tf-idf with smoothed idf ``ln((1+D)/(1+df)) + 1``.

    The vocabulary keeps terms with document frequency at least ``min_df``,
    capped at ``max_dims`` by document frequency (ties resolved
    alphabetically), and every transformed document is L2-normalized.
    """

    def __init__(self, min_df: int = 2, max_dims: int = 10000):
        self.min_df = min_df
        self.max_dims = max_dims
        self.vocabulary: dict[str, int] | None = None
        self.idf: np.ndarray | None = None

    @staticmethod
    def _terms(text: str) -> list[str]:
        tokens = tokenize(text)
        bigrams = [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
        return tokens + bigrams

    def fit(self, texts) -> "NgramTfidf":
        texts = list(texts)
        df: Counter = Counter()
        for text in texts:
            df.update(set(self._terms(text)))
        kept = [t for t, c in df.items() if c >= self.min_df]
        kept.sort(key=lambda t: (-df[t], t))
        kept = sorted(kept[: self.max_dims])
        self.vocabulary = {t: i for i, t in enumerate(kept)}
        n_docs = len(texts)
        self.idf = np.array(
            [np.log((1 + n_docs) / (1 + df[t])) + 1.0 for t in kept])
        return self

    def _check_fitted(self):
        if self.vocabulary is None:
            raise NotFitted("call fit() before transform()")

    @property
    def dim_names(self) -> tuple[str, ...]:
        self._check_fitted()
        return tuple(f"ngram:{t}" for t in self.vocabulary)

    def transform(self, text: str) -> FeatureVector:
        self._check_fitted()
        values = np.zeros(len(self.vocabulary))
        for term, count in Counter(self._terms(text)).items():
            idx = self.vocabulary.get(term)
            if idx is not None:
                values[idx] = count * self.idf[idx]
        norm = np.linalg.norm(values)
        if norm > 0:
            values /= norm
        return FeatureVector(self.dim_names, values)

    def vocabulary_hash(self) -> str:
        self._check_fitted()
        payload = json.dumps(
            [[t, float(self.idf[i])] for t, i in sorted(self.vocabulary.items())])
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


_PUNCT_CLASSES = (
    ("period", "."),
    ("comma", ","),
    ("dash", "-–—"),
    ("question", "?"),
    ("exclaim", "!"),
)


def punctuation_features(text: str) -> FeatureVector:
    """Counts of periods, commas, dashes, question and exclamation marks,
    each also normalized per 100 characters."""
    names, values = [], []
    length = len(text)
    for name, chars in _PUNCT_CLASSES:
        count = sum(text.count(c) for c in chars)
        names.append(f"punct_{name}")
        values.append(float(count))
        names.append(f"punct_{name}_per100")
        values.append(100.0 * count / length if length else 0.0)
    return FeatureVector(tuple(names), np.asarray(values))


_SENTENCE_SPLIT = re.compile(r"[.!?]+")
_LETTER_WORD = re.compile(r"[^\W\d_]+", re.UNICODE)
_VOWEL_GROUP = re.compile(r"[aeiouyàéèêöüä]+")


def count_syllables(word: str) -> int:
    """Vowel-group heuristic, at least one syllable per word."""
    return max(1, len(_VOWEL_GROUP.findall(word.casefold())))


def readability_features(text: str) -> FeatureVector:
    """Surface counts plus Flesch Reading Ease, Flesch-Kincaid grade,
    Gunning Fog, and the Automated Readability Index.

    Counting rules: words are letter runs, characters are the alphanumeric
    characters of the text, complex words have three or more syllables,
    long words at least seven letters, and sentences are segments between
    ``.!?`` runs that contain at least one word (minimum one).
    """
    words = _LETTER_WORD.findall(text)
    if not words:
        raise EmptyText("readability needs at least one word")
    n_words = len(words)
    n_chars = sum(1 for ch in text if ch.isalnum())
    sentences = [s for s in _SENTENCE_SPLIT.split(text) if _LETTER_WORD.search(s)]
    n_sentences = max(1, len(sentences))
    syllables = [count_syllables(w) for w in words]
    n_syllables = sum(syllables)
    n_complex = sum(1 for s in syllables if s >= 3)
    n_long = sum(1 for w in words if len(w) >= 7)
    n_types = len({w.casefold() for w in words})

    wps = n_words / n_sentences
    spw = n_syllables / n_words
    fre = 206.835 - 1.015 * wps - 84.6 * spw
    fkg = 0.39 * wps + 11.8 * spw - 15.59
    fog = 0.4 * (wps + 100.0 * n_complex / n_words)
    ari = 4.71 * n_chars / n_words + 0.5 * wps - 21.43

    names = ("read_chars", "read_words", "read_sentences", "read_syllables",
             "read_complex_words", "read_long_words", "read_word_types",
             "read_fre", "read_fkg", "read_fog", "read_ari")
    values = np.asarray([n_chars, n_words, n_sentences, n_syllables,
                         n_complex, n_long, n_types, fre, fkg, fog, ari],
                        dtype=np.float64)
    return FeatureVector(names, values)


BLOCKS = ("ce", "ce_rank", "me", "me_rank", "ngrams", "punctuation",
          "readability", "nepop")

_EXTRA_BLOCKS: dict[str, object] = {}


def register_block(name: str, transform) -> None:
    """Extension point for external feature blocks (psycholinguistic
    lexicons, syntax parsers, ...).

    ``transform(article, points) -> FeatureVector`` must be pure and emit a
    stable dimension layout.
    """
    if name in BLOCKS:
        raise ValueError(f"block name {name!r} is reserved")
    _EXTRA_BLOCKS[name] = transform


def _article_text(article: NewsArticle) -> str:
    return f"{article.title}\n{article.content}" if article.content else article.title


@dataclass
class FeatureSchema:
    """An ordered list of feature blocks with any fitted state.

    ``fit`` must run on the training split before any split is transformed;
    the n-gram vocabulary is the only stateful part.
    """

    blocks: tuple[str, ...]
    langs: tuple[str, ...] = DEFAULT_LANGS
    top_n: int = 10
    min_df: int = 2
    max_dims: int = 10000
    popularity_table: dict[str, float] = field(default_factory=dict)
    _tfidf: NgramTfidf | None = field(default=None, repr=False)
    _fitted: bool = field(default=False, repr=False)

    def __post_init__(self):
        self.blocks = tuple(self.blocks)
        self.langs = tuple(self.langs)
        unknown = [b for b in self.blocks if b not in BLOCKS and b not in _EXTRA_BLOCKS]
        if unknown:
            raise ValueError(f"unknown feature blocks: {unknown}")

    def fit(self, train_articles) -> "FeatureSchema":
        if "ngrams" in self.blocks:
            self._tfidf = NgramTfidf(self.min_df, self.max_dims).fit(
                _article_text(a) for a in train_articles)
        self._fitted = True
        return self

    def _check_fitted(self):
        if not self._fitted:
            raise NotFitted("schema must be fitted on the training split first")

    def transform(self, article: NewsArticle, points=()) -> FeatureVector:
        self._check_fitted()
        parts: list[FeatureVector] = []
        for block in self.blocks:
            if block == "ce":
                parts.append(assemble_ce_block(points, self.langs, self.top_n))
            elif block == "ce_rank":
                parts.append(assemble_ce_block(points, self.langs, self.top_n,
                                               include_sim=False))
            elif block == "me":
                parts.append(assemble_me_block(points, self.top_n))
            elif block == "me_rank":
                parts.append(assemble_me_block(points, self.top_n,
                                               include_sim=False))
            elif block == "ngrams":
                parts.append(self._tfidf.transform(_article_text(article)))
            elif block == "punctuation":
                parts.append(punctuation_features(_article_text(article)))
            elif block == "readability":
                try:
                    parts.append(readability_features(_article_text(article)))
                except EmptyText:
                    empty = readability_features("placeholder")
                    parts.append(FeatureVector(empty.names, np.zeros(len(empty.names))))
            elif block == "nepop":
                entities = extract_named_entities(article.title, article.content)
                pop = ne_popularity(entities, self.popularity_table)
                parts.append(FeatureVector(
                    ("nepop_max", "nepop_matches"),
                    np.asarray([pop.aggregate, float(len(pop.entities))])))
            else:
                parts.append(_EXTRA_BLOCKS[block](article, points))
        vec = parts[0]
        for part in parts[1:]:
            vec = vec.concat(part)
        return vec

    def fingerprint(self) -> str:
        self._check_fitted()
        payload = {
            "blocks": list(self.blocks),
            "langs": list(self.langs),
            "top_n": self.top_n,
            "min_df": self.min_df,
            "max_dims": self.max_dims,
            "vocabulary": self._tfidf.vocabulary_hash() if self._tfidf else None,
        }
        return hashlib.sha256(json.dumps(payload).encode("utf-8")).hexdigest()

    def manifest(self) -> dict:
        self._check_fitted()
        return {
            "blocks": list(self.blocks),
            "langs": list(self.langs),
            "top_n": self.top_n,
            "min_df": self.min_df,
            "max_dims": self.max_dims,
            "vocabulary_hash": self._tfidf.vocabulary_hash() if self._tfidf else None,
            "fingerprint": self.fingerprint(),
        }


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    names: tuple[str, ...]
    X: np.ndarray
    fingerprint: str = ""

    def __post_init__(self):
        arr = np.asarray(self.X, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != len(self.names):
            raise ValueError("matrix columns must align with names")
        arr.setflags(write=False)
        object.__setattr__(self, "X", arr)
        if not self.fingerprint:
            digest = hashlib.sha256(json.dumps(list(self.names)).encode()).hexdigest()
            object.__setattr__(self, "fingerprint", digest)

    @property
    def shape(self):
        return self.X.shape


def build_matrix(split: Dataset, schema: FeatureSchema,
                 evidence_store: dict[str, list[EvidencePoint]],
                 strict: bool = True) -> tuple[FeatureMatrix, np.ndarray]:
    """Transform every article of a split; rows follow article order."""
    schema._check_fitted()
    needs_evidence = any(b in ("ce", "ce_rank", "me", "me_rank") for b in schema.blocks)
    rows, labels = [], []
    names: tuple[str, ...] | None = None
    for article in split:
        points = evidence_store.get(article.id)
        if points is None:
            if strict and needs_evidence:
                raise MissingEvidence(article.id)
            points = []
        vec = schema.transform(article, points)
        if names is None:
            names = vec.names
        rows.append(vec.values)
        labels.append(article.label)
    if names is None:
        raise ValueError("cannot build a matrix from an empty split")
    X = np.vstack(rows)
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    return (FeatureMatrix(names, X, fingerprint=schema.fingerprint()),
            np.asarray(labels, dtype=object))


def export_matrix_csv(matrix: FeatureMatrix, labels, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(matrix.names) + ["label"])
        for row, label in zip(matrix.X, labels):
            writer.writerow([repr(v) for v in row.tolist()] + [label])


def import_matrix_csv(path) -> tuple[FeatureMatrix, np.ndarray]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "label":
            raise ValueError("feature CSV must end with a label column")
        names = tuple(header[:-1])
        rows, labels = [], []
        for rec in reader:
            rows.append([float(v) for v in rec[:-1]])
            labels.append(rec[-1])
    return FeatureMatrix(names, np.asarray(rows)), np.asarray(labels, dtype=object)
