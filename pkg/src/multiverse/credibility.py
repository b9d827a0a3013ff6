"""Source-rank and named-entity popularity features.

Rank data is a static table ingested at startup (``ranks.tsv`` with
``domain<TAB>rank`` lines); hosts not in the table get a sentinel
``default_rank``.  Registered domains are resolved against a bundled
public-suffix snapshot so the hostname to domain mapping is bit-exact
across runs.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import hostname_of
from .errors import UnparseableUrl

DEFAULT_RANK = 10_000_000


def _load_data_lines(name: str) -> list[str]:
    text = resources.files("multiverse.data").joinpath(name).read_text(encoding="utf-8")
    return [line.strip() for line in text.splitlines()
            if line.strip() and not line.startswith("#")]


_SUFFIXES: frozenset[str] = frozenset(_load_data_lines("public_suffixes.txt"))
_COMMON_WORDS: frozenset[str] = frozenset(w.casefold() for w in _load_data_lines("common_words.txt"))


def registered_domain(host: str) -> str:
    """Map a hostname to its registered domain using the bundled suffix list.

    The longest matching public suffix wins; unknown top-level domains fall
    back to the last two labels.
    """
    host = host.casefold().strip(".")
    if host.startswith("www."):
        host = host[4:]
    labels = host.split(".")
    if len(labels) <= 1:
        return host
    for start in range(1, len(labels)):
        suffix = ".".join(labels[start:])
        if suffix in _SUFFIXES:
            return ".".join(labels[start - 1:])
    return ".".join(labels[-2:])


@dataclass(frozen=True)
class RankTable:
    ranks: dict[str, int]
    default_rank: int = DEFAULT_RANK

    def __post_init__(self):
        if any(r < 1 for r in self.ranks.values()):
            raise ValueError("ranks must be >= 1")
        if self.ranks and self.default_rank <= max(self.ranks.values()):
            raise ValueError("default_rank must exceed every listed rank")

    @classmethod
    def from_tsv(cls, path, default_rank: int = DEFAULT_RANK) -> "RankTable":
        ranks: dict[str, int] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            domain, _, rank = line.partition("\t")
            ranks[domain.strip().casefold()] = int(rank)
        return cls(ranks, default_rank)


@dataclass(frozen=True)
class SourceRank:
    raw: int
    normalized: float


def normalize_rank(raw: int, default_rank: int = DEFAULT_RANK) -> float:
    """Squash a raw popularity rank into [0, 1], higher meaning more credible.

    ``1 - log10(raw) / log10(default_rank)``, clamped; rank 1 maps to 1.0 and
    the unknown-host sentinel maps to 0.0, strictly decreasing in between.
    """
    if raw < 1:
        raise ValueError("rank must be >= 1")
    value = 1.0 - math.log10(raw) / math.log10(default_rank)
    return min(1.0, max(0.0, value))


_HOSTNAME_RE = re.compile(r"^[a-z0-9¡-￿]([a-z0-9¡-￿.-]*[a-z0-9¡-￿])?$")


def lookup_rank(url: str, table: RankTable) -> SourceRank:
    host = hostname_of(url)
    if not host or not _HOSTNAME_RE.match(host):
        raise UnparseableUrl(f"cannot extract hostname from {url!r}")
    domain = registered_domain(host)
    raw = table.ranks.get(domain, table.default_rank)
    return SourceRank(raw=raw, normalized=normalize_rank(raw, table.default_rank))


_TOKEN_RE = re.compile(r"[^\W\d_]+(?:['’][^\W\d_]+)?", re.UNICODE)
_BOUNDARY_RE = re.compile(r"[.!?:;,\"()\[\]{}|/\\–—-]|‘|’\s|“|”")
_SUFFIX_STRIP = ("ing", "ed", "es", "s")


def _lexicon_forms(token: str) -> set[str]:
    base = token.casefold().split("'")[0].split("’")[0]
    forms = {base}
    for suffix in _SUFFIX_STRIP:
        if base.endswith(suffix) and len(base) > len(suffix) + 2:
            stripped = base[: -len(suffix)]
            forms.add(stripped)
            if len(stripped) >= 3 and stripped[-1] == stripped[-2]:
                forms.add(stripped[:-1])  # banning -> bann -> ban
    return forms


def _is_entity_token(token: str) -> bool:
    if token.isupper() and len(token) >= 2:
        return True
    if not token[0].isupper():
        return False
    if _lexicon_forms(token) & _COMMON_WORDS:
        return False
    return True


def extract_named_entities(title: str, content: str = "") -> list[str]:
    """Heuristic named-entity spans: maximal runs of capitalized tokens.

    Runs break at punctuation and at tokens whose lowercase form (modulo
    simple inflection suffixes) is a bundled common English word, which
    keeps function words and headline verbs out of entity spans even in
    title-cased text.  Acronyms of two or more capitals always qualify.
    An external extractor can replace this via the features schema.
    """
    spans: list[str] = []
    seen: set[str] = set()
    for chunk_source in (title, content):
        for chunk in _BOUNDARY_RE.split(chunk_source or ""):
            run: list[str] = []
            for token in _TOKEN_RE.findall(chunk):
                if _is_entity_token(token):
                    run.append(token)
                else:
                    if run:
                        spans.append(" ".join(run))
                    run = []
            if run:
                spans.append(" ".join(run))
    unique = []
    for span in spans:
        key = span.casefold()
        if key not in seen:
            seen.add(key)
            unique.append(span)
    return unique


@dataclass(frozen=True)
class NePopularity:
    entities: tuple[tuple[str, float], ...]
    aggregate: float


def load_popularity_table(path) -> dict[str, float]:
    table: dict[str, float] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        entity, _, score = line.partition("\t")
        table[entity.strip().casefold()] = float(score)
    return table


def ne_popularity(entities, popularity_table: dict[str, float]) -> NePopularity:
    """Match entities case-insensitively; aggregate is the max matched score."""
    matched = []
    for entity in entities:
        score = popularity_table.get(entity.casefold())
        if score is not None:
            matched.append((entity, score))
    aggregate = max((s for _, s in matched), default=0.0)
    return NePopularity(entities=tuple(matched), aggregate=aggregate)
