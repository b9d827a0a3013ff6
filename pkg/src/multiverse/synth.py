"""Synthetic corpora with planted signal for harness and ablation tests.

The generated evidence follows the widespread-if-true hypothesis: legit
articles receive dense, highly similar evidence across all languages from
reasonably prominent sources, while fakes keep partial English coverage
(their own virality plus occasional refutations) but mostly irrelevant
low-similarity hits elsewhere.  Source ranks overlap heavily between the
classes on purpose: rank-only and English-only feature sets should stay
mediocre while the full cross-lingual block separates well.
"""

from __future__ import annotations

import numpy as np

from .corpus import Dataset, NewsArticle
from .credibility import DEFAULT_RANK, SourceRank, normalize_rank
from .features import EvidencePoint
from .similarity import NOT_SUPPORT, SUPPORT

H1_LANGS = ("en", "fr", "de", "es", "ru")


def _rank_point(rng, lo: float, hi: float) -> SourceRank:
    raw = int(np.exp(rng.uniform(np.log(lo), np.log(hi))))
    raw = max(1, raw)
    return SourceRank(raw, normalize_rank(raw, DEFAULT_RANK))


def h1_corpus(n_articles: int = 200, langs=H1_LANGS, top_n: int = 10,
              seed: int = 0) -> tuple[Dataset, dict[str, list[EvidencePoint]]]:
    """A labeled corpus plus an evidence store with planted H1 structure."""
    rng = np.random.default_rng(seed)
    articles = []
    store: dict[str, list[EvidencePoint]] = {}
    for i in range(n_articles):
        label = "Legit" if i % 2 == 0 else "Fake"
        article = NewsArticle(
            id=f"h1-{i:04d}",
            title=f"Synthetic world event number {i}",
            content=f"Placeholder body text for synthetic event {i}.",
            url=f"https://example.org/{i}",
            label=label,
            topic="synthetic",
        )
        articles.append(article)
        points: list[EvidencePoint] = []
        for lang in langs:
            for pos in range(1, top_n + 1):
                if rng.uniform() > 0.87:
                    continue  # empty slot, same rate for both classes
                if label == "Legit":
                    sim = 0.0 if rng.uniform() < 0.08 else float(rng.uniform(0.55, 0.95))
                    rank = _rank_point(rng, 1e2, 2e5)
                elif lang == "en":
                    # fakes go viral in English too; the overlap with legit
                    # keeps monolingual evidence weak
                    sim = 0.0 if rng.uniform() < 0.12 else float(rng.uniform(0.5, 0.95))
                    rank = _rank_point(rng, 1e2, 2e5)
                else:
                    if rng.uniform() < 0.08:
                        sim = float(rng.uniform(0.6, 0.85))  # translated copy
                        rank = _rank_point(rng, 1e5, 9e5)
                    else:
                        sim = float(rng.uniform(0.0, 0.3))  # unrelated hit
                        rank = _rank_point(rng, 1e2, 2e5)
                points.append(EvidencePoint(language=lang, position=pos,
                                            sim=sim, rank=rank))
        store[article.id] = points
    return Dataset("h1-synthetic", articles), store


def planted_theta_pairs(n: int = 100, seed: int = 0) -> list[tuple[float, str]]:
    """Gold score/label pairs separated exactly at 0.5.

    Support scores live in [0.5, 0.95] and non-support scores in
    [0.05, 0.5), with anchors adjacent to the boundary on both sides, so
    0.5 is the unique grid threshold reaching accuracy 1.0.
    """
    rng = np.random.default_rng(seed)
    pairs: list[tuple[float, str]] = [
        (0.5, SUPPORT), (0.55, SUPPORT), (0.45, NOT_SUPPORT), (0.49, NOT_SUPPORT),
    ]
    for _ in range(max(0, n - len(pairs))):
        if rng.uniform() < 0.5:
            pairs.append((float(rng.uniform(0.5, 0.95)), SUPPORT))
        else:
            pairs.append((float(rng.uniform(0.05, 0.4999)), NOT_SUPPORT))
    return pairs


def equal_score_pairs(n_support: int = 60, n_other: int = 40,
                      score: float = 0.5) -> list[tuple[float, str]]:
    """Signal-free pairs: every score identical, labels fixed by count."""
    return ([(score, SUPPORT)] * n_support) + ([(score, NOT_SUPPORT)] * n_other)


def separable_classification_set(n: int = 200, n_noise_dims: int = 9,
                                 seed: int = 0):
    """Linearly separable binary set with one informative dimension.

    Returns (names, X, labels); the planted dimension is ``signal`` and the
    remainder is pure noise.
    """
    rng = np.random.default_rng(seed)
    labels = np.array(["Fake" if i % 2 else "Legit" for i in range(n)], dtype=object)
    signal = np.where(labels == "Fake",
                      rng.uniform(0.7, 1.0, size=n),
                      rng.uniform(0.0, 0.3, size=n))
    noise = rng.normal(0.0, 1.0, size=(n, n_noise_dims))
    X = np.column_stack([signal, noise])
    names = tuple(["signal"] + [f"noise_{i}" for i in range(n_noise_dims)])
    return names, X, labels
