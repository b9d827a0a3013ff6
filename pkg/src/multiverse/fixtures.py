"""Loaders for the evidence-report fixtures checked into ``fixtures/``.

A report fixture bundles one article with per-language evidence rows
(title, English translation, source rank, similarity) so reports can be
rendered and compared against golden files without running retrieval.
"""

from __future__ import annotations

import json
from pathlib import Path

from .corpus import EvidenceDoc, NewsArticle
from .credibility import DEFAULT_RANK, SourceRank, normalize_rank
from .features import EvidencePoint
from .retrieval import FixtureTranslator


def load_report_fixture(path):
    """Returns (article, {lang: [(doc, point), ...]}, translator).

    The translator serves the English direction for report rendering, keyed
    by the evidence titles found in the fixture.
    """
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    rec = payload["article"]
    article = NewsArticle(
        id=rec["id"], title=rec["title"], content=rec.get("content", ""),
        url=rec.get("url", ""), label=rec.get("label", "Unknown"),
        topic=rec.get("topic", ""), language=rec.get("language", "en"),
    )
    evidence: dict[str, list[tuple[EvidenceDoc, EvidencePoint]]] = {}
    translations: dict[tuple[str, str], str] = {}
    for lang, rows in payload["evidence"].items():
        pairs = []
        for row in rows:
            doc = EvidenceDoc(
                url=row["url"], title=row["title"], content=row.get("content", ""),
                language=lang, position=int(row["position"]),
            )
            point = EvidencePoint(
                language=lang, position=int(row["position"]),
                sim=float(row["sim"]),
                rank=SourceRank(int(row["rank"]),
                                normalize_rank(int(row["rank"]), DEFAULT_RANK)),
            )
            pairs.append((doc, point))
            if row.get("translation"):
                translations[(row["title"], "en")] = row["translation"]
        evidence[lang] = pairs
    translator = FixtureTranslator(
        translations, languages=("en", "fr", "de", "es", "ru"),
        source_language="und")
    return article, evidence, translator
