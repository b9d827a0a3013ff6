"""Evidence reports: per-language top-k rows of scraped titles with their
English translations, source ranks, and similarity scores, plus an optional
classifier verdict.

Rendering is pure: every value in a report is copied from the pipeline's
stored evidence points, never recomputed, so a report is a faithful
explanation of exactly what the classifier saw.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .corpus import EvidenceDoc, NewsArticle
from .errors import NoEvidence
from .features import EvidencePoint

LANGUAGE_NAMES = {
    "en": "English", "fr": "French", "de": "German",
    "es": "Spanish", "ru": "Russian",
}


@dataclass(frozen=True)
class ReportRow:
    position: int
    title: str
    translation: str | None
    rank: int
    similarity: float


@dataclass(frozen=True)
class EvidenceReport:
    article: NewsArticle
    sections: dict[str, tuple[ReportRow, ...]]  # language -> rows by position
    k: int
    verdict: str | None = None
    verdict_score: float | None = None


def build_report(article: NewsArticle,
                 evidence: dict[str, list[tuple[EvidenceDoc, EvidencePoint]]],
                 k: int = 3, model=None, feature_row=None,
                 translator=None) -> EvidenceReport:
    """Assemble the top-k rows per language from paired docs and points.

    Translations come from the translator binding's English direction when
    one is supplied; English evidence and missing translations render as-is
    (missing ones get an untranslated marker downstream).  A verdict is
    attached iff a model is supplied.
    """
    sections: dict[str, tuple[ReportRow, ...]] = {}
    for lang, pairs in evidence.items():
        rows = []
        for doc, point in sorted(pairs, key=lambda dp: dp[1].position):
            if len(rows) >= k:
                break
            translation = None
            if lang != "en" and translator is not None:
                try:
                    candidate = translator.translate(doc.title, "en")
                except Exception:
                    candidate = None
                if candidate and candidate != doc.title:
                    translation = candidate
            rows.append(ReportRow(
                position=point.position,
                title=doc.title,
                translation=translation,
                rank=point.rank.raw,
                similarity=point.sim,
            ))
        if rows:
            sections[lang] = tuple(rows)
    if not sections:
        raise NoEvidence(f"no evidence for article {article.id!r}")

    verdict = verdict_score = None
    if model is not None and feature_row is not None:
        margin = float(model.decision_function(feature_row)[0])
        verdict = (model.positive_label if margin >= 0.0
                   else model.negative_label)
        verdict_score = margin
    return EvidenceReport(article=article, sections=sections, k=k,
                          verdict=verdict, verdict_score=verdict_score)


def _language_title(lang: str) -> str:
    return LANGUAGE_NAMES.get(lang, lang)


def _cell(text: str) -> str:
    return text.replace("|", "\\|")


def render(report: EvidenceReport, format: str = "markdown") -> bytes:
    """Serialize a report; markdown follows the four-column layout
    Title | English translation | Source rank (lower is better) |
    Similarity (higher is better)."""
    if format == "json":
        payload: dict = {
            "article": {
                "id": report.article.id,
                "title": report.article.title,
                "url": report.article.url,
                "label": report.article.label,
            },
            "k": report.k,
            "sections": {
                lang: [
                    {
                        "position": row.position,
                        "title": row.title,
                        "translation": row.translation,
                        "rank": row.rank,
                        "similarity": row.similarity,
                    }
                    for row in rows
                ]
                for lang, rows in report.sections.items()
            },
        }
        if report.verdict is not None:
            payload["verdict"] = report.verdict
            payload["verdict_score"] = report.verdict_score
        return (json.dumps(payload, ensure_ascii=False, indent=1) + "\n").encode("utf-8")
    if format not in ("markdown", "md"):
        raise ValueError(f"unknown report format {format!r}")

    lines = [f"# Evidence report: {report.article.title}", ""]
    label = report.article.label.upper()
    lines.append(f"Original news ({label})")
    if report.article.url:
        lines.append(f"Source: <{report.article.url}>")
    lines.append("")
    header = "| Title | English translation | Source rank ↓ | Similarity ↑ |"
    divider = "| --- | --- | --- | --- |"
    for lang in report.sections:
        lines.append(f"## {_language_title(lang)} search results")
        lines.append("")
        lines.append(header)
        lines.append(divider)
        for row in report.sections[lang]:
            if lang == "en":
                translation = "--"
            elif row.translation is None:
                translation = f"{row.title} (untranslated)"
            else:
                translation = row.translation
            lines.append(f"| {_cell(row.title)} | {_cell(translation)} | {row.rank} "
                         f"| {row.similarity:.2f} |")
        lines.append("")
    if report.verdict is not None:
        lines.append(f"Classifier verdict: **{report.verdict}** "
                     f"(margin {report.verdict_score:+.3f})")
        lines.append("")
    return "\n".join(lines).encode("utf-8")
