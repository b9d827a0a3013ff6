#!/usr/bin/env python3
"""Regenerate the fixture search index for the 20-article demo corpus.

For every (article, language) the index stores exactly ten results in the
provider wire schema.  The mix is deterministic per (article id, language):
an exact echo of the query at position 1, a refutation hit for fake
articles, one non-HTML (PDF) link, and paraphrased or unrelated filler for
the remaining slots.  Domains cycle through the demo rank table plus a few
unknown hosts so rank lookups exercise both paths.
"""

from __future__ import annotations

import hashlib
import json
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from multiverse.corpus import ingest_dataset  # noqa: E402
from multiverse.retrieval import FixtureTranslator  # noqa: E402

FIXTURES = ROOT / "fixtures" / "corpus20"

REFUTATION_WORD = {
    "en": "fake", "fr": "faux", "de": "falsch", "es": "falso", "ru": "фейк",
}
KNOWN_DOMAINS = [
    "cnn.com", "bbc.com", "theguardian.com", "aljazeera.com", "lemonde.fr",
    "spiegel.de", "elpais.com", "reuters.com", "dw.com", "politifact.com",
    "snopes.com", "focus.de", "rbc.ru", "20minutes.fr", "pikabu.ru",
]
UNKNOWN_DOMAINS = ["example-news.co", "daily-mirror-snapshot.net", "novosti-zerkalo.org"]

FILLER = [
    "What we know so far about {q}",
    "{q} - live updates",
    "Opinion: the story behind {q}",
    "Regional weather service issues new forecast",
    "Stock markets close mixed after quiet session",
    "Museum reopens after a decade of renovation",
    "{q}: officials comment",
    "Five takeaways from this week's headlines",
]


def results_for(article, lang: str, query: str) -> list[dict]:
    rng = random.Random(
        int.from_bytes(hashlib.sha256(f"{article.id}:{lang}".encode()).digest()[:8], "big"))
    domains = KNOWN_DOMAINS[:] + UNKNOWN_DOMAINS[:]
    rng.shuffle(domains)
    rows = []
    for pos in range(1, 11):
        domain = domains[(pos - 1) % len(domains)]
        slug = f"{article.id}-{lang}-{pos}"
        url = f"https://{domain}/{slug}"
        if pos == 1:
            title = query  # exact copy of the translated headline
        elif pos == 2 and article.label == "Fake":
            word = REFUTATION_WORD[lang]
            title = f"Fact check: '{query}' is {word}"
        elif pos == 3:
            url = f"https://{domain}/{slug}/document.pdf"
            title = f"{query} (PDF)"
        else:
            title = FILLER[(pos + rng.randrange(3)) % len(FILLER)].format(q=query)
        rows.append({
            "url": url,
            "title": title,
            "content": f"Snapshot body text for {slug}." if pos % 2 else "",
            "position": pos,
        })
    return rows


def main() -> int:
    dataset = ingest_dataset(FIXTURES / "articles.jsonl")
    translator = FixtureTranslator.from_file(FIXTURES / "translations.json")
    out_dir = FIXTURES / "search"
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for article in dataset:
        for lang in ("en", "fr", "de", "es", "ru"):
            query = translator.translate(article.title, lang)
            payload = {
                "query": query,
                "language": lang,
                "results": results_for(article, lang, query),
            }
            path = out_dir / f"{article.id}_{lang}.json"
            path.write_text(json.dumps(payload, ensure_ascii=False, indent=1),
                            encoding="utf-8")
            count += 1
    print(f"wrote {count} fixture responses to {out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
