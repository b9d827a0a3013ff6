#!/usr/bin/env python3
"""Run the full pipeline over the checked-in 20-article demo corpus.

Writes reports, evidence features, and manifests under ``out/`` and prints
the run summary.  Everything is driven by fixtures, so the run is hermetic
and reproducible.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from multiverse.cli import main as cli_main  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out")
    parser.add_argument("--scorer", choices=("cosine", "nli"), default="cosine")
    args = parser.parse_args()

    fixtures = ROOT / "fixtures" / "corpus20"
    config = {
        "languages": ["en", "fr", "de", "es", "ru"],
        "top_n": 10,
        "scorer": args.scorer,
        "translator": {"kind": "fixture", "path": str(fixtures / "translations.json")},
        "search": {"kind": "fixture", "path": str(fixtures / "search")},
        "rank_table": str(fixtures / "ranks.tsv"),
        "popularity_table": str(fixtures / "ne_popularity.tsv"),
        "datasets": {"corpus20": str(fixtures / "articles.jsonl")},
    }
    config_path = Path(args.out) / "demo-config.json"
    config_path.parent.mkdir(parents=True, exist_ok=True)
    config_path.write_text(json.dumps(config, indent=1), encoding="utf-8")
    return cli_main(["--config", str(config_path), "--out", args.out,
                     "run", "--dataset", "corpus20"])


if __name__ == "__main__":
    raise SystemExit(main())
