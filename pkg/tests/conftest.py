import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def corpus20():
    from multiverse.corpus import ingest_dataset

    return ingest_dataset(FIXTURES / "corpus20" / "articles.jsonl", name="corpus20")


@pytest.fixture()
def corpus20_config(tmp_path) -> Path:
    """A pipeline config pointing at the checked-in demo fixtures."""
    config = {
        "languages": ["en", "fr", "de", "es", "ru"],
        "top_n": 10,
        "scorer": "cosine",
        "translator": {"kind": "fixture",
                       "path": str(FIXTURES / "corpus20" / "translations.json")},
        "search": {"kind": "fixture",
                   "path": str(FIXTURES / "corpus20" / "search")},
        "rank_table": str(FIXTURES / "corpus20" / "ranks.tsv"),
        "popularity_table": str(FIXTURES / "corpus20" / "ne_popularity.tsv"),
        "datasets": {"corpus20": str(FIXTURES / "corpus20" / "articles.jsonl")},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return path
