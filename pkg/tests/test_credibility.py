import math

import pytest
from hypothesis import given, strategies as st

from multiverse.credibility import (
    NePopularity,
    RankTable,
    extract_named_entities,
    load_popularity_table,
    lookup_rank,
    ne_popularity,
    normalize_rank,
    registered_domain,
)
from multiverse.errors import UnparseableUrl


class TestRankLookup:
    def test_subdomain_resolves_to_registered_domain(self):
        table = RankTable({"cnn.com": 91})
        assert lookup_rank("https://edition.cnn.com/2018/x", table).raw == 91

    def test_unknown_host_gets_sentinel(self):
        table = RankTable({"cnn.com": 91}, default_rank=10_000_000)
        rank = lookup_rank("https://worldnewsdailyreport.com/x", table)
        assert rank.raw == 10_000_000
        assert rank.normalized == 0.0

    def test_politifact_from_fixture_table(self, fixtures_dir):
        table = RankTable.from_tsv(fixtures_dir / "corpus20" / "ranks.tsv")
        assert lookup_rank("https://www.politifact.com/factchecks/x", table).raw == 15947
        assert lookup_rank("https://edition.cnn.com/y", table).raw == 91

    def test_www_stripped(self):
        table = RankTable({"bbc.co.uk": 105})
        assert lookup_rank("http://www.bbc.co.uk/news", table).raw == 105

    def test_unparseable(self):
        with pytest.raises(UnparseableUrl):
            lookup_rank("not a url at all", RankTable({}))

    def test_rank_table_validation(self):
        with pytest.raises(ValueError):
            RankTable({"x.com": 0})
        with pytest.raises(ValueError):
            RankTable({"x.com": 50}, default_rank=10)


class TestRegisteredDomain:
    @pytest.mark.parametrize("host,expected", [
        ("edition.cnn.com", "cnn.com"),
        ("www.bbc.co.uk", "bbc.co.uk"),
        ("news.bbc.co.uk", "bbc.co.uk"),
        ("fr.wikipedia.org", "wikipedia.org"),
        ("example.de", "example.de"),
        ("deep.sub.example.com.au", "example.com.au"),
        ("localhost", "localhost"),
        ("site.unknowntld", "site.unknowntld"),
    ])
    def test_examples(self, host, expected):
        assert registered_domain(host) == expected


class TestNormalizeRank:
    def test_best_rank(self):
        assert normalize_rank(1, 10_000_000) == 1.0

    def test_sentinel_floor(self):
        assert normalize_rank(10_000_000, 10_000_000) == 0.0

    def test_log_midpoint(self):
        # default chosen so 10^(log10(default)/2) is an exact integer
        default = 10 ** 8
        midpoint = 10 ** 4
        assert midpoint == int(10 ** (math.log10(default) / 2))
        assert normalize_rank(midpoint, default) == pytest.approx(0.5, abs=1e-12)

    @given(st.integers(1, 10_000_000 - 1))
    def test_strictly_decreasing(self, raw):
        default = 10_000_000
        assert normalize_rank(raw, default) > normalize_rank(raw + 1, default)

    def test_invalid_rank(self):
        with pytest.raises(ValueError):
            normalize_rank(0, 100)


class TestNamedEntities:
    def test_headline_span_rule(self):
        entities = extract_named_entities(
            "Michael Jordan Resigns From The Board At Nike")
        assert "Michael Jordan" in entities
        assert "Nike" in entities

    def test_acronym(self):
        entities = extract_named_entities("UNESCO adds reggae music")
        assert "UNESCO" in entities

    def test_all_lowercase(self):
        assert extract_named_entities("nothing capitalized in here") == []

    def test_content_contributes(self):
        entities = extract_named_entities(
            "a quiet headline", "Later in the body, Angela Merkel spoke.")
        assert "Angela Merkel" in entities

    def test_deduplicated(self):
        entities = extract_named_entities("Nike and Nike and NIKE")
        assert entities.count("Nike") == 1


class TestNePopularity:
    def test_empty_entities(self):
        assert ne_popularity([], {"nike": 0.8}).aggregate == 0.0

    def test_singleton(self):
        result = ne_popularity(["Nike"], {"nike": 0.9})
        assert result.aggregate == 0.9
        assert result.entities == (("Nike", 0.9),)

    def test_max_over_scores(self):
        table = {"nike": 0.2, "michael jordan": 0.7}
        result = ne_popularity(["Nike", "Michael Jordan"], table)
        assert result.aggregate == 0.7

    def test_case_insensitive_match(self):
        assert ne_popularity(["UNESCO"], {"unesco": 0.74}).aggregate == 0.74

    def test_aggregate_bounded_by_table_max(self, fixtures_dir):
        table = load_popularity_table(fixtures_dir / "corpus20" / "ne_popularity.tsv")
        best = max(table.values())
        result = ne_popularity(list(table.keys()), table)
        assert result.aggregate <= best

    def test_unmatched_entities_dropped(self):
        result = ne_popularity(["Unknown Thing"], {"nike": 0.5})
        assert result == NePopularity(entities=(), aggregate=0.0)
