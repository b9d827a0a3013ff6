import json
import random

import pytest
from hypothesis import given, strategies as st

from multiverse.corpus import (
    Dataset,
    EvidenceDoc,
    NewsArticle,
    SearchSnapshot,
    SnapshotStore,
    SplitSpec,
    hostname_of,
    ingest_dataset,
    split_dataset,
    write_articles_jsonl,
)
from multiverse.errors import MissingSnapshot, SchemaViolation, TooSmall, UnreadableFile


def make_articles(n_fake, n_legit, prefix="a"):
    articles = []
    for i in range(n_fake + n_legit):
        label = "Fake" if i < n_fake else "Legit"
        articles.append(NewsArticle(id=f"{prefix}{i:04d}", title=f"Story {i}",
                                    label=label))
    return articles


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records),
                    encoding="utf-8")


class TestIngest:
    def test_balanced_480_rows(self, tmp_path):
        records = [a.to_record() for a in make_articles(240, 240)]
        path = tmp_path / "amt.jsonl"
        write_jsonl(path, records)
        dataset = ingest_dataset(path)
        assert dataset.counts == {"Fake": 240, "Legit": 240}
        assert len(dataset) == 480

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        assert len(ingest_dataset(path)) == 0

    def test_missing_title_raises(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        write_jsonl(path, [{"id": "x", "label": "Fake"}])
        with pytest.raises(SchemaViolation) as err:
            ingest_dataset(path)
        assert err.value.field == "title"
        assert err.value.row == 1

    def test_lenient_mode_collects_errors(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        write_jsonl(path, [
            {"id": "x", "label": "Fake"},
            {"id": "y", "title": "fine", "label": "Legit"},
            {"id": "y", "title": "dupe id", "label": "Legit"},
        ])
        dataset = ingest_dataset(path, strict=False)
        assert len(dataset) == 1
        assert {e["field"] for e in dataset.error_report} == {"title", "id"}

    def test_csv_import(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("id,title,label\nc1,Some story,fake\nc2,Other story,true\n",
                        encoding="utf-8")
        dataset = ingest_dataset(path)
        assert dataset.counts == {"Fake": 1, "Legit": 1}

    def test_unreadable(self, tmp_path):
        with pytest.raises(UnreadableFile):
            ingest_dataset(tmp_path / "missing.jsonl")

    def test_round_trip_identity(self, tmp_path):
        records = [a.to_record() for a in make_articles(3, 4)]
        src = tmp_path / "src.jsonl"
        write_jsonl(src, records)
        first = ingest_dataset(src)
        out = tmp_path / "out.jsonl"
        write_articles_jsonl(first, out)
        second = ingest_dataset(out)
        assert first.articles == second.articles

    def test_source_domain_derived(self):
        article = NewsArticle(id="x", title="t",
                              url="https://www.Example.COM/a/b", label="Fake")
        assert article.source_domain == "example.com"

    def test_hostname_of(self):
        assert hostname_of("https://edition.cnn.com/x") == "edition.cnn.com"
        assert hostname_of("http://www.bbc.co.uk:8080/y") == "bbc.co.uk"


def independent_split_oracle(dataset, spec):
    """Reimplementation of the documented split procedure."""
    rng = random.Random(spec.seed)
    out = ([], [], [])
    for label in sorted({a.label for a in dataset.articles}):
        group = [a for a in dataset.articles if a.label == label]
        rng.shuffle(group)
        n = len(group)
        ideals = [n * f for f in (spec.train_frac, spec.test_frac, spec.dev_frac)]
        counts = [int(v) for v in ideals]
        rest = n - sum(counts)
        order = sorted(range(3), key=lambda j: (-(ideals[j] - counts[j]), j))
        for j in order[:rest]:
            counts[j] += 1
        out[0].extend(a.id for a in group[:counts[0]])
        out[1].extend(a.id for a in group[counts[0]:counts[0] + counts[1]])
        out[2].extend(a.id for a in group[counts[0] + counts[1]:])
    return out


class TestSplit:
    def test_recovery_shaped_sizes(self):
        dataset = Dataset("recovery", make_articles(665, 1364))
        train, test, dev = split_dataset(dataset, SplitSpec(seed=11))
        assert abs(len(train) - 1420) <= 1
        assert abs(len(test) - 406) <= 1
        assert abs(len(dev) - 203) <= 1
        assert len(train) + len(test) + len(dev) == 2029

    def test_deterministic(self):
        dataset = Dataset("ten", make_articles(5, 5))
        spec = SplitSpec(seed=7)
        first = split_dataset(dataset, spec)
        second = split_dataset(dataset, spec)
        for a, b in zip(first, second):
            assert [x.id for x in a] == [x.id for x in b]

    def test_stratified_counts_match_oracle(self):
        dataset = Dataset("hundred", make_articles(50, 50))
        spec = SplitSpec(seed=3)
        train, test, dev = split_dataset(dataset, spec)
        assert abs(train.counts["Fake"] - 35) <= 1
        assert abs(train.counts["Legit"] - 35) <= 1
        oracle = independent_split_oracle(dataset, spec)
        assert [a.id for a in train] == oracle[0]
        assert [a.id for a in test] == oracle[1]
        assert [a.id for a in dev] == oracle[2]

    def test_too_small(self):
        with pytest.raises(TooSmall):
            split_dataset(Dataset("tiny", make_articles(4, 5)), SplitSpec())

    @given(n_fake=st.integers(5, 60), n_legit=st.integers(5, 60),
           seed=st.integers(0, 2**32 - 1))
    def test_partition_property(self, n_fake, n_legit, seed):
        dataset = Dataset("prop", make_articles(n_fake, n_legit))
        train, test, dev = split_dataset(dataset, SplitSpec(seed=seed))
        ids = [a.id for part in (train, test, dev) for a in part]
        assert len(ids) == len(dataset)
        assert set(ids) == {a.id for a in dataset}
        for part, frac in ((train, 0.7), (test, 0.2), (dev, 0.1)):
            for label, total in dataset.counts.items():
                assert abs(part.counts.get(label, 0) - total * frac) <= 1

    def test_bad_fractions(self):
        with pytest.raises(ValueError):
            SplitSpec(train_frac=0.5, test_frac=0.2, dev_frac=0.2)


def make_snapshot(article_id="a1", language="en", n=10):
    docs = tuple(
        EvidenceDoc(url=f"https://site{i}.com/x", title=f"result {i}",
                    content="body" if i % 2 else "", language=language,
                    position=i)
        for i in range(1, n + 1)
    )
    return SearchSnapshot(article_id=article_id, language=language,
                          results=docs, captured_at="2020-07-02T00:00:00+00:00",
                          query="some query")


class TestSnapshotStore:
    def test_round_trip_identity(self, tmp_path):
        store = SnapshotStore(tmp_path / "snaps")
        snapshot = make_snapshot()
        store.store(snapshot)
        loaded = store.load("a1", "en")
        assert loaded == snapshot

    def test_missing_key(self, tmp_path):
        store = SnapshotStore(tmp_path / "snaps")
        with pytest.raises(MissingSnapshot):
            store.load("nope", "en")

    def test_order_preserved(self, tmp_path):
        store = SnapshotStore(tmp_path / "snaps")
        snapshot = make_snapshot(n=10)
        store.store(snapshot)
        loaded = store.load("a1", "en")
        assert [d.position for d in loaded.results] == list(range(1, 11))
        assert [d.position for d in loaded.results] == \
            [d.position for d in snapshot.results]

    def test_overwrite_deterministic(self, tmp_path):
        store = SnapshotStore(tmp_path / "snaps")
        store.store(make_snapshot(n=3))
        store.store(make_snapshot(n=5))
        assert len(store.load("a1", "en").results) == 5
        assert store.keys() == [("a1", "en")]

    def test_unordered_results_rejected(self):
        docs = (EvidenceDoc(url="u", title="t", position=2),
                EvidenceDoc(url="u2", title="t2", position=1))
        with pytest.raises(ValueError):
            SearchSnapshot(article_id="a", language="en", results=docs,
                           captured_at="now")
