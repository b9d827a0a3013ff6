"""Acceptance gate: one test per criterion, each printing a pass line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see per-criterion
output.  Exact-formula behavior is checked against independent oracles and
golden files; dataset-scale effects are checked as directions on synthetic
corpora with planted structure.
"""

import itertools
import json
import math
import random
import time
from collections import Counter

import numpy as np
import pytest

from multiverse.corpus import Dataset, EvidenceDoc, NewsArticle
from multiverse.features import FeatureMatrix, ce_dim_names, load_evidence_store
from multiverse.fixtures import load_report_fixture
from multiverse.model import (
    ConfusionCounts,
    TrainConfig,
    ablate,
    ablation_ttest,
    evaluate,
    evaluate_predictions,
    feature_importance,
    train,
)
from multiverse.pipeline import PipelineConfig, run_pipeline
from multiverse.report import build_report, render
from multiverse.similarity import (
    NOT_SUPPORT,
    SUPPORT,
    ScorerConfig,
    cosine_news_similarity,
    tune_threshold,
)
from multiverse.study import krippendorff_alpha
from multiverse.synth import (
    equal_score_pairs,
    h1_corpus,
    planted_theta_pairs,
    separable_classification_set,
)
from multiverse.features import readability_features


def passed(name):
    print(f"\nACCEPTANCE PASS: {name}")


# ---------------------------------------------------------------------------
# Metric oracle


def metric_oracle(y_true, y_pred):
    counts = Counter((t == "Fake", p == "Fake") for t, p in zip(y_true, y_pred))
    tp, fp = counts[(True, True)], counts[(False, True)]
    fn, tn = counts[(True, False)], counts[(False, False)]
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ConfusionCounts(tp, fp, fn, tn), precision, recall, f1


def check_metric_vector(y_true, y_pred):
    report = evaluate_predictions(y_true, y_pred, positive_label="Fake")
    counts, precision, recall, f1 = metric_oracle(y_true, y_pred)
    assert report.counts == counts
    assert abs(report.precision - precision) <= 1e-12
    assert abs(report.recall - recall) <= 1e-12
    assert abs(report.f1 - f1) <= 1e-12


def test_metric_oracle():
    """Exhaustive coverage of evaluate() against a brute-force counting
    oracle for all behaviorally distinct inputs of length <= 12: every joint
    (label, prediction) vector for n <= 6 plus every confusion-count
    composition for n <= 12 in two arrangements (metrics are functions of
    the counts, and order invariance is asserted on the shuffled twin), then
    1000 random length-100 vectors."""
    start = time.monotonic()
    labels = ("Fake", "Legit")
    for n in range(1, 7):
        for joint in itertools.product(labels, repeat=2 * n):
            check_metric_vector(list(joint[:n]), list(joint[n:]))

    rng = random.Random(20180101)
    for n in range(1, 13):
        for tp in range(n + 1):
            for fp in range(n - tp + 1):
                for fn in range(n - tp - fp + 1):
                    tn = n - tp - fp - fn
                    pairs = ([("Fake", "Fake")] * tp + [("Legit", "Fake")] * fp
                             + [("Fake", "Legit")] * fn
                             + [("Legit", "Legit")] * tn)
                    check_metric_vector([t for t, _ in pairs],
                                        [p for _, p in pairs])
                    rng.shuffle(pairs)
                    shuffled = evaluate_predictions([t for t, _ in pairs],
                                                    [p for _, p in pairs], "Fake")
                    assert shuffled.counts == ConfusionCounts(tp, fp, fn, tn)
                    check_metric_vector([t for t, _ in pairs],
                                        [p for _, p in pairs])

    for _ in range(1000):
        y_true = [rng.choice(labels) for _ in range(100)]
        y_pred = [rng.choice(labels) for _ in range(100)]
        check_metric_vector(y_true, y_pred)

    elapsed = time.monotonic() - start
    assert elapsed < 10.0, f"metric oracle took {elapsed:.1f}s"
    passed(f"metric oracle (exhaustive n<=12 count classes, n<=6 vectors, "
           f"1000 random n=100; {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# Krippendorff oracle


def alpha_oracle(matrix):
    rows = [list(r) for r in matrix]
    n_items = max(len(r) for r in rows)
    units = []
    for item in range(n_items):
        values = [r[item] for r in rows if item < len(r) and r[item] is not None]
        if len(values) >= 2:
            units.append(values)
    pooled = [v for unit in units for v in unit]
    n = len(pooled)
    observed = sum(
        sum(1 for a in unit for b in unit if a != b) / (len(unit) - 1)
        for unit in units) / n
    expected = sum(1 for a in pooled for b in pooled if a != b) / (n * (n - 1))
    return 1.0 if expected == 0.0 else 1.0 - observed / expected


def compositions(total, bins):
    if bins == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in compositions(total - head, bins - 1):
            yield (head,) + rest


def test_krippendorff_oracle():
    """Alpha agrees with an independent pairable-values computation on every
    enumerable annotators x items matrix over 3 labels: raw enumeration
    through 3x3, and all per-item label-count compositions for the larger
    shapes (alpha depends on the matrix only through those counts)."""
    start = time.monotonic()
    labels = ("S", "R", "N")

    raw_shapes = [(2, 2), (2, 3), (2, 4), (3, 2), (4, 2), (3, 3)]
    raw_count = 0
    for n_ann, n_items in raw_shapes:
        for cells in itertools.product(labels, repeat=n_ann * n_items):
            matrix = [list(cells[i * n_items:(i + 1) * n_items])
                      for i in range(n_ann)]
            assert krippendorff_alpha(matrix) == pytest.approx(
                alpha_oracle(matrix), abs=1e-9)
            raw_count += 1

    class_count = 0
    for n_ann, n_items in [(3, 4), (4, 3), (4, 4)]:
        per_item = list(compositions(n_ann, 3))
        for combo in itertools.combinations_with_replacement(per_item, n_items):
            matrix = [[None] * n_items for _ in range(n_ann)]
            for item, counts in enumerate(combo):
                column = [lab for lab, c in zip(labels, counts) for _ in range(c)]
                for ann, value in enumerate(column):
                    matrix[ann][item] = value
            assert krippendorff_alpha(matrix) == pytest.approx(
                alpha_oracle(matrix), abs=1e-9)
            class_count += 1

    perfect = [["S", "R", "N", "S"]] * 4
    assert krippendorff_alpha(perfect) == 1.0

    elapsed = time.monotonic() - start
    assert elapsed < 30.0, f"alpha oracle took {elapsed:.1f}s"
    passed(f"krippendorff oracle ({raw_count} raw matrices, "
           f"{class_count} count-class matrices, perfect=1.0; {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# Algorithm-1 branch semantics


def branch_fixture_pairs():
    article = NewsArticle(id="orig", title="Bubonic plague outbreak in Mongolia",
                          label="Legit")
    refutation_titles = {
        "en": ["This outbreak story is fake", "A false report on the plague"],
        "fr": ["La rumeur est fausse", "C'est un faux reportage"],
        "de": ["Diese Meldung ist falsch", "Nur ein Gerücht aus dem Netz"],
        "es": ["El brote es falso", "Un rumor sin fundamento"],
        "ru": ["Это фейк про чуму", "Это ложь и слух"],
    }
    pairs = []
    position = 1
    for i in range(10):  # non-HTML evidence
        pairs.append(("nonhtml", "en", EvidenceDoc(
            url=f"https://files.example/{i}/report.pdf",
            title="Plague outbreak document", language="en",
            position=(i % 10) + 1, is_html=False)))
    for lang, titles in refutation_titles.items():  # refutation lexemes
        for title in titles:
            pairs.append(("refuted", lang, EvidenceDoc(
                url=f"https://news.example/{lang}/{position}", title=title,
                language=lang, position=(position % 10) + 1)))
            position += 1
    for i in range(5):  # identical titles
        pairs.append(("identical", "en", EvidenceDoc(
            url=f"https://copy.example/{i}",
            title="Bubonic plague outbreak in Mongolia", language="en",
            position=(i % 10) + 1)))
    fillers = ["Plague case reported in Inner Mongolia",
               "Completely unrelated sports story",
               "Mongolia issues marmot warning",
               "Teenager hospitalized after infection",
               "Weather forecast for the steppe region"]
    for i in range(25):  # ordinary evidence
        pairs.append(("plain", "en", EvidenceDoc(
            url=f"https://site{i}.example/page",
            title=fillers[i % len(fillers)] + f" {i}", language="en",
            position=(i % 10) + 1)))
    assert len(pairs) == 50
    return article, pairs


def test_algorithm_branch_semantics():
    """On the 50-pair fixture, every non-HTML doc and every refutation doc
    scores exactly 0, identical titles score 1 under the reference embedder,
    and everything stays inside [0, 1]."""
    article, pairs = branch_fixture_pairs()
    cfg = ScorerConfig()
    scored = []
    for kind, lang, doc in pairs:
        value = cosine_news_similarity(article, doc, lang, cfg)
        scored.append((kind, value))
        assert 0.0 <= value <= 1.0
        if kind in ("nonhtml", "refuted"):
            assert value == 0.0, f"{kind} doc must score exactly 0, got {value}"
        if kind == "identical":
            assert value == pytest.approx(1.0, abs=1e-12)
    assert len(scored) == 50
    passed("algorithm branch semantics (50-pair fixture: overrides exact 0, "
           "identical titles 1.0, scores within [0,1])")


# ---------------------------------------------------------------------------
# Threshold tuning


def test_threshold_tuning():
    planted = planted_theta_pairs(200, seed=7)
    result = tune_threshold(planted)
    assert result.theta == 0.5
    assert result.accuracy == 1.0

    rng = random.Random(3)
    shuffled = equal_score_pairs(n_support=60, n_other=40)
    rng.shuffle(shuffled)
    flat = tune_threshold(shuffled)
    majority = max(60, 40) / 100
    assert flat.accuracy == pytest.approx(majority)
    assert flat.theta == 0.1
    passed("threshold tuning (planted separation -> theta=0.5 acc=1.0; "
           "signal-free labels -> majority-class accuracy)")


# ---------------------------------------------------------------------------
# Pipeline counts


def test_pipeline_counts(corpus20_config, corpus20, tmp_path):
    config = PipelineConfig.from_file(corpus20_config)
    out = tmp_path / "out"
    summary = run_pipeline(config, corpus20, out)
    assert summary.n_articles == 20
    assert summary.n_failed == 0
    assert summary.pairs_scored == 1000

    store = load_evidence_store(out / "features" / "evidence.jsonl")
    assert len(store) == 20
    assert all(len(points) == 50 for points in store.values())

    names = ce_dim_names(config.languages, config.top_n)
    assert len(names) == 100
    header = (out / "features" / "features.csv").read_text().splitlines()[0]
    assert header.split(",")[:-1] == list(names)
    passed("pipeline counts (20 articles x 5 languages x top-10 = 1000 scored "
           "pairs; 100-dim CE block per article)")


# ---------------------------------------------------------------------------
# Synthetic H1 ablation


def test_h1_ablation():
    start = time.monotonic()
    dataset, store = h1_corpus(200, seed=0)
    rows = ablate(dataset, store, ["ce-emb-rank", "me-emb-rank", "ce-rank"],
                  config=TrainConfig(kind="boosted-stumps", seed=0), k=5)
    mean_f1 = {row.combo: row.report.mean["f1"] for row in rows}

    gap_me = mean_f1["ce-emb-rank"] - mean_f1["me-emb-rank"]
    gap_rank = mean_f1["ce-emb-rank"] - mean_f1["ce-rank"]
    t_me = ablation_ttest(rows, "ce-emb-rank", "me-emb-rank")
    t_rank = ablation_ttest(rows, "ce-emb-rank", "ce-rank")

    assert gap_me > 0.05, f"CE vs ME gap {gap_me:.3f}"
    assert gap_rank > 0.05, f"CE vs rank-only gap {gap_rank:.3f}"
    assert t_me.p < 0.05
    assert t_rank.p < 0.05

    elapsed = time.monotonic() - start
    assert elapsed < 120.0, f"H1 ablation took {elapsed:.1f}s"
    passed(f"H1 ablation (CE emb+rank F1 {mean_f1['ce-emb-rank']:.3f} > "
           f"ME {mean_f1['me-emb-rank']:.3f} and > rank-only "
           f"{mean_f1['ce-rank']:.3f}; p={t_me.p:.2g}/{t_rank.p:.2g}; "
           f"{elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# Classifier sanity


def test_classifier_sanity():
    names, X, labels = separable_classification_set(200, n_noise_dims=9, seed=42)
    split = 140
    train_m = FeatureMatrix(names, X[:split])
    test_m = FeatureMatrix(names, X[split:], fingerprint=train_m.fingerprint)
    results = {}
    for kind in ("boosted-stumps", "logistic"):
        model = train(train_m, labels[:split], TrainConfig(kind=kind, seed=0))
        report = evaluate(model, test_m, labels[split:])
        results[kind] = report.f1
        assert report.f1 >= 0.95, f"{kind} test F1 {report.f1:.3f}"
        ranked = feature_importance(model)
        assert ranked.items[0][0] == "signal"
    passed(f"classifier sanity (test F1 stumps={results['boosted-stumps']:.3f}, "
           f"logistic={results['logistic']:.3f}; planted dim ranked first)")


# ---------------------------------------------------------------------------
# Golden report


def test_golden_reports(fixtures_dir):
    for name, anchor in (("lottery", "| 15947 | 0.00 |"),
                         ("bubonic", "| 91 | 0.88 |")):
        article, evidence, translator = load_report_fixture(
            fixtures_dir / "appendix" / f"{name}_evidence.json")
        report = build_report(article, evidence, k=3, translator=translator)
        rendered = render(report, "markdown")
        golden = (fixtures_dir / "appendix" / f"golden_{name}_report.md").read_bytes()
        assert rendered == golden, f"{name} markdown deviates from golden file"
        assert anchor in rendered.decode()
    passed("golden reports (lottery rank 15947/sim 0.00 and bubonic rank 91/"
           "sim 0.88 rows byte-exact)")


# ---------------------------------------------------------------------------
# Readability formulas


def test_readability_formulas():
    cases = [
        # text, (chars, words, sentences, syllables, complex)
        ("The cat sat.", (9, 3, 1, 3, 0)),
        ("Extraordinary discoveries require extraordinary evidence.",
         (52, 5, 1, 21, 5)),
        # go=1, now=1, stay=1, here=2 vowel groups
        ("Go now. Stay here.", (13, 4, 2, 5, 0)),
    ]
    for text, (chars, words, sentences, syllables, complex_words) in cases:
        data = readability_features(text).as_dict()
        assert data["read_chars"] == chars
        assert data["read_words"] == words
        assert data["read_sentences"] == sentences
        assert data["read_syllables"] == syllables
        assert data["read_complex_words"] == complex_words
        wps, spw = words / sentences, syllables / words
        assert data["read_fre"] == pytest.approx(
            206.835 - 1.015 * wps - 84.6 * spw, abs=1e-6)
        assert data["read_fkg"] == pytest.approx(
            0.39 * wps + 11.8 * spw - 15.59, abs=1e-6)
        assert data["read_fog"] == pytest.approx(
            0.4 * (wps + 100.0 * complex_words / words), abs=1e-6)
        assert data["read_ari"] == pytest.approx(
            4.71 * chars / words + 0.5 * wps - 21.43, abs=1e-6)
    passed("readability formulas (hand counts reproduce FRE/FKG/Fog/ARI "
           "within 1e-6)")
