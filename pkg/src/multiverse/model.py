"""Classifiers, evaluation metrics, cross-validation, and the ablation harness.

Two deterministic in-repo learners stand in for an external boosting
runtime: gradient-boosted depth-1 stumps (200 rounds, learning rate 0.1,
Newton leaf values) and L2-regularized logistic regression solved with
L-BFGS to a tight gradient tolerance.  Metrics follow the usual
precision/recall/F1 definitions with zero denominators reported as 0 plus
an explicit flag so cross-validation means are never poisoned by NaNs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, stats

from .corpus import Dataset
from .errors import (
    DegenerateLabels,
    NonFiniteFeature,
    SchemaMismatch,
    TooFewSamples,
    UntrainedModel,
)
from .features import EvidencePoint, FeatureMatrix, FeatureSchema, build_matrix

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    counts: ConfusionCounts
    zero_division: frozenset[str] = frozenset()


def metrics_from_counts(counts: ConfusionCounts) -> EvalReport:
    flags = set()
    if counts.tp + counts.fp > 0:
        precision = counts.tp / (counts.tp + counts.fp)
    else:
        precision = 0.0
        flags.add("precision")
    if counts.tp + counts.fn > 0:
        recall = counts.tp / (counts.tp + counts.fn)
    else:
        recall = 0.0
        flags.add("recall")
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        flags.add("f1")
    return EvalReport(precision, recall, f1, counts, frozenset(flags))


def evaluate_predictions(y_true, y_pred, positive_label="Fake") -> EvalReport:
    """Precision, recall, and F1 of a prediction vector against labels."""
    y_true, y_pred = list(y_true), list(y_pred)
    if len(y_true) != len(y_pred):
        raise ValueError("label and prediction vectors must have equal length")
    tp = fp = fn = tn = 0
    for truth, pred in zip(y_true, y_pred):
        truth_pos = truth == positive_label
        pred_pos = pred == positive_label
        if pred_pos and truth_pos:
            tp += 1
        elif pred_pos:
            fp += 1
        elif truth_pos:
            fn += 1
        else:
            tn += 1
    return metrics_from_counts(ConfusionCounts(tp, fp, fn, tn))


@dataclass
class TrainConfig:
    kind: str = "boosted-stumps"  # or "logistic"
    seed: int = 0
    positive_label: str = "Fake"
    rounds: int = 200
    learning_rate: float = 0.1
    l2: float = 1.0
    tol: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("boosted-stumps", "logistic"):
            raise ValueError(f"unknown learner kind {self.kind!r}")


@dataclass
class ClassifierModel:
    kind: str
    seed: int
    positive_label: str
    negative_label: str
    feature_names: tuple[str, ...]
    fingerprint: str
    params: dict = field(default_factory=dict)
    feature_std: tuple[float, ...] = ()

    def _check_schema(self, features: FeatureMatrix):
        if features.fingerprint != self.fingerprint:
            raise SchemaMismatch(
                f"model was trained on schema {self.fingerprint[:12]}..., "
                f"got {features.fingerprint[:12]}...")

    def decision_function(self, features: FeatureMatrix) -> np.ndarray:
        self._check_schema(features)
        X = features.X
        if self.kind == "logistic":
            w = np.asarray(self.params["weights"])
            return X @ w + self.params["intercept"]
        margins = np.full(X.shape[0], self.params["base"])
        for stump in self.params["stumps"]:
            j, thr = stump["feature"], stump["threshold"]
            margins += np.where(X[:, j] <= thr, stump["left"], stump["right"])
        return margins

    def predict(self, features: FeatureMatrix) -> np.ndarray:
        margins = self.decision_function(features)
        out = np.where(margins >= 0.0, self.positive_label, self.negative_label)
        return out.astype(object)

    def save(self, path) -> None:
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "seed": self.seed,
            "positive_label": self.positive_label,
            "negative_label": self.negative_label,
            "feature_names": list(self.feature_names),
            "fingerprint": self.fingerprint,
            "params": self.params,
            "feature_std": list(self.feature_std),
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ClassifierModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format {payload.get('format_version')}")
        return cls(
            kind=payload["kind"],
            seed=payload["seed"],
            positive_label=payload["positive_label"],
            negative_label=payload["negative_label"],
            feature_names=tuple(payload["feature_names"]),
            fingerprint=payload["fingerprint"],
            params=payload["params"],
            feature_std=tuple(payload["feature_std"]),
        )


def _binary_targets(labels, positive_label):
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise DegenerateLabels(f"need two classes, got {classes}")
    if len(classes) > 2:
        raise DegenerateLabels(f"binary learners only, got {classes}")
    if positive_label in classes:
        positive = positive_label
    else:
        positive = classes[-1]
    negative = [c for c in classes if c != positive][0]
    y = np.asarray([1.0 if lab == positive else 0.0 for lab in labels])
    return y, positive, negative


def _fit_logistic(X: np.ndarray, y01: np.ndarray, l2: float, tol: float) -> dict:
    n, d = X.shape
    sign = 2.0 * y01 - 1.0

    def objective(wb):
        w, b = wb[:d], wb[d]
        z = sign * (X @ w + b)
        loss = np.logaddexp(0.0, -z).sum() + 0.5 * l2 * float(w @ w)
        s = sign / (1.0 + np.exp(z))  # sign * sigmoid(-z)
        grad_w = -(X.T @ s) + l2 * w
        grad_b = -s.sum()
        return loss, np.concatenate([grad_w, [grad_b]])

    result = optimize.minimize(
        objective, np.zeros(d + 1), jac=True, method="L-BFGS-B",
        options={"maxiter": 10000, "gtol": tol, "ftol": 1e-14})
    w, b = result.x[:d], float(result.x[d])
    return {"weights": w.tolist(), "intercept": b}


def _fit_stumps(X: np.ndarray, y01: np.ndarray, rounds: int, lr: float,
                l2: float) -> dict:
    """Gradient boosting with depth-1 regression stumps on logistic loss.

    Split search is exact over the midpoints of consecutive distinct sorted
    values; ties break toward the lower feature index and threshold so
    training is fully deterministic.  Features are scanned in chunks to
    bound memory on wide matrices.
    """
    n, d = X.shape
    pos = float(np.clip(y01.mean(), 1e-12, 1 - 1e-12))
    base = math.log(pos / (1.0 - pos))
    order = np.argsort(X, axis=0, kind="stable")
    chunk = max(1, min(d, 4096))

    margins = np.full(n, base)
    stumps = []
    for _ in range(rounds):
        p = 1.0 / (1.0 + np.exp(-margins))
        g = y01 - p
        h = np.maximum(p * (1.0 - p), 1e-12)
        g_total, h_total = g.sum(), h.sum()
        parent = g_total * g_total / (h_total + l2)

        best_gain, best_j, best_k = 0.0, -1, -1
        for start in range(0, d, chunk):
            cols = slice(start, min(start + chunk, d))
            idx = order[:, cols]
            gs = np.cumsum(g[idx], axis=0)[:-1]
            hs = np.cumsum(h[idx], axis=0)[:-1]
            xs = np.take_along_axis(X[:, cols], idx, axis=0)
            valid = xs[1:] > xs[:-1]
            gain = (gs * gs / (hs + l2)
                    + (g_total - gs) ** 2 / (h_total - hs + l2)
                    - parent)
            gain[~valid] = -np.inf
            if gain.size == 0:
                continue
            flat = int(np.argmax(gain.T))  # feature-major: lower j wins ties
            j_local, k = divmod(flat, gain.shape[0])
            g_best = gain[k, j_local]
            if g_best > best_gain + 1e-15:
                best_gain = float(g_best)
                best_j = start + j_local
                best_k = k
        if best_j < 0:
            break

        col = X[:, best_j]
        col_sorted = col[order[:, best_j]]
        threshold = 0.5 * (col_sorted[best_k] + col_sorted[best_k + 1])
        left_mask = col <= threshold
        gl, hl = g[left_mask].sum(), h[left_mask].sum()
        gr, hr = g_total - gl, h_total - hl
        left = lr * gl / (hl + l2)
        right = lr * gr / (hr + l2)
        margins += np.where(left_mask, left, right)
        stumps.append({
            "feature": int(best_j),
            "threshold": float(threshold),
            "left": float(left),
            "right": float(right),
            "gain": best_gain,
        })
    return {"base": base, "stumps": stumps}


def train(features: FeatureMatrix, labels, config: TrainConfig) -> ClassifierModel:
    X = features.X
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeature("feature matrix contains non-finite values")
    y01, positive, negative = _binary_targets(labels, config.positive_label)
    if config.kind == "logistic":
        params = _fit_logistic(X, y01, config.l2, config.tol)
    else:
        params = _fit_stumps(X, y01, config.rounds, config.learning_rate, config.l2)
    return ClassifierModel(
        kind=config.kind,
        seed=config.seed,
        positive_label=positive,
        negative_label=negative,
        feature_names=features.names,
        fingerprint=features.fingerprint,
        params=params,
        feature_std=tuple(X.std(axis=0).tolist()),
    )


def evaluate(model: ClassifierModel, features: FeatureMatrix, labels) -> EvalReport:
    predictions = model.predict(features)
    return evaluate_predictions(labels, predictions, model.positive_label)


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: int
    note: str = ""


def paired_ttest(scores_a, scores_b) -> TTestResult:
    """Two-sided paired t-test over per-fold scores.

    Conventions for degenerate difference vectors: all-zero differences give
    p = 1.0 (no evidence of difference) and zero-variance nonzero
    differences give t = +/-inf with p = 0.0, both flagged in ``note``.
    """
    a, b = np.asarray(scores_a, dtype=float), np.asarray(scores_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two equal-length score vectors with >= 2 folds")
    diffs = a - b
    k = diffs.size
    mean = float(diffs.mean())
    sd = float(diffs.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(t=math.nan, p=1.0, df=k - 1, note="zero differences")
        t = math.inf if mean > 0 else -math.inf
        return TTestResult(t=t, p=0.0, df=k - 1, note="constant nonzero differences")
    t = mean / (sd / math.sqrt(k))
    p = 2.0 * float(stats.t.sf(abs(t), k - 1))
    return TTestResult(t=t, p=p, df=k - 1)


def stratified_folds(labels, k: int, seed: int) -> np.ndarray:
    """Fold index per sample; folds are disjoint, exhaustive, and seeded."""
    labels = np.asarray(labels, dtype=object)
    counts = {c: int((labels == c).sum()) for c in sorted(set(labels.tolist()))}
    smallest = min(counts.values())
    if k > smallest:
        raise TooFewSamples(
            f"k={k} exceeds the smallest class count {smallest}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=int)
    for cls in sorted(counts):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        for i, sample in enumerate(idx):
            fold_of[sample] = i % k
    return fold_of


@dataclass
class CvReport:
    folds: list[EvalReport]
    fold_f1: tuple[float, ...]
    mean: dict[str, float]
    std: dict[str, float]
    paired: TTestResult | None = None

    @property
    def k(self) -> int:
        return len(self.folds)


def cross_validate(features: FeatureMatrix, labels, config: TrainConfig,
                   k: int = 5, baseline: "CvReport | None" = None) -> CvReport:
    """Seeded stratified k-fold CV; optional paired t-test against a
    baseline run's fold F1 scores."""
    labels = np.asarray(labels, dtype=object)
    fold_of = stratified_folds(labels, k, config.seed)
    reports = []
    for fold in range(k):
        holdout = fold_of == fold
        train_matrix = FeatureMatrix(features.names, features.X[~holdout],
                                     fingerprint=features.fingerprint)
        test_matrix = FeatureMatrix(features.names, features.X[holdout],
                                    fingerprint=features.fingerprint)
        model = train(train_matrix, labels[~holdout], config)
        reports.append(evaluate(model, test_matrix, labels[holdout]))
    fold_f1 = tuple(r.f1 for r in reports)
    mean = {m: float(np.mean([getattr(r, m) for r in reports]))
            for m in ("precision", "recall", "f1")}
    std = {m: float(np.std([getattr(r, m) for r in reports]))
           for m in ("precision", "recall", "f1")}
    paired = None
    if baseline is not None:
        if baseline.k != k:
            raise ValueError("baseline run must use the same fold count")
        paired = paired_ttest(fold_f1, baseline.fold_f1)
    return CvReport(reports, fold_f1, mean, std, paired)


@dataclass(frozen=True)
class FeatureImportance:
    items: tuple[tuple[str, float], ...]

    def top(self, n: int = 30) -> tuple[tuple[str, float], ...]:
        return self.items[:n]


def feature_importance(model: ClassifierModel) -> FeatureImportance:
    """Normalized per-dimension importances, sorted descending.

    Boosted stumps accumulate split gain per feature; logistic regression
    uses |weight| * feature standard deviation.
    """
    if not model.params:
        raise UntrainedModel("model has no trained parameters")
    scores = np.zeros(len(model.feature_names))
    if model.kind == "logistic":
        w = np.abs(np.asarray(model.params["weights"]))
        std = np.asarray(model.feature_std)
        scores = w * std
    else:
        for stump in model.params["stumps"]:
            scores[stump["feature"]] += max(0.0, stump["gain"])
    total = scores.sum()
    if total > 0:
        scores = scores / total
    ranked = sorted(zip(model.feature_names, scores.tolist()),
                    key=lambda kv: (-kv[1], kv[0]))
    return FeatureImportance(tuple(ranked))


COMBO_BLOCKS = {
    "ce-rank": ("ce_rank",),
    "ce-emb-rank": ("ce",),
    "ce-nli-rank": ("ce",),  # same layout; the store must be NLI-scored
    "me-rank": ("me_rank",),
    "me-emb-rank": ("me",),
    "me-nli-rank": ("me",),
    "ngrams": ("ngrams",),
    "punctuation": ("punctuation",),
    "readability": ("readability",),
    "nepop": ("nepop",),
    "all-linguistic": ("ngrams", "punctuation", "readability"),
}


def combo_schema(combo: str, langs, top_n: int, **schema_kwargs) -> FeatureSchema:
    """Resolve an ablation combo name like ``ngrams+ce-emb-rank``."""
    blocks: list[str] = []
    for token in combo.split("+"):
        token = token.strip()
        if token not in COMBO_BLOCKS:
            raise ValueError(f"unknown ablation combo part {token!r}; "
                             f"known: {sorted(COMBO_BLOCKS)}")
        for block in COMBO_BLOCKS[token]:
            if block not in blocks:
                blocks.append(block)
    return FeatureSchema(tuple(blocks), langs=tuple(langs), top_n=top_n,
                         **schema_kwargs)


@dataclass
class AblationRow:
    combo: str
    report: CvReport


def ablate(dataset: Dataset, evidence_store: dict[str, list[EvidencePoint]],
           combos, *, config: TrainConfig, langs=("en", "fr", "de", "es", "ru"),
           top_n: int = 10, k: int = 5, popularity_table=None) -> list[AblationRow]:
    """Cross-validate every feature combo under identical folds.

    Stateful blocks (n-grams) are refitted on each fold's training part so
    no fold ever sees test-side text during fitting.
    """
    articles = list(dataset)
    labels = np.asarray([a.label for a in articles], dtype=object)
    fold_of = stratified_folds(labels, k, config.seed)
    rows = []
    for combo in combos:
        reports = []
        for fold in range(k):
            holdout = fold_of == fold
            train_articles = [a for a, h in zip(articles, holdout) if not h]
            test_articles = [a for a, h in zip(articles, holdout) if h]
            schema = combo_schema(combo, langs, top_n,
                                  popularity_table=popularity_table or {})
            schema.fit(train_articles)
            train_split = Dataset(f"{dataset.name}/cv{fold}-train", train_articles)
            test_split = Dataset(f"{dataset.name}/cv{fold}-test", test_articles)
            train_m, train_y = build_matrix(train_split, schema, evidence_store,
                                            strict=False)
            test_m, test_y = build_matrix(test_split, schema, evidence_store,
                                          strict=False)
            model = train(train_m, train_y, config)
            reports.append(evaluate(model, test_m, test_y))
        fold_f1 = tuple(r.f1 for r in reports)
        mean = {m: float(np.mean([getattr(r, m) for r in reports]))
                for m in ("precision", "recall", "f1")}
        std = {m: float(np.std([getattr(r, m) for r in reports]))
               for m in ("precision", "recall", "f1")}
        rows.append(AblationRow(combo, CvReport(reports, fold_f1, mean, std)))
    return rows


def ablation_ttest(rows: list[AblationRow], combo_a: str, combo_b: str) -> TTestResult:
    by_name = {row.combo: row for row in rows}
    return paired_ttest(by_name[combo_a].report.fold_f1,
                        by_name[combo_b].report.fold_f1)


def render_ablation_markdown(rows: list[AblationRow]) -> str:
    lines = ["| Combo | Precision | Recall | F1 |",
             "| --- | --- | --- | --- |"]
    for row in rows:
        m = row.report.mean
        lines.append(f"| {row.combo} | {m['precision']:.3f} | "
                     f"{m['recall']:.3f} | {m['f1']:.3f} |")
    return "\n".join(lines) + "\n"


def render_ablation_csv(rows: list[AblationRow]) -> str:
    lines = ["combo,precision,recall,f1"]
    for row in rows:
        m = row.report.mean
        lines.append(f"{row.combo},{m['precision']:.6f},{m['recall']:.6f},{m['f1']:.6f}")
    return "\n".join(lines) + "\n"
