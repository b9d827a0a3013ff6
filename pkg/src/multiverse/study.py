"""Manual-verification study backend: assignment plans, label records,
majority votes, agreement statistics, and per-language answer distributions.

Annotators label each (original news, scraped evidence) pair with Support,
Refute, or NotEnoughInfo and finish each article with a fake/legit verdict.
Records persist in an append-only JSON-lines log with last-write-wins
semantics per (task, annotator), so resubmissions supersede rather than
mutate.
"""

from __future__ import annotations

import datetime as _dt
import json
import random
import threading
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import EvidenceDoc, NewsArticle
from .errors import (
    InfeasiblePlan,
    InsufficientData,
    MissingGold,
    NoRecords,
)

PAIR_LABELS = ("Support", "Refute", "NotEnoughInfo")
VERDICTS = ("Fake", "Legit")
UNDECIDED = "Undecided"


@dataclass(frozen=True)
class AnnotationTask:
    task_id: str
    article: NewsArticle
    evidence: EvidenceDoc
    translation: str | None = None

    def __post_init__(self):
        if self.evidence.position > 10:
            raise ValueError("evidence position must be <= 10 for annotation")


@dataclass(frozen=True)
class AnnotationRecord:
    task_id: str
    annotator_id: str
    label: str
    timestamp: str = ""

    def __post_init__(self):
        if self.label not in PAIR_LABELS:
            raise ValueError(f"label must be one of {PAIR_LABELS}, got {self.label!r}")


@dataclass(frozen=True)
class VerdictRecord:
    article_id: str
    annotator_id: str
    verdict: str
    timestamp: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")


@dataclass(frozen=True)
class StudyPlan:
    articles_per_annotator: int
    annotators_per_article: int
    assignment: dict[str, tuple[str, ...]]  # annotator -> ordered article ids
    seed: int = 0

    def articles_for(self, annotator_id: str) -> tuple[str, ...]:
        return self.assignment[annotator_id]

    def annotators_for(self, article_id: str) -> tuple[str, ...]:
        return tuple(a for a, arts in sorted(self.assignment.items())
                     if article_id in arts)


def create_study(article_ids, annotator_ids, articles_per_annotator: int = 10,
                 annotators_per_article: int = 3, seed: int = 0) -> StudyPlan:
    """Balanced random assignment of articles to annotators.

    Feasibility requires ``annotators * per_annotator == articles *
    per_article`` with neither quota exceeding the other side's size.
    Construction assigns each article (in seeded shuffled order) to the
    annotators with the most remaining capacity, which always realizes a
    feasible balanced plan.
    """
    article_ids = list(article_ids)
    annotator_ids = list(annotator_ids)
    lhs = len(annotator_ids) * articles_per_annotator
    rhs = len(article_ids) * annotators_per_article
    if lhs != rhs:
        raise InfeasiblePlan(
            f"{len(annotator_ids)} annotators x {articles_per_annotator} != "
            f"{len(article_ids)} articles x {annotators_per_article} "
            f"({lhs} != {rhs})")
    if annotators_per_article > len(annotator_ids):
        raise InfeasiblePlan("more annotators per article than annotators")
    if articles_per_annotator > len(article_ids):
        raise InfeasiblePlan("more articles per annotator than articles")

    rng = random.Random(seed)
    shuffled = article_ids[:]
    rng.shuffle(shuffled)
    capacity = {a: articles_per_annotator for a in annotator_ids}
    hands: dict[str, list[str]] = {a: [] for a in annotator_ids}
    tie_order = annotator_ids[:]
    for article in shuffled:
        rng.shuffle(tie_order)
        chosen = sorted(tie_order, key=lambda a: -capacity[a])[:annotators_per_article]
        for annotator in chosen:
            if capacity[annotator] == 0:
                raise InfeasiblePlan("assignment construction exhausted capacity")
            capacity[annotator] -= 1
            hands[annotator].append(article)
    assignment = {a: tuple(arts) for a, arts in hands.items()}
    return StudyPlan(articles_per_annotator, annotators_per_article, assignment, seed)


def majority_vote(labels, kind: str = "pair") -> str:
    """Strict-majority consensus label.

    Without a strict majority, pair labels fall back to NotEnoughInfo and
    verdicts to the flagged Undecided value.
    """
    labels = list(labels)
    if not labels:
        raise NoRecords("majority vote needs at least one record")
    counts = Counter(labels)
    winner, top = counts.most_common(1)[0]
    if top > len(labels) / 2:
        return winner
    return "NotEnoughInfo" if kind == "pair" else UNDECIDED


def krippendorff_alpha(matrix, level: str = "nominal") -> float:
    """Nominal-level Krippendorff's alpha via the coincidence matrix.

    ``matrix`` is annotators x items; ``None`` marks a missing cell and is
    ignored.  Items with fewer than two ratings contribute nothing.  With
    zero expected disagreement (every pairable value identical) alpha is
    1.0 by convention.
    """
    if level != "nominal":
        raise ValueError("only nominal-level alpha is implemented")
    rows = [list(r) for r in matrix]
    if not rows:
        raise InsufficientData("empty annotation matrix")
    n_items = max(len(r) for r in rows)
    units = []
    for item in range(n_items):
        values = [r[item] for r in rows if item < len(r) and r[item] is not None]
        if len(values) >= 2:
            units.append(values)
    if len(units) < 2:
        raise InsufficientData("need at least 2 items with >= 2 ratings")

    observed_disagreement = 0.0
    marginals: Counter = Counter()
    n_pairable = 0
    for values in units:
        m = len(values)
        counts = Counter(values)
        marginals.update(counts)
        n_pairable += m
        mismatched_pairs = m * m - sum(c * c for c in counts.values())
        observed_disagreement += mismatched_pairs / (m - 1)
    observed_disagreement /= n_pairable

    total = n_pairable
    expected_disagreement = (
        total * total - sum(c * c for c in marginals.values())
    ) / (total * (total - 1))
    if expected_disagreement == 0.0:
        return 1.0
    return 1.0 - observed_disagreement / expected_disagreement


def language_distribution(records, tasks: dict[str, AnnotationTask]):
    """Counts of each answer per evidence language, split by the original
    article's gold label: the shape behind the per-language answer bars."""
    table: dict[str, dict[str, Counter]] = {
        "Fake": defaultdict(Counter), "Legit": defaultdict(Counter),
        "Unknown": defaultdict(Counter),
    }
    for record in records:
        task = tasks.get(record.task_id)
        if task is None:
            continue
        gold = task.article.label
        table[gold][task.evidence.language][record.label] += 1
    return {
        gold: {lang: {label: counts[label] for label in PAIR_LABELS}
               for lang, counts in sorted(langs.items())}
        for gold, langs in table.items() if langs
    }


def annotator_accuracy(verdicts, gold_labels: dict[str, str]) -> float:
    """Fraction of verdicts matching the gold article labels."""
    verdicts = list(verdicts)
    if not verdicts:
        raise NoRecords("no verdicts recorded")
    hits = 0
    for record in verdicts:
        gold = gold_labels.get(record.article_id)
        if gold is None:
            raise MissingGold(f"no gold label for article {record.article_id!r}")
        hits += record.verdict == gold
    return hits / len(verdicts)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


class StudyStore:
    """Append-only JSON-lines record log, one record per line.

    The log is single-writer-serialized by a lock; effective state is
    last-write-wins per (task, annotator) or (article, annotator).
    ``compact()`` rewrites the log to effective records only.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._labels: dict[tuple[str, str], AnnotationRecord] = {}
        self._verdicts: dict[tuple[str, str], VerdictRecord] = {}
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._apply(json.loads(line))

    def _apply(self, row: dict):
        if row.get("type") == "label":
            record = AnnotationRecord(row["task_id"], row["annotator_id"],
                                      row["label"], row.get("ts", ""))
            self._labels[(record.task_id, record.annotator_id)] = record
        elif row.get("type") == "verdict":
            record = VerdictRecord(row["article_id"], row["annotator_id"],
                                   row["verdict"], row.get("ts", ""))
            self._verdicts[(record.article_id, record.annotator_id)] = record

    def _append(self, row: dict):
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
                fh.flush()
            self._apply(row)

    def add_label(self, task_id: str, annotator_id: str, label: str) -> AnnotationRecord:
        record = AnnotationRecord(task_id, annotator_id, label, _now())
        self._append({"type": "label", "task_id": task_id,
                      "annotator_id": annotator_id, "label": label,
                      "ts": record.timestamp})
        return record

    def add_verdict(self, article_id: str, annotator_id: str, verdict: str) -> VerdictRecord:
        record = VerdictRecord(article_id, annotator_id, verdict, _now())
        self._append({"type": "verdict", "article_id": article_id,
                      "annotator_id": annotator_id, "verdict": verdict,
                      "ts": record.timestamp})
        return record

    def labels(self) -> dict[tuple[str, str], AnnotationRecord]:
        with self._lock:
            return dict(self._labels)

    def verdicts(self) -> dict[tuple[str, str], VerdictRecord]:
        with self._lock:
            return dict(self._verdicts)

    def compact(self) -> None:
        with self._lock:
            rows = []
            for record in self._labels.values():
                rows.append({"type": "label", "task_id": record.task_id,
                             "annotator_id": record.annotator_id,
                             "label": record.label, "ts": record.timestamp})
            for record in self._verdicts.values():
                rows.append({"type": "verdict", "article_id": record.article_id,
                             "annotator_id": record.annotator_id,
                             "verdict": record.verdict, "ts": record.timestamp})
            tmp = self.path.with_suffix(".jsonl.tmp")
            tmp.write_text(
                "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows),
                encoding="utf-8")
            tmp.replace(self.path)


@dataclass
class Study:
    """A full study: plan, tasks grouped per article, and the record log."""

    study_id: str
    plan: StudyPlan
    articles: dict[str, NewsArticle]
    tasks: dict[str, AnnotationTask]
    store: StudyStore
    article_task_order: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.article_task_order:
            per_article: dict[str, list[tuple[str, int, str]]] = defaultdict(list)
            for task in self.tasks.values():
                per_article[task.article.id].append(
                    (task.evidence.language, task.evidence.position, task.task_id))
            self.article_task_order = {
                art: tuple(tid for _, _, tid in sorted(entries))
                for art, entries in per_article.items()
            }

    def next_step(self, annotator_id: str) -> dict:
        """The annotator's next pair to label, pending verdict, or done.

        Articles are served in plan order; all of an article's pairs must be
        labeled before its verdict, and the verdict must land before the
        next article is served.
        """
        if annotator_id not in self.plan.assignment:
            raise KeyError(f"unknown annotator {annotator_id!r}")
        labels = self.store.labels()
        verdicts = self.store.verdicts()
        for article_id in self.plan.articles_for(annotator_id):
            for task_id in self.article_task_order.get(article_id, ()):
                if (task_id, annotator_id) not in labels:
                    task = self.tasks[task_id]
                    return {"kind": "pair", "task": task_view(task)}
            if (article_id, annotator_id) not in verdicts:
                return {"kind": "verdict",
                        "article": article_view(self.articles[article_id])}
        return {"kind": "done"}

    def progress(self) -> dict:
        labels = self.store.labels()
        verdicts = self.store.verdicts()
        per_annotator = {}
        total_expected = 0
        total_done = 0
        for annotator in sorted(self.plan.assignment):
            expected = sum(len(self.article_task_order.get(a, ()))
                           for a in self.plan.articles_for(annotator))
            expected_verdicts = len(self.plan.articles_for(annotator))
            done = sum(1 for (t, ann) in labels if ann == annotator)
            done_verdicts = sum(1 for (a, ann) in verdicts if ann == annotator)
            per_annotator[annotator] = {
                "labels_done": done, "labels_total": expected,
                "verdicts_done": done_verdicts, "verdicts_total": expected_verdicts,
            }
            total_expected += expected + expected_verdicts
            total_done += done + done_verdicts
        return {"completed": total_done, "total": total_expected,
                "per_annotator": per_annotator}

    def stats(self) -> dict:
        labels = self.store.labels()
        verdict_records = list(self.store.verdicts().values())

        task_ids = sorted(self.tasks)
        annotators = sorted(self.plan.assignment)
        matrix = [[labels.get((tid, ann)).label if (tid, ann) in labels else None
                   for tid in task_ids] for ann in annotators]
        try:
            alpha = krippendorff_alpha(matrix)
        except InsufficientData:
            alpha = None

        votes = {}
        for article_id, task_order in sorted(self.article_task_order.items()):
            pair_votes = {}
            for task_id in task_order:
                recorded = [labels[(task_id, ann)].label for ann in annotators
                            if (task_id, ann) in labels]
                if recorded:
                    pair_votes[task_id] = majority_vote(recorded, kind="pair")
            verdict_labels = [r.verdict for r in verdict_records
                              if r.article_id == article_id]
            votes[article_id] = {
                "pairs": pair_votes,
                "verdict": majority_vote(verdict_labels, kind="verdict")
                if verdict_labels else None,
            }

        gold = {a.id: a.label for a in self.articles.values()}
        try:
            accuracy = annotator_accuracy(verdict_records, gold)
        except (NoRecords, MissingGold):
            accuracy = None

        distributions = language_distribution(labels.values(), self.tasks)
        return {
            "alpha": alpha,
            "accuracy": accuracy,
            "distributions": distributions,
            "majority": votes,
            "n_label_records": len(labels),
            "n_verdict_records": len(verdict_records),
        }


def task_view(task: AnnotationTask) -> dict:
    return {
        "task_id": task.task_id,
        "article": article_view(task.article),
        "evidence": {
            "url": task.evidence.url,
            "title": task.evidence.title,
            "content": task.evidence.content,
            "language": task.evidence.language,
            "position": task.evidence.position,
            "source_domain": task.evidence.source_domain,
        },
        "translation": task.translation,
    }


def article_view(article: NewsArticle) -> dict:
    return {
        "id": article.id,
        "title": article.title,
        "content": article.content,
        "url": article.url,
        "source_domain": article.source_domain,
    }


def build_tasks(articles, evidence: dict[str, dict[str, list[EvidenceDoc]]],
                translations: dict[str, str] | None = None,
                max_position: int = 10) -> dict[str, AnnotationTask]:
    """One task per (article, evidence doc), capped at the top 10 positions."""
    translations = translations or {}
    tasks: dict[str, AnnotationTask] = {}
    for article in articles:
        for lang, docs in sorted(evidence.get(article.id, {}).items()):
            for doc in docs:
                if doc.position > max_position:
                    continue
                task_id = f"{article.id}:{lang}:{doc.position}"
                tasks[task_id] = AnnotationTask(
                    task_id=task_id,
                    article=article,
                    evidence=doc,
                    translation=translations.get(doc.title),
                )
    return tasks


def save_study(study: Study, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    payload = {
        "study_id": study.study_id,
        "plan": {
            "articles_per_annotator": study.plan.articles_per_annotator,
            "annotators_per_article": study.plan.annotators_per_article,
            "seed": study.plan.seed,
            "assignment": {a: list(arts) for a, arts in study.plan.assignment.items()},
        },
        "articles": {aid: a.to_record() for aid, a in study.articles.items()},
        "tasks": [
            {
                "task_id": t.task_id,
                "article_id": t.article.id,
                "evidence": t.evidence.to_record(),
                "translation": t.translation,
            }
            for _, t in sorted(study.tasks.items())
        ],
    }
    (directory / "study.json").write_text(
        json.dumps(payload, ensure_ascii=False, indent=1), encoding="utf-8")


def load_study(directory) -> Study:
    directory = Path(directory)
    payload = json.loads((directory / "study.json").read_text(encoding="utf-8"))
    articles = {
        aid: NewsArticle(
            id=rec["id"], title=rec["title"], content=rec.get("content", ""),
            url=rec.get("url", ""), language=rec.get("language", "en"),
            label=rec.get("label", "Unknown"), topic=rec.get("topic", ""),
            published=rec.get("published"),
        )
        for aid, rec in payload["articles"].items()
    }
    tasks = {}
    for row in payload["tasks"]:
        doc = EvidenceDoc.from_record(row["evidence"])
        tasks[row["task_id"]] = AnnotationTask(
            task_id=row["task_id"],
            article=articles[row["article_id"]],
            evidence=doc,
            translation=row.get("translation"),
        )
    plan_info = payload["plan"]
    plan = StudyPlan(
        articles_per_annotator=plan_info["articles_per_annotator"],
        annotators_per_article=plan_info["annotators_per_article"],
        assignment={a: tuple(arts) for a, arts in plan_info["assignment"].items()},
        seed=plan_info.get("seed", 0),
    )
    store = StudyStore(directory / "records.jsonl")
    return Study(payload["study_id"], plan, articles, tasks, store)
