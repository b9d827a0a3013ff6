"""End-to-end orchestration: configuration, bindings, and the article loop.

A run executes the five pipeline steps per article (extract, translate,
search, score, report) against configured bindings, isolates per-article
failures, and writes every artifact under one output tree::

    out/
      manifests/run.json       config digest, fixture digests, statuses
      manifests/<article>.json per-article manifest with a deterministic digest
      features/evidence.jsonl  scored evidence points per article
      features/features.csv    evidence feature matrix plus labels
      reports/<article>.md     explanation reports (markdown and JSON)

Reruns are restartable: an article whose manifest already records the same
config digest is skipped.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Dataset, NewsArticle, SnapshotStore
from .credibility import RankTable, lookup_rank
from .errors import ConfigError, UnparseableUrl
from .features import (
    EvidencePoint,
    FeatureSchema,
    build_matrix,
    export_matrix_csv,
    load_evidence_store,
    save_evidence_store,
)
from .report import build_report, render
from .retrieval import (
    FixtureSearchProvider,
    FixtureTranslator,
    HttpSearchProvider,
    HttpTranslator,
    IdentityTranslator,
    QuerySpec,
    retrieve_evidence,
)
from .similarity import (
    HttpEmbedder,
    HttpNliProvider,
    ReferenceEmbedder,
    ScorerConfig,
    StubNliProvider,
    TableNliProvider,
    cosine_news_similarity,
    load_refutation_lexicons,
    nli_news_similarity,
)

log = logging.getLogger(__name__)

ENV_PREFIX = "MULTIVERSE_"


@dataclass
class PipelineConfig:
    """One structured config file drives every subcommand.

    Paths are resolved relative to the config file location.  Environment
    variables prefixed ``MULTIVERSE_`` override scalar fields, e.g.
    ``MULTIVERSE_TOP_N=5`` or ``MULTIVERSE_LANGUAGES=en,fr``.
    """

    languages: tuple[str, ...] = ("en", "fr", "de", "es", "ru")
    top_n: int = 10
    scorer: str = "cosine"  # or "nli"
    theta: float = 0.5
    content_len: int = 500
    compare: str = "title"
    seed: int = 0
    translator: dict = field(default_factory=lambda: {"kind": "identity"})
    search: dict = field(default_factory=dict)
    embedding: dict = field(default_factory=lambda: {"kind": "reference"})
    nli: dict = field(default_factory=lambda: {"kind": "stub"})
    rank_table: str = ""
    popularity_table: str = ""
    snapshot_dir: str = ""
    model_path: str = ""
    datasets: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path)

    _ENV_FIELDS = ("languages", "top_n", "scorer", "theta", "content_len",
                   "compare", "seed", "rank_table", "popularity_table",
                   "snapshot_dir", "model_path")

    @classmethod
    def from_file(cls, path, environ=None) -> "PipelineConfig":
        path = Path(path)
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        known = {f.name for f in dataclasses.fields(cls)} - {"base_dir"}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config = cls(**payload, base_dir=path.parent)
        config.apply_env(environ if environ is not None else os.environ)
        config.validate()
        return config

    def apply_env(self, environ) -> None:
        for name in self._ENV_FIELDS:
            raw = environ.get(ENV_PREFIX + name.upper())
            if raw is None:
                continue
            if name == "languages":
                self.languages = tuple(x.strip() for x in raw.split(",") if x.strip())
            elif name in ("top_n", "content_len", "seed"):
                setattr(self, name, int(raw))
            elif name == "theta":
                self.theta = float(raw)
            else:
                setattr(self, name, raw)

    def __post_init__(self):
        self.languages = tuple(self.languages)

    def _resolve(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def validate(self) -> None:
        if self.scorer not in ("cosine", "nli"):
            raise ConfigError(f"scorer must be cosine or nli, got {self.scorer!r}")
        if self.top_n < 1:
            raise ConfigError("top_n must be >= 1")
        if not self.languages:
            raise ConfigError("languages must be nonempty")
        if not 0.0 < self.theta < 1.0:
            raise ConfigError("theta must lie strictly between 0 and 1")
        if not self.rank_table:
            raise ConfigError("rank_table path is required")
        if not self._resolve(self.rank_table).exists():
            raise ConfigError(f"rank table not found: {self._resolve(self.rank_table)}")
        for name, value in (("translator", self.translator), ("search", self.search),
                            ("nli", self.nli)):
            path = value.get("path")
            if path and not self._resolve(path).exists():
                raise ConfigError(f"{name} fixture path not found: {self._resolve(path)}")
        for dataset, path in self.datasets.items():
            if not self._resolve(path).exists():
                raise ConfigError(f"dataset {dataset!r} not found: {self._resolve(path)}")

    def digest(self) -> str:
        payload = dataclasses.asdict(self)
        payload.pop("base_dir", None)
        return hashlib.sha256(
            json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()

    # binding builders

    def build_translator(self):
        kind = self.translator.get("kind", "identity")
        if kind == "identity":
            return IdentityTranslator()
        if kind == "fixture":
            return FixtureTranslator.from_file(self._resolve(self.translator["path"]))
        if kind == "external-service":
            return HttpTranslator(self.translator["endpoint"])
        raise ConfigError(f"unknown translator kind {kind!r}")

    def build_search(self):
        kind = self.search.get("kind", "fixture")
        if kind == "fixture":
            if "path" not in self.search:
                raise ConfigError("fixture search requires a path")
            return FixtureSearchProvider.from_dir(self._resolve(self.search["path"]))
        if kind in ("live", "external-service"):
            return HttpSearchProvider(self.search["endpoint"])
        raise ConfigError(f"unknown search kind {kind!r}")

    def build_embedder(self):
        kind = self.embedding.get("kind", "reference")
        if kind in ("reference", "reference-hash"):
            return ReferenceEmbedder()
        if kind == "external-service":
            return HttpEmbedder(self.embedding["endpoint"])
        raise ConfigError(f"unknown embedding kind {kind!r}")

    def build_nli(self):
        kind = self.nli.get("kind", "stub")
        if kind == "stub":
            return StubNliProvider()
        if kind == "table":
            payload = json.loads(
                self._resolve(self.nli["path"]).read_text(encoding="utf-8"))
            table = {
                (row["premise"], row["hypothesis"]):
                    (row["entailment"], row["neutral"], row["contradiction"])
                for row in payload
            }
            return TableNliProvider(table)
        if kind == "external-service":
            return HttpNliProvider(self.nli["endpoint"])
        raise ConfigError(f"unknown NLI kind {kind!r}")

    def build_scorer_config(self) -> ScorerConfig:
        return ScorerConfig(
            theta=self.theta,
            content_len=self.content_len,
            compare=self.compare,
            refutation_lexicon=load_refutation_lexicons(),
            embedding=self.build_embedder(),
            nli=self.build_nli(),
        )

    def build_rank_table(self) -> RankTable:
        return RankTable.from_tsv(self._resolve(self.rank_table))

    def load_dataset(self, name: str) -> Dataset:
        from .corpus import ingest_dataset

        if name not in self.datasets:
            raise ConfigError(f"dataset {name!r} not in config; "
                              f"known: {sorted(self.datasets)}")
        return ingest_dataset(self._resolve(self.datasets[name]), name=name)

    def fixture_digests(self) -> dict[str, str]:
        digests = {}
        if self.rank_table:
            digests["rank_table"] = _file_digest(self._resolve(self.rank_table))
        for name, value in (("translator", self.translator), ("search", self.search)):
            path = value.get("path")
            if path:
                digests[name] = _tree_digest(self._resolve(path))
        return digests


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _tree_digest(path: Path) -> str:
    h = hashlib.sha256()
    if path.is_file():
        return _file_digest(path)
    for file in sorted(path.rglob("*")):
        if file.is_file():
            h.update(file.name.encode())
            h.update(file.read_bytes())
    return h.hexdigest()


def score_evidence(article: NewsArticle, evidence, scorer_cfg: ScorerConfig,
                   rank_table: RankTable, scorer: str = "cosine",
                   queries: dict[str, str] | None = None) -> list[EvidencePoint]:
    """Turn retrieved docs into (similarity, source rank) evidence points."""
    queries = queries or {}
    points = []
    for lang, docs in evidence.items():
        for doc in docs:
            if scorer == "nli":
                sim = nli_news_similarity(article, doc, scorer_cfg).entailment
            else:
                sim = cosine_news_similarity(article, doc, lang, scorer_cfg,
                                             query_text=queries.get(lang))
            try:
                rank = lookup_rank(doc.url, rank_table)
            except UnparseableUrl:
                rank = lookup_rank("unknown.invalid", rank_table)
            points.append(EvidencePoint(language=lang, position=doc.position,
                                        sim=sim, rank=rank))
    return points


@dataclass
class RunSummary:
    out_dir: Path
    n_articles: int = 0
    n_completed: int = 0
    n_skipped: int = 0
    n_failed: int = 0
    pairs_scored: int = 0
    failures: dict = field(default_factory=dict)


def run_pipeline(config: PipelineConfig, dataset: Dataset, out_dir,
                 report_k: int = 3) -> RunSummary:
    """Execute steps 1-5 for every article and write the artifact tree."""
    out = Path(out_dir)
    manifests = out / "manifests"
    features_dir = out / "features"
    reports_dir = out / "reports"
    for d in (manifests, features_dir, reports_dir):
        d.mkdir(parents=True, exist_ok=True)

    translator = config.build_translator()
    search = config.build_search()
    scorer_cfg = config.build_scorer_config()
    rank_table = config.build_rank_table()
    snapshot_store = (SnapshotStore(config._resolve(config.snapshot_dir))
                      if config.snapshot_dir else SnapshotStore(out / "snapshots"))
    config_digest = config.digest()

    evidence_path = features_dir / "evidence.jsonl"
    store: dict[str, list[EvidencePoint]] = (
        load_evidence_store(evidence_path) if evidence_path.exists() else {})

    model = None
    if config.model_path:
        from .model import ClassifierModel

        model = ClassifierModel.load(config._resolve(config.model_path))

    summary = RunSummary(out_dir=out, n_articles=len(dataset))
    statuses: dict[str, str] = {}
    for article in dataset:
        manifest_path = manifests / f"{article.id}.json"
        if manifest_path.exists():
            prior = json.loads(manifest_path.read_text(encoding="utf-8"))
            if prior.get("config_digest") == config_digest and article.id in store:
                summary.n_skipped += 1
                summary.pairs_scored += len(store[article.id])
                statuses[article.id] = "skipped"
                continue
        try:
            spec = QuerySpec(article_id=article.id, languages=config.languages,
                             top_n=config.top_n)
            failures: dict[str, str] = {}
            evidence = retrieve_evidence(article, spec, translator, search,
                                         snapshot_store=snapshot_store,
                                         failures=failures)
            queries = {lang: translator.translate(article.title, lang)
                       for lang in config.languages if lang not in failures}
            points = score_evidence(article, evidence, scorer_cfg, rank_table,
                                    scorer=config.scorer, queries=queries)
            store[article.id] = points

            paired = {
                lang: [(doc, point)
                       for doc in docs
                       for point in points
                       if point.language == lang and point.position == doc.position]
                for lang, docs in evidence.items()
            }
            feature_row = None
            if model is not None:
                schema = FeatureSchema(("ce",), langs=config.languages,
                                       top_n=config.top_n).fit([])
                single = Dataset("one", [article])
                feature_row, _ = build_matrix(single, schema, store, strict=False)
            evidence_report = build_report(article, paired, k=report_k,
                                           model=model, feature_row=feature_row,
                                           translator=translator)
            (reports_dir / f"{article.id}.md").write_bytes(
                render(evidence_report, "markdown"))
            (reports_dir / f"{article.id}.json").write_bytes(
                render(evidence_report, "json"))

            digest_payload = json.dumps({
                "config_digest": config_digest,
                "article": article.id,
                "points": [p.to_record() for p in points],
            }, sort_keys=True)
            manifest = {
                "article": article.id,
                "config_digest": config_digest,
                "pairs_scored": len(points),
                "languages_failed": failures,
                "digest": hashlib.sha256(digest_payload.encode()).hexdigest(),
            }
            manifest_path.write_text(json.dumps(manifest, indent=1),
                                     encoding="utf-8")
            summary.n_completed += 1
            summary.pairs_scored += len(points)
            statuses[article.id] = "completed"
        except Exception as exc:
            log.exception("pipeline failed for article %s", article.id)
            summary.n_failed += 1
            summary.failures[article.id] = str(exc)
            statuses[article.id] = f"failed: {exc}"

    save_evidence_store(store, evidence_path, scorer=config.scorer)

    processed = [a for a in dataset if statuses.get(a.id) in ("completed", "skipped")]
    if processed:
        schema = FeatureSchema(("ce",), langs=config.languages,
                               top_n=config.top_n).fit(processed)
        matrix, labels = build_matrix(Dataset(dataset.name, processed), schema,
                                      store, strict=False)
        export_matrix_csv(matrix, labels, features_dir / "features.csv")
        (features_dir / "schema.json").write_text(
            json.dumps(schema.manifest(), indent=1), encoding="utf-8")

    run_manifest = {
        "config_digest": config_digest,
        "seed": config.seed,
        "scorer": config.scorer,
        "fixture_digests": config.fixture_digests(),
        "articles": statuses,
        "pairs_scored": summary.pairs_scored,
    }
    (manifests / "run.json").write_text(json.dumps(run_manifest, indent=1),
                                        encoding="utf-8")
    return summary
