"""Command-line entry points tying the modules into the full pipeline.

Exit codes: 0 on success, 1 on validation or configuration errors, 2 on
runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import corpus, model as model_mod, report as report_mod, similarity, study as study_mod
from .errors import (
    ConfigError,
    DegenerateGold,
    InfeasiblePlan,
    MultiverseError,
    SchemaViolation,
    TooSmall,
    UnsupportedLanguage,
)
from .features import load_evidence_store
from .pipeline import PipelineConfig, RunSummary, run_pipeline
from .retrieval import QuerySpec, retrieve_evidence

_VALIDATION_ERRORS = (ConfigError, SchemaViolation, UnsupportedLanguage,
                      TooSmall, InfeasiblePlan, DegenerateGold, ValueError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="multiverse",
                     description="Cross-lingual evidence pipeline for fake news verification")
    parser.add_argument("--config", help="path to the pipeline config JSON")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", default="out", help="output directory")

    # the same globals are accepted after the subcommand; SUPPRESS keeps a
    # subcommand-level omission from clobbering a value given up front
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate and normalize a dataset file",
                       parents=[common])
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("jsonl", "csv"))
    p.add_argument("--lenient", action="store_true",
                   help="collect bad rows instead of failing")

    p = sub.add_parser("retrieve", help="fetch evidence for one article", parents=[common])
    p.add_argument("--article", required=True)
    p.add_argument("--dataset", default=None)
    p.add_argument("--langs", default=None, help="comma-separated language tags")
    p.add_argument("--top", type=int, default=None)
    p.add_argument("--provider", choices=("fixture", "live"), default=None)
    p.add_argument("--snapshot-dir", default=None)

    p = sub.add_parser("score", help="score retrieved evidence into points", parents=[common])
    p.add_argument("--dataset", required=True)
    p.add_argument("--scorer", choices=("cosine", "nli"), default=None)

    p = sub.add_parser("featurize", help="build a feature matrix CSV", parents=[common])
    p.add_argument("--dataset", required=True)
    p.add_argument("--blocks", default="ce",
                   help="comma-separated blocks, e.g. ce,ngrams")
    p.add_argument("--evidence", default=None,
                   help="evidence store JSONL (defaults to <out>/features/evidence.jsonl)")

    p = sub.add_parser("train", help="train a classifier on a feature CSV", parents=[common])
    p.add_argument("--features", required=True)
    p.add_argument("--kind", choices=("boosted-stumps", "logistic"),
                   default="boosted-stumps")
    p.add_argument("--model-out", default=None)

    p = sub.add_parser("evaluate", help="evaluate a trained model on a feature CSV", parents=[common])
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)

    p = sub.add_parser("cv", help="cross-validate on a feature CSV", parents=[common])
    p.add_argument("--features", required=True)
    p.add_argument("--kind", choices=("boosted-stumps", "logistic"),
                   default="boosted-stumps")
    p.add_argument("--k", type=int, default=5)

    p = sub.add_parser("ablate", help="run feature-combo ablations", parents=[common])
    p.add_argument("--dataset", required=True)
    p.add_argument("--combos", required=True,
                   help="comma-separated combos, e.g. ce-emb-rank,me-emb-rank")
    p.add_argument("--evidence", default=None)
    p.add_argument("--kind", choices=("boosted-stumps", "logistic"),
                   default="boosted-stumps")
    p.add_argument("--k", type=int, default=5)

    p = sub.add_parser("tune-theta", help="grid-search the support threshold", parents=[common])
    p.add_argument("--pairs", required=True,
                   help="JSONL of {score, label} gold pairs")

    p = sub.add_parser("report", help="render the evidence report for an article", parents=[common])
    p.add_argument("--article", required=True)
    p.add_argument("--format", choices=("md", "json"), default="md")
    p.add_argument("--top", type=int, default=3)

    p = sub.add_parser("run", help="run the full pipeline over a dataset", parents=[common])
    p.add_argument("--dataset", required=True)
    p.add_argument("--limit", type=int, default=None)

    p = sub.add_parser("study", help="annotation study tooling", parents=[common])
    study_sub = p.add_subparsers(dest="study_command", required=True,
                                 parser_class=_Parser)

    c = study_sub.add_parser("create", help="create a balanced study plan", parents=[common])
    c.add_argument("--articles", required=True, help="articles JSONL")
    c.add_argument("--snapshot-dir", required=True)
    c.add_argument("--annotators", required=True, help="comma-separated ids")
    c.add_argument("--per-annotator", type=int, default=10)
    c.add_argument("--per-article", type=int, default=3)
    c.add_argument("--study-id", default="study")
    c.add_argument("--study-dir", required=True)

    s = study_sub.add_parser("serve", help="serve the study API over HTTP", parents=[common])
    s.add_argument("--study-dir", required=True)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8080)

    t = study_sub.add_parser("stats", help="print study statistics", parents=[common])
    t.add_argument("--study-dir", required=True)

    return parser


def _load_config(args) -> PipelineConfig:
    if not args.config:
        raise ConfigError("this command needs --config")
    config = PipelineConfig.from_file(args.config)
    if args.seed is not None:
        config.seed = args.seed
    return config


def _evidence_path(args) -> Path:
    if getattr(args, "evidence", None):
        return Path(args.evidence)
    return Path(args.out) / "features" / "evidence.jsonl"


def _cmd_ingest(args) -> int:
    dataset = corpus.ingest_dataset(args.input, format=args.format,
                                    strict=not args.lenient)
    out = Path(args.out) / "datasets" / f"{dataset.name}.jsonl"
    corpus.write_articles_jsonl(dataset, out)
    print(json.dumps({"name": dataset.name, "articles": len(dataset),
                      "counts": dataset.counts,
                      "errors": dataset.error_report, "out": str(out)}))
    return 0


def _cmd_retrieve(args, config: PipelineConfig) -> int:
    if args.langs:
        config.languages = tuple(x.strip() for x in args.langs.split(",") if x.strip())
    if args.top:
        config.top_n = args.top
    if args.provider == "live" and config.search.get("kind") == "fixture":
        raise ConfigError("--provider live needs a search endpoint in the config")
    if args.snapshot_dir:
        config.snapshot_dir = args.snapshot_dir
    dataset = config.load_dataset(args.dataset or next(iter(config.datasets), ""))
    article = dataset.by_id(args.article)
    store = corpus.SnapshotStore(config._resolve(config.snapshot_dir)
                                 if config.snapshot_dir
                                 else Path(args.out) / "snapshots")
    spec = QuerySpec(article_id=article.id, languages=config.languages,
                     top_n=config.top_n)
    evidence = retrieve_evidence(article, spec, config.build_translator(),
                                 config.build_search(), snapshot_store=store)
    print(json.dumps({lang: len(docs) for lang, docs in evidence.items()}))
    return 0


def _cmd_run(args, config: PipelineConfig) -> int:
    dataset = config.load_dataset(args.dataset)
    if args.limit:
        dataset = corpus.Dataset(dataset.name, dataset.articles[: args.limit])
    summary: RunSummary = run_pipeline(config, dataset, args.out)
    print(json.dumps({
        "articles": summary.n_articles,
        "completed": summary.n_completed,
        "skipped": summary.n_skipped,
        "failed": summary.n_failed,
        "pairs_scored": summary.pairs_scored,
        "out": str(summary.out_dir),
    }))
    return 0 if summary.n_failed == 0 else 2


def _cmd_score(args, config: PipelineConfig) -> int:
    if args.scorer:
        config.scorer = args.scorer
    dataset = config.load_dataset(args.dataset)
    summary = run_pipeline(config, dataset, args.out)
    print(json.dumps({"pairs_scored": summary.pairs_scored,
                      "failed": summary.n_failed}))
    return 0 if summary.n_failed == 0 else 2


def _cmd_featurize(args, config: PipelineConfig) -> int:
    from .features import FeatureSchema, build_matrix, export_matrix_csv

    dataset = config.load_dataset(args.dataset)
    store = load_evidence_store(_evidence_path(args))
    blocks = tuple(b.strip() for b in args.blocks.split(",") if b.strip())
    schema = FeatureSchema(blocks, langs=config.languages, top_n=config.top_n)
    schema.fit(dataset.articles)
    matrix, labels = build_matrix(dataset, schema, store, strict=False)
    stem = f"{args.dataset}-{'-'.join(blocks)}"
    out = Path(args.out) / "features" / f"{stem}.csv"
    export_matrix_csv(matrix, labels, out)
    manifest_path = out.with_suffix(".schema.json")
    manifest_path.write_text(json.dumps(schema.manifest(), indent=1),
                             encoding="utf-8")
    print(json.dumps({"rows": int(matrix.X.shape[0]),
                      "dims": int(matrix.X.shape[1]), "out": str(out),
                      "schema": str(manifest_path)}))
    return 0


def _cmd_train(args, config: PipelineConfig | None) -> int:
    from .features import import_matrix_csv

    matrix, labels = import_matrix_csv(args.features)
    seed = args.seed if args.seed is not None else (config.seed if config else 0)
    trained = model_mod.train(matrix, labels,
                              model_mod.TrainConfig(kind=args.kind, seed=seed))
    out = Path(args.model_out or Path(args.out) / "models" / "model.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    trained.save(out)
    print(json.dumps({"kind": trained.kind, "out": str(out)}))
    return 0


def _cmd_evaluate(args) -> int:
    from .features import import_matrix_csv

    matrix, labels = import_matrix_csv(args.features)
    trained = model_mod.ClassifierModel.load(args.model)
    report = model_mod.evaluate(trained, matrix, labels)
    print(json.dumps({
        "precision": report.precision, "recall": report.recall, "f1": report.f1,
        "counts": {"tp": report.counts.tp, "fp": report.counts.fp,
                   "fn": report.counts.fn, "tn": report.counts.tn},
        "zero_division": sorted(report.zero_division),
    }))
    return 0


def _cmd_cv(args, config: PipelineConfig | None) -> int:
    from .features import import_matrix_csv

    matrix, labels = import_matrix_csv(args.features)
    seed = args.seed if args.seed is not None else (config.seed if config else 0)
    cv = model_mod.cross_validate(matrix, labels,
                                  model_mod.TrainConfig(kind=args.kind, seed=seed),
                                  k=args.k)
    print(json.dumps({"fold_f1": list(cv.fold_f1), "mean": cv.mean, "std": cv.std}))
    return 0


def _cmd_ablate(args, config: PipelineConfig) -> int:
    dataset = config.load_dataset(args.dataset)
    store = load_evidence_store(_evidence_path(args))
    combos = [c.strip() for c in args.combos.split(",") if c.strip()]
    seed = args.seed if args.seed is not None else config.seed
    rows = model_mod.ablate(dataset, store, combos,
                            config=model_mod.TrainConfig(kind=args.kind, seed=seed),
                            langs=config.languages, top_n=config.top_n, k=args.k)
    out_dir = Path(args.out) / "ablation"
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "ablation.md").write_text(model_mod.render_ablation_markdown(rows),
                                         encoding="utf-8")
    (out_dir / "ablation.csv").write_text(model_mod.render_ablation_csv(rows),
                                          encoding="utf-8")
    print(model_mod.render_ablation_markdown(rows), end="")
    return 0


def _cmd_tune_theta(args) -> int:
    pairs = []
    for line in Path(args.pairs).read_text(encoding="utf-8").splitlines():
        if line.strip():
            row = json.loads(line)
            pairs.append((float(row["score"]), row["label"]))
    result = similarity.tune_threshold(pairs)
    for theta, acc in result.grid:
        print(f"theta={theta:.1f} accuracy={acc:.4f}")
    print(f"chosen theta={result.theta:.1f} accuracy={result.accuracy:.4f}")
    return 0


def _cmd_report(args, config: PipelineConfig) -> int:
    """Re-render an article's report at the requested depth from the stored
    snapshots and scored evidence points."""
    article = None
    for name in config.datasets:
        try:
            article = config.load_dataset(name).by_id(args.article)
            break
        except KeyError:
            continue
    if article is None:
        raise ConfigError(f"article {args.article!r} not found in any "
                          f"configured dataset")
    evidence_path = _evidence_path(args)
    if not evidence_path.exists():
        raise ConfigError(f"no evidence store at {evidence_path}; "
                          f"run the pipeline first")
    points = load_evidence_store(evidence_path).get(args.article)
    if not points:
        raise ConfigError(f"no scored evidence for article {args.article!r}; "
                          f"run the pipeline first")
    snap_root = (config._resolve(config.snapshot_dir) if config.snapshot_dir
                 else Path(args.out) / "snapshots")
    snapshots = corpus.SnapshotStore(snap_root)
    by_slot = {(p.language, p.position): p for p in points}
    paired = {}
    for lang in config.languages:
        if not snapshots.has(args.article, lang):
            continue
        docs = snapshots.load(args.article, lang).results
        pairs = [(doc, by_slot[(lang, doc.position)]) for doc in docs
                 if (lang, doc.position) in by_slot]
        if pairs:
            paired[lang] = pairs
    report = report_mod.build_report(article, paired, k=args.top,
                                     translator=config.build_translator())
    fmt = "markdown" if args.format == "md" else "json"
    sys.stdout.write(report_mod.render(report, fmt).decode("utf-8"))
    return 0


def _cmd_study(args, config: PipelineConfig | None) -> int:
    if args.study_command == "create":
        dataset = corpus.ingest_dataset(args.articles)
        snapshot_store = corpus.SnapshotStore(args.snapshot_dir)
        evidence: dict[str, dict[str, list]] = {}
        for article_id, lang in snapshot_store.keys():
            snap = snapshot_store.load(article_id, lang)
            evidence.setdefault(article_id, {})[lang] = list(snap.results)
        annotators = [a.strip() for a in args.annotators.split(",") if a.strip()]
        plan = study_mod.create_study(
            [a.id for a in dataset], annotators,
            articles_per_annotator=args.per_annotator,
            annotators_per_article=args.per_article,
            seed=args.seed if args.seed is not None else 0)
        tasks = study_mod.build_tasks(dataset.articles, evidence)
        study = study_mod.Study(
            study_id=args.study_id,
            plan=plan,
            articles={a.id: a for a in dataset},
            tasks=tasks,
            store=study_mod.StudyStore(Path(args.study_dir) / "records.jsonl"),
        )
        study_mod.save_study(study, args.study_dir)
        print(json.dumps({"study_id": args.study_id, "tasks": len(tasks),
                          "annotators": annotators,
                          "study_dir": args.study_dir}))
        return 0
    if args.study_command == "serve":
        from .service import StudyServer

        study = study_mod.load_study(args.study_dir)
        server = StudyServer({study.study_id: study}, host=args.host,
                             port=args.port)
        print(json.dumps({"study_id": study.study_id, "url": server.url}),
              flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        return 0
    if args.study_command == "stats":
        study = study_mod.load_study(args.study_dir)
        print(json.dumps(study.stats(), ensure_ascii=False, indent=1))
        return 0
    raise ConfigError(f"unknown study command {args.study_command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        needs_config = args.command in ("retrieve", "score", "featurize",
                                        "ablate", "report", "run")
        config = _load_config(args) if needs_config else None
        if args.command in ("train", "cv", "study") and args.config:
            config = _load_config(args)

        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command == "retrieve":
            return _cmd_retrieve(args, config)
        if args.command == "run":
            return _cmd_run(args, config)
        if args.command == "score":
            return _cmd_score(args, config)
        if args.command == "featurize":
            return _cmd_featurize(args, config)
        if args.command == "train":
            return _cmd_train(args, config)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        if args.command == "cv":
            return _cmd_cv(args, config)
        if args.command == "ablate":
            return _cmd_ablate(args, config)
        if args.command == "tune-theta":
            return _cmd_tune_theta(args)
        if args.command == "report":
            return _cmd_report(args, config)
        if args.command == "study":
            return _cmd_study(args, config)
        raise ConfigError(f"unknown command {args.command!r}")
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MultiverseError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
