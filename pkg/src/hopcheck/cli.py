"""hopcheck command-line interface.

Every pipeline is a subcommand; artifact-producing commands write their
outputs plus a run manifest (resolved configuration, inputs, outputs,
seed, version, duration) into the --out directory. All randomness flows
from --seed, so reruns with identical inputs are byte-identical.
"""

import argparse
import json
import os
import sys
import time
from pathlib import Path

import hopcheck
from hopcheck import distractors as dis
from hopcheck import study as study_mod
from hopcheck.categorize import categorize_dataset, load_entity_annotations
from hopcheck.data import (
    Paragraph,
    load_dataset,
    load_predictions,
    save_dataset,
    save_predictions,
)
from hopcheck.pipeline import (
    OpenDomainConfig,
    external_scorer,
    gold_oracle_scorer,
    lexical_scorer,
    run_distractor_eval,
    run_open_domain,
)
from hopcheck.questions import reduce_question
from hopcheck.recordstore import RecordStore
from hopcheck.scorer import load_external_scores, save_external_scores
from hopcheck.tfidf import (
    DEFAULT_NUM_BINS,
    build_index,
    load_corpus,
    load_index,
    save_index,
    top_k,
)

DEFAULT_SEED = 13


class UsageError(Exception):
    """Bad flag combinations and missing inputs: usage message, exit 2."""


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("HOPCHECK_THREADS", "1")))
    except ValueError:
        return 1


def _write_json(payload, path: Path) -> None:
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=1, sort_keys=True),
                    encoding="utf-8")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(args, started: float, inputs: dict, outputs: dict) -> None:
    out = _out_dir(args)
    config = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k not in ("func",) and not k.startswith("_")
    }
    _write_json({
        "subcommand": args.subcommand,
        "config": config,
        "inputs": {k: str(v) for k, v in inputs.items()},
        "outputs": {k: str(v) for k, v in outputs.items()},
        "seed": getattr(args, "seed", None),
        "version": hopcheck.__version__,
        "duration_seconds": round(time.perf_counter() - started, 6),
    }, out / "manifest.json")


def _corpus_paragraphs(path) -> dict[str, Paragraph]:
    return {
        doc_id: Paragraph(title=title, sentences=(text,))
        for doc_id, title, text in load_corpus(path)
    }


def _resolve_scorer(args, dataset):
    if getattr(args, "scores", None):
        return external_scorer(load_external_scores(args.scores))
    if args.scorer == "oracle":
        return gold_oracle_scorer(dataset)
    return lexical_scorer()


def _add_scorer_flags(parser) -> None:
    parser.add_argument("--scorer", choices=("lexical", "oracle"), default="lexical",
                        help="built-in per-paragraph scorer (default: lexical)")
    parser.add_argument("--scores", type=Path, default=None,
                        help="external scores file (JSONL); overrides --scorer")


# Subcommand handlers --------------------------------------------------------

def cmd_index_build(args) -> None:
    started = time.perf_counter()
    corpus = [(doc_id, text) for doc_id, _title, text in load_corpus(args.corpus)]
    index = build_index(corpus, num_bins=args.num_bins)
    out = _out_dir(args)
    index_path = out / "index.bin"
    save_index(index, index_path)
    print(f"indexed {index.doc_count} documents into {index_path}")
    _write_manifest(args, started, {"corpus": args.corpus}, {"index": index_path})


def cmd_index_query(args) -> None:
    started = time.perf_counter()
    index = load_index(args.index)
    results = top_k(index, args.query, args.k)
    payload = [{"doc_id": doc_id, "score": score} for doc_id, score in results]
    print(json.dumps(payload, ensure_ascii=False, indent=1))
    if args.out:
        out = _out_dir(args)
        _write_json(payload, out / "results.json")
        _write_manifest(args, started, {"index": args.index}, {"results": out / "results.json"})


def cmd_eval_distractor(args) -> None:
    started = time.perf_counter()
    dataset = load_dataset(args.dataset)
    scorer = _resolve_scorer(args, dataset)
    report = run_distractor_eval(dataset, scorer, threads=args.threads)
    out = _out_dir(args)
    save_predictions(report.predictions, out / "predictions.json")
    _write_json(report.as_dict(), out / "report.json")
    print(f"em={report.metrics.em:.4f} f1={report.metrics.f1:.4f} over {report.metrics.count} examples")
    _write_manifest(args, started, {"dataset": args.dataset},
                    {"predictions": out / "predictions.json", "report": out / "report.json"})


def cmd_eval_open(args) -> None:
    started = time.perf_counter()
    dataset = load_dataset(args.dataset)
    index = load_index(args.index)
    corpus = _corpus_paragraphs(args.corpus)
    scorer = _resolve_scorer(args, dataset)
    config = OpenDomainConfig(num_retrieved=args.k, inject_gold=args.inject_gold)
    report = run_open_domain(dataset, index, corpus, scorer, config, threads=args.threads)
    out = _out_dir(args)
    save_predictions(report.predictions, out / "predictions.json")
    _write_json(report.as_dict(), out / "report.json")
    print(f"em={report.metrics.em:.4f} f1={report.metrics.f1:.4f} "
          f"gold_retrieval={report.gold_retrieval_rate:.4f} over {report.metrics.count} examples")
    _write_manifest(args, started,
                    {"dataset": args.dataset, "index": args.index, "corpus": args.corpus},
                    {"predictions": out / "predictions.json", "report": out / "report.json"})


def _build_pools(args, dataset, index, corpus):
    pools = []
    for example in dataset:
        pools.append(dis.candidate_pool(example, index, corpus, n=args.n))
    return pools


def cmd_distractors_pool(args) -> None:
    started = time.perf_counter()
    dataset = load_dataset(args.dataset)
    index = load_index(args.index)
    corpus = _corpus_paragraphs(args.corpus)
    pools = _build_pools(args, dataset, index, corpus)
    out = _out_dir(args)
    path = out / "pools.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for pool in pools:
            fh.write(json.dumps({
                "question_id": pool.question_id,
                "flagged": pool.flagged,
                "candidates": [{"key": k, "score": s} for k, _p, s in pool.candidates],
            }, ensure_ascii=False) + "\n")
    print(f"wrote {len(pools)} candidate pools to {path}")
    _write_manifest(args, started,
                    {"dataset": args.dataset, "index": args.index, "corpus": args.corpus},
                    {"pools": path})


def cmd_distractors_adversarial(args) -> None:
    started = time.perf_counter()
    dataset = load_dataset(args.dataset)
    index = load_index(args.index)
    corpus = _corpus_paragraphs(args.corpus)
    scorer = _resolve_scorer(args, dataset)
    sets = []
    for example, pool in zip(dataset, _build_pools(args, dataset, index, corpus)):
        sets.append(dis.adversarial_select(pool, scorer, m=args.m))
    out = _out_dir(args)
    path = out / "distractor_sets.jsonl"
    dis.save_distractor_sets(sets, path)
    print(f"wrote {len(sets)} adversarial distractor sets to {path}")
    _write_manifest(args, started,
                    {"dataset": args.dataset, "index": args.index, "corpus": args.corpus},
                    {"distractor_sets": path})


def cmd_distractors_typed(args) -> None:
    started = time.perf_counter()
    dataset = load_dataset(args.dataset)
    index = load_index(args.index)
    corpus = _corpus_paragraphs(args.corpus)
    scorer = _resolve_scorer(args, dataset)
    if args.annotations:
        annotations = dis.load_paragraph_annotations(args.annotations)
    else:
        annotations = {key: dis.naive_entity_type(p.title, p.text) for key, p in corpus.items()}
    sets = []
    for example, pool in zip(dataset, _build_pools(args, dataset, index, corpus)):
        gold_types = dis.gold_entity_types(example, annotations)
        filtered = dis.type_filter(pool, gold_types, annotations)
        if not filtered.candidates:
            print(f"warning: no type-matching candidates for {example.id}, using unfiltered pool",
                  file=sys.stderr)
            filtered = pool
        sets.append(dis.adversarial_select(filtered, scorer, m=args.m,
                                           method=dis.METHOD_ADVERSARIAL_TYPED))
    out = _out_dir(args)
    path = out / "distractor_sets.jsonl"
    dis.save_distractor_sets(sets, path)
    print(f"wrote {len(sets)} typed distractor sets to {path}")
    _write_manifest(args, started,
                    {"dataset": args.dataset, "index": args.index, "corpus": args.corpus},
                    {"distractor_sets": path})


def cmd_distractors_overlap(args) -> None:
    started = time.perf_counter()
    sets_a = dis.load_distractor_sets(args.a)
    sets_b = dis.load_distractor_sets(args.b)
    report = dis.overlap_report(sets_a, sets_b)
    out = _out_dir(args)
    _write_json(report, out / "overlap.json")
    print(f"macro={report['macro']:.4f} micro={report['micro']:.4f} over {report['count']} questions")
    _write_manifest(args, started, {"a": args.a, "b": args.b}, {"overlap": out / "overlap.json"})


def cmd_distractors_rebuild(args) -> None:
    started = time.perf_counter()
    dataset = load_dataset(args.dataset)
    sets = {d.question_id: d for d in dis.load_distractor_sets(args.sets)}
    corpus = _corpus_paragraphs(args.corpus)
    rebuilt = []
    for example in dataset:
        dset = sets.get(example.id)
        if dset is None:
            print(f"warning: no distractor set for {example.id}, keeping original context",
                  file=sys.stderr)
            rebuilt.append(example)
            continue
        rebuilt.append(dis.rebuild_example(example, dset, corpus, seed=args.seed))
    out = _out_dir(args)
    path = out / "rebuilt_dataset.json"
    save_dataset(rebuilt, path)
    print(f"wrote {len(rebuilt)} rebuilt examples to {path}")
    _write_manifest(args, started,
                    {"dataset": args.dataset, "sets": args.sets, "corpus": args.corpus},
                    {"dataset": path})


def cmd_categorize(args) -> None:
    started = time.perf_counter()
    dataset = load_dataset(args.dataset)
    annotations = load_entity_annotations(args.entities) if args.entities else None
    predictions = load_predictions(args.predictions) if args.predictions else None
    report = categorize_dataset(dataset, annotations, predictions)
    out = _out_dir(args)
    _write_json(report.as_dict(), out / "categories.json")
    fractions = " ".join(f"{k}={v:.3f}" for k, v in sorted(report.fractions_all.items()))
    print(f"categorized {len(report.rows)} comparison questions "
          f"({report.bridge_skipped} bridge skipped): {fractions}")
    _write_manifest(args, started, {"dataset": args.dataset},
                    {"categories": out / "categories.json"})


def cmd_reduce(args) -> None:
    started = time.perf_counter()
    if args.question is not None:
        print(reduce_question(args.question))
        return
    if args.out is None:
        raise UsageError("--out is required when reducing a dataset")
    dataset = load_dataset(args.dataset)
    reduced = {ex.id: reduce_question(ex.question) for ex in dataset}
    out = _out_dir(args)
    _write_json(reduced, out / "reduced.json")
    print(f"reduced {len(reduced)} questions")
    _write_manifest(args, started, {"dataset": args.dataset}, {"reduced": out / "reduced.json"})


def cmd_study_create(args) -> None:
    started = time.perf_counter()
    dataset = load_dataset(args.dataset)
    study = study_mod.create_study(dataset, args.sample_size, args.seed)
    out = _out_dir(args)
    path = out / "study.json"
    study_mod.save_study(study, path)
    print(f"created study {study.study_id} with {len(study.question_ids)} questions")
    _write_manifest(args, started, {"dataset": args.dataset}, {"study": path})


def _study_service(args) -> study_mod.StudyService:
    dataset = load_dataset(args.dataset)
    study = study_mod.load_study(args.study)
    return study_mod.StudyService(study, dataset, RecordStore(args.store))


def cmd_study_serve(args) -> None:
    import uvicorn

    from hopcheck.service import create_app

    service = _study_service(args)
    app = create_app(service, ui_dir=args.ui)
    print(f"serving study {service.study.study_id} on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def cmd_study_results(args) -> None:
    started = time.perf_counter()
    service = _study_service(args)
    results = service.results()
    out = _out_dir(args)
    _write_json(results, out / "study_results.json")
    for condition, report in results.items():
        print(f"{condition}: f1={report['f1']:.4f} em={report['em']:.4f} "
              f"({report['submissions']} submissions)")
    _write_manifest(args, started,
                    {"dataset": args.dataset, "study": args.study, "store": args.store},
                    {"results": out / "study_results.json"})


def cmd_scores_import(args) -> None:
    started = time.perf_counter()
    scores = load_external_scores(args.input)
    out = _out_dir(args)
    path = out / "scores.jsonl"
    save_external_scores(scores, path)
    print(f"imported {len(scores)} score records to {path}")
    _write_manifest(args, started, {"input": args.input}, {"scores": path})


# Parser ---------------------------------------------------------------------

def _add_common(parser, out_required=True) -> None:
    parser.add_argument("--out", type=Path, required=out_required,
                        help="output directory for artifacts and the run manifest")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"seed for all randomness (default: {DEFAULT_SEED})")
    parser.add_argument("--threads", type=int, default=_default_threads(),
                        help="worker-thread cap; results are thread-count independent "
                             "(default: HOPCHECK_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hopcheck",
        description="Diagnostics toolkit for multi-hop reading-comprehension datasets.",
    )
    parser.add_argument("--version", action="version", version=hopcheck.__version__)
    top = parser.add_subparsers(dest="command", required=True)

    # index
    index = top.add_parser("index", help="build and query the TF-IDF inverted index")
    index_sub = index.add_subparsers(dest="action", required=True)
    p = index_sub.add_parser("build", help="build an index from a JSONL corpus")
    p.add_argument("--corpus", type=Path, required=True, help="JSONL corpus of {doc_id, title, text}")
    p.add_argument("--num-bins", type=int, default=DEFAULT_NUM_BINS,
                   help="hash-bin count for the feature space (default: 2^24)")
    _add_common(p)
    p.set_defaults(func=cmd_index_build, subcommand="index build")
    p = index_sub.add_parser("query", help="rank documents for a query")
    p.add_argument("--index", type=Path, required=True, help="index file from `index build`")
    p.add_argument("--query", required=True, help="query text")
    p.add_argument("--k", type=int, default=10, help="number of results (default: 10)")
    _add_common(p, out_required=False)
    p.set_defaults(func=cmd_index_query, subcommand="index query")

    # eval
    evaluate = top.add_parser("eval", help="run answer-selection evaluations")
    eval_sub = evaluate.add_subparsers(dest="action", required=True)
    p = eval_sub.add_parser("distractor", help="evaluate over each example's provided context")
    p.add_argument("--dataset", type=Path, required=True, help="dataset file")
    _add_scorer_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_eval_distractor, subcommand="eval distractor")
    p = eval_sub.add_parser("open", help="evaluate with retrieved paragraphs")
    p.add_argument("--dataset", type=Path, required=True, help="dataset file")
    p.add_argument("--index", type=Path, required=True, help="index file")
    p.add_argument("--corpus", type=Path, required=True, help="JSONL corpus backing the index")
    p.add_argument("--k", type=int, choices=(10, 30, 500), default=10,
                   help="paragraphs to retrieve per question (default: 10)")
    p.add_argument("--inject-gold", action="store_true",
                   help="append missing gold paragraphs to the retrieved set")
    _add_scorer_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_eval_open, subcommand="eval open")

    # distractors
    d = top.add_parser("distractors", help="candidate pools and distractor selection")
    d_sub = d.add_subparsers(dest="action", required=True)
    p = d_sub.add_parser("pool", help="top-n candidate pools, golds excluded")
    p.add_argument("--dataset", type=Path, required=True, help="dataset file")
    p.add_argument("--index", type=Path, required=True, help="index file")
    p.add_argument("--corpus", type=Path, required=True, help="JSONL corpus backing the index")
    p.add_argument("--n", type=int, default=dis.DEFAULT_POOL_SIZE,
                   help="pool size (default: 50)")
    _add_common(p)
    p.set_defaults(func=cmd_distractors_pool, subcommand="distractors pool")
    p = d_sub.add_parser("adversarial", help="pick the lowest-y_empty candidates")
    p.add_argument("--dataset", type=Path, required=True, help="dataset file")
    p.add_argument("--index", type=Path, required=True, help="index file")
    p.add_argument("--corpus", type=Path, required=True, help="JSONL corpus backing the index")
    p.add_argument("--n", type=int, default=dis.DEFAULT_POOL_SIZE, help="pool size (default: 50)")
    p.add_argument("--m", type=int, default=dis.DEFAULT_DISTRACTOR_COUNT,
                   help="distractors per question (default: 8)")
    _add_scorer_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_distractors_adversarial, subcommand="distractors adversarial")
    p = d_sub.add_parser("typed", help="adversarial pick restricted to gold entity types")
    p.add_argument("--dataset", type=Path, required=True, help="dataset file")
    p.add_argument("--index", type=Path, required=True, help="index file")
    p.add_argument("--corpus", type=Path, required=True, help="JSONL corpus backing the index")
    p.add_argument("--annotations", type=Path, default=None,
                   help="JSONL entity annotations {paragraph_key, entity_type}; "
                        "defaults to the naive keyword tagger")
    p.add_argument("--n", type=int, default=dis.DEFAULT_POOL_SIZE, help="pool size (default: 50)")
    p.add_argument("--m", type=int, default=dis.DEFAULT_DISTRACTOR_COUNT,
                   help="distractors per question (default: 8)")
    _add_scorer_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_distractors_typed, subcommand="distractors typed")
    p = d_sub.add_parser("overlap", help="Jaccard overlap between two distractor-set files")
    p.add_argument("--a", type=Path, required=True, help="first distractor-set file")
    p.add_argument("--b", type=Path, required=True, help="second distractor-set file")
    _add_common(p)
    p.set_defaults(func=cmd_distractors_overlap, subcommand="distractors overlap")
    p = d_sub.add_parser("rebuild", help="rebuild a dataset with new distractors")
    p.add_argument("--dataset", type=Path, required=True, help="dataset file")
    p.add_argument("--sets", type=Path, required=True, help="distractor-set file")
    p.add_argument("--corpus", type=Path, required=True, help="JSONL corpus with distractor texts")
    _add_common(p)
    p.set_defaults(func=cmd_distractors_rebuild, subcommand="distractors rebuild")

    # categorize
    p = top.add_parser("categorize", help="categorize comparison questions")
    p.add_argument("--dataset", type=Path, required=True, help="dataset file")
    p.add_argument("--entities", type=Path, default=None,
                   help="JSONL entity annotations {question_id, entity1, entity2}")
    p.add_argument("--predictions", type=Path, default=None,
                   help="predictions file for per-category answer metrics")
    _add_common(p)
    p.set_defaults(func=cmd_categorize, subcommand="categorize")

    # reduce
    p = top.add_parser("reduce", help="truncate questions to five tokens from the wh-word")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--dataset", type=Path, help="dataset file to reduce")
    group.add_argument("--question", help="single question to reduce and print")
    _add_common(p, out_required=False)
    p.set_defaults(func=cmd_reduce, subcommand="reduce")

    # study
    study = top.add_parser("study", help="single-hop human study")
    study_sub = study.add_subparsers(dest="action", required=True)
    p = study_sub.add_parser("create", help="sample a study from bridge questions")
    p.add_argument("--dataset", type=Path, required=True, help="dataset file")
    p.add_argument("--sample-size", type=int, required=True, help="questions to sample")
    _add_common(p)
    p.set_defaults(func=cmd_study_create, subcommand="study create")
    p = study_sub.add_parser("serve", help="serve study tasks over HTTP")
    p.add_argument("--dataset", type=Path, required=True, help="dataset file")
    p.add_argument("--study", type=Path, required=True, help="study file from `study create`")
    p.add_argument("--store", type=Path, required=True, help="submission record store path")
    p.add_argument("--host", default="127.0.0.1", help="bind host (default: 127.0.0.1)")
    p.add_argument("--port", type=int, default=8750, help="bind port (default: 8750)")
    p.add_argument("--ui", default=None, help="static directory with the annotation frontend")
    p.set_defaults(func=cmd_study_serve, subcommand="study serve")
    p = study_sub.add_parser("results", help="score submissions per condition")
    p.add_argument("--dataset", type=Path, required=True, help="dataset file")
    p.add_argument("--study", type=Path, required=True, help="study file")
    p.add_argument("--store", type=Path, required=True, help="submission record store path")
    _add_common(p)
    p.set_defaults(func=cmd_study_results, subcommand="study results")

    # scores
    scores = top.add_parser("scores", help="external scorer outputs")
    scores_sub = scores.add_subparsers(dest="action", required=True)
    p = scores_sub.add_parser("import", help="validate and canonicalize a scores file")
    p.add_argument("--input", type=Path, required=True, help="raw scores JSONL")
    _add_common(p)
    p.set_defaults(func=cmd_scores_import, subcommand="scores import")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except KeyboardInterrupt:
        return 130
    except (UsageError, FileNotFoundError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
