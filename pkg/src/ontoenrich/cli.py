"""Command-line pipeline driver.

Subcommands mirror the pipeline stages: dataset, corpus, paths, train,
enrich, eval, calibrate, and a review service via serve. Every subcommand
is restart-safe: identical (seeded) inputs reproduce identical outputs.
Exit codes: 0 success, 1 usage, 2 data error, 3 upstream-service error.
"""

from __future__ import annotations

import argparse
import glob
import logging
import os
import sys

from . import __version__
from .config import RunConfig, load_run_config, make_provider
from .corpus import build_corpus, load_corpus, save_corpus
from .dataset import (
    CuratedDataset,
    apply_curation,
    build_raw_dataset,
    filter_none_pairs,
    load_dataset,
    save_dataset,
    split_holdout,
)
from .embeddings import BowCosineProvider, EmbeddingSimilarity
from .enrich import Thresholds, calibrate_thresholds, enrich, ingest
from .errors import ConfigError, EndpointError, MissingArtifactError, OntoEnrichError
from .evaluation import (
    knockout_gold_pairs,
    compute_metrics,
    load_answer_file,
    per_class_accuracy,
    precision_at_k,
    run_predictions,
    save_metrics_json,
)
from .labels import LabelKind, label_token
from .model import Hyperparams, classify_pair, load_model, save_model, train
from .ontology import load_ontology, save_changelog, save_ontology
from .parsing import LookupParser, iter_preparsed
from .paths import (
    collect_pair_paths,
    corpus_sentences,
    load_pair_paths,
    null_pair_paths,
    save_pair_paths,
)
from .queue import ReviewQueue, save_triples_tsv, save_triples_turtle
from .sparql import SparqlClient

logger = logging.getLogger(__name__)


def _require_artifact(path: str, producer: str) -> None:
    if not path or not os.path.exists(path):
        raise MissingArtifactError(path, producer)


def _require_input(path: str, description: str) -> None:
    if not path or not os.path.exists(path):
        raise ConfigError(f"{description} not found: {path!r}")


def _make_parser(config: RunConfig):
    if config["parser"] == "spacy":
        from .parsing import SpacyParserAdapter

        return SpacyParserAdapter()
    _require_input(config["preparsed"], "pre-parsed corpus file")
    return LookupParser.from_file(config["preparsed"])


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_dataset(config: RunConfig) -> int:
    _require_input(config["ontology"], "seed ontology")
    graph = load_ontology(config["ontology"], config["ontology_format"])
    client = SparqlClient(
        config["endpoint"], cache_dir=config["cache_dir"] or None
    )
    pairs, errors = build_raw_dataset(graph, client, parallelism=config["parallelism"])
    if errors:
        print(f"endpoint errors for {len(errors)} concept(s):", file=sys.stderr)
        for concept, message in sorted(errors.items()):
            print(f"  {concept}: {message}", file=sys.stderr)
    dataset = apply_curation(pairs, config["curation"] or None)
    dataset = filter_none_pairs(
        dataset,
        config["none_fraction"],
        EmbeddingSimilarity(make_provider(config)),
        config["none_strategy"],
    )
    save_dataset(dataset, config["output"])
    counts = {label_token(k): v for k, v in dataset.label_counts().items() if v}
    print(f"dataset: {len(dataset)} pairs -> {config['output']} {counts}")
    return 0


def cmd_corpus(config: RunConfig) -> int:
    _require_input(config["dump"], "wiki dump")
    _require_artifact(config["dataset"], "dataset")
    dataset = load_dataset(config["dataset"])
    terms = {p.a for p in dataset} | {p.b for p in dataset}
    if config["ontology"]:
        _require_input(config["ontology"], "seed ontology")
        terms |= load_ontology(config["ontology"], config["ontology_format"]).concept_labels()
    corpus = build_corpus(
        config["dump"],
        terms,
        config["anchor_title"],
        config["threshold"],
        BowCosineProvider(),
    )
    save_corpus(corpus, config["output_dir"])
    forced = sum(1 for e in corpus.manifest.values() if e.reason == "forced")
    print(
        f"corpus: {len(corpus.articles)} articles ({forced} forced) -> "
        f"{config['output_dir']}"
    )
    return 0


def cmd_paths(config: RunConfig) -> int:
    _require_artifact(config["corpus_dir"], "corpus")
    _require_artifact(config["dataset"], "dataset")
    dataset = load_dataset(config["dataset"])
    if config["parser"] == "spacy":
        from .parsing import SpacyParserAdapter

        sentences = corpus_sentences(load_corpus(config["corpus_dir"]), SpacyParserAdapter())
    else:
        _require_input(config["preparsed"], "pre-parsed corpus file")
        sentences = iter_preparsed(config["preparsed"])
    pair_paths = collect_pair_paths(sentences, dataset.pairs, config["max_path_len"])
    save_pair_paths(pair_paths, config["output"])
    with_paths = sum(1 for pp in pair_paths if not pp.is_null)
    print(
        f"paths: {len(pair_paths)} pairs ({with_paths} with corpus paths) -> "
        f"{config['output']}"
    )
    return 0


def _hyperparams_from(config: RunConfig) -> Hyperparams:
    return Hyperparams(
        hidden_dim=config["hidden_dim"],
        ffn_input_dim=config["ffn_input_dim"],
        num_layers=config["num_layers"],
        embedding_dropout=config["embedding_dropout"],
        hidden_dropout=config["hidden_dropout"],
        epochs=config["epochs"],
        learning_rate=config["learning_rate"],
        weight_decay=config["weight_decay"],
        seed=config["seed"],
        pos_dim=config["pos_dim"],
        dep_dim=config["dep_dim"],
        dir_dim=config["dir_dim"],
        normalize_context=config["normalize_context"],
    )


def cmd_train(config: RunConfig) -> int:
    _require_artifact(config["paths"], "paths")
    pair_paths = load_pair_paths(config["paths"])
    data = [(pp, pp.pair.label) for pp in pair_paths]
    if config["holdout_fraction"] > 0:
        dataset = CuratedDataset([pp.pair for pp in pair_paths])
        _train_set, test_set = split_holdout(
            dataset, config["holdout_fraction"], config["seed"]
        )
        test_keys = {p.key for p in test_set.pairs}
        data = [(pp, label) for pp, label in data if pp.pair.key not in test_keys]
        print(f"train: holding out {len(test_keys)} pairs")
    h = _hyperparams_from(config)
    model, report = train(data, h, make_provider(config))
    save_model(model, config["output"])
    final_loss = report.epoch_losses[-1] if report.epoch_losses else float("nan")
    print(
        f"train: {len(data)} pairs, {h.epochs} epochs, final loss {final_loss:.4f}, "
        f"train accuracy {report.final_accuracy:.3f} -> {config['output']}"
    )
    return 0


def cmd_enrich(config: RunConfig) -> int:
    _require_artifact(config["model"], "train")
    _require_input(config["ontology"], "seed ontology")
    sources: list[str] = []
    if config["page"]:
        sources.append(config["page"])
    if config["url_list"]:
        _require_input(config["url_list"], "URL list")
        with open(config["url_list"], encoding="utf-8") as fh:
            sources.extend(line.strip() for line in fh if line.strip())
    if not sources:
        raise ConfigError("enrich needs `page` or `url_list`")
    if config["mode"] == "review" and not config["queue_dir"]:
        raise ConfigError("review mode requires `queue_dir`")

    provider = make_provider(config)
    model = load_model(config["model"], provider)
    graph = load_ontology(config["ontology"], config["ontology_format"])
    parser = _make_parser(config)
    thresholds = Thresholds(
        domain_sim=config["threshold_domain"],
        pair_sim=config["threshold_pair"],
        sufficiency=config["threshold_sufficiency"],
    )
    queue = ReviewQueue(config["queue_dir"]) if config["queue_dir"] else None

    all_triples = []
    for source in sources:
        doc = ingest(source)
        triples = enrich(
            doc,
            model,
            graph,
            thresholds,
            config["mode"],
            parser,
            config["anchor_text"],
            max_path_len=config["max_path_len"],
            queue=queue,
            sufficiency_enabled=config["sufficiency"],
        )
        pair_count = len(doc.chunks) * (len(doc.chunks) - 1) // 2
        print(
            f"enrich: {source}: {len(doc.chunks)} chunks, {pair_count} pairs, "
            f"{len(triples)} candidate triple(s)"
        )
        all_triples.extend(triples)

    if config["output"]:
        save_triples_tsv(all_triples, config["output"])
    if config["turtle_output"]:
        save_triples_turtle(all_triples, config["turtle_output"])
    if config["mode"] == "auto":
        if config["ontology_output"]:
            save_ontology(graph, config["ontology_output"])
        if config["changelog_output"]:
            save_changelog(graph, config["changelog_output"])
        print(f"enrich: ontology at version {graph.version}")
    elif queue is not None:
        print(f"enrich: {len(queue.pending())} pending entries in {config['queue_dir']}")
    return 0


def _path_predictor(model, pair_paths_by_key):
    def predict(pair):
        pp = pair_paths_by_key.get(pair.key) or null_pair_paths(pair)
        probs = classify_pair(pair, pp, model)
        return probs.predicted, probs.confidence

    return predict


def cmd_eval(config: RunConfig) -> int:
    kind = config["kind"]
    if kind == "webpage":
        _require_input(config["answers_dir"], "answers directory")
        answer_files = sorted(glob.glob(os.path.join(config["answers_dir"], "*.tsv")))
        if not answer_files:
            raise ConfigError(f"no answer files in {config['answers_dir']}")
        ranked = [load_answer_file(path) for path in answer_files]
        scores = precision_at_k(ranked, config["ks"])
        for k, score in sorted(scores.items()):
            print(f"P@{k}: {score:.4f}")
        if config["output"]:
            import json

            with open(config["output"], "w", encoding="utf-8") as fh:
                json.dump({f"p@{k}": v for k, v in scores.items()}, fh, sort_keys=True)
        return 0

    _require_artifact(config["model"], "train")
    provider = make_provider(config)
    model = load_model(config["model"], provider)

    if kind == "holdout":
        _require_artifact(config["dataset"], "dataset")
        _require_artifact(config["paths"], "paths")
        dataset = load_dataset(config["dataset"])
        _train_set, test_set = split_holdout(dataset, config["fraction"], config["seed"])
        by_key = {pp.pair.key: pp for pp in load_pair_paths(config["paths"])}
        run = run_predictions(
            "holdout", test_set.pairs, _path_predictor(model, by_key)
        )
    else:  # knockout
        _require_input(config["ontology"], "seed ontology")
        _require_input(config["preparsed"], "pre-parsed corpus file")
        graph = load_ontology(config["ontology"], config["ontology_format"])
        dataset = load_dataset(config["dataset"]) if config["dataset"] else None
        pairs, _reduced = knockout_gold_pairs(
            graph, config["fraction"], config["seed"], dataset
        )
        collected = collect_pair_paths(
            iter_preparsed(config["preparsed"]), pairs, config["max_path_len"]
        )
        by_key = {pp.pair.key: pp for pp in collected}
        run = run_predictions("knockout", pairs, _path_predictor(model, by_key))

    metrics = compute_metrics(run)
    print(metrics.to_table())
    print()
    for label, value in per_class_accuracy(run).items():
        rendered = "undefined" if value is None else f"{value:.4f}"
        print(f"class accuracy {label_token(label)}: {rendered}")
    if config["output"]:
        save_metrics_json(metrics, config["output"])
    return 0


def cmd_calibrate(config: RunConfig) -> int:
    _require_input(config["labeled"], "labeled pairs file")
    labeled = []
    with open(config["labeled"], encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            a, b, keep = stripped.split("\t")
            labeled.append((a, b, keep == "1"))
    step = config["grid_step"]
    grid = [round(step * i, 4) for i in range(int(1 / step) + 1)]
    thresholds, accuracy = calibrate_thresholds(
        labeled, config["anchor_text"], make_provider(config), grid
    )
    print(
        f"calibrate: domain_sim {thresholds.domain_sim}, pair_sim "
        f"{thresholds.pair_sim} (accuracy {accuracy:.3f} on {len(labeled)} pairs)"
    )
    if config["output"]:
        import json

        with open(config["output"], "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "domain_sim": thresholds.domain_sim,
                    "pair_sim": thresholds.pair_sim,
                    "accuracy": accuracy,
                },
                fh,
                sort_keys=True,
            )
    return 0


def cmd_serve(config: RunConfig) -> int:
    import uvicorn

    from .service import build_app

    app = build_app(config)
    uvicorn.run(app, host=config["host"], port=config["port"], log_level="info")
    return 0


COMMANDS = {
    "dataset": cmd_dataset,
    "corpus": cmd_corpus,
    "paths": cmd_paths,
    "train": cmd_train,
    "enrich": cmd_enrich,
    "eval": cmd_eval,
    "calibrate": cmd_calibrate,
    "serve": cmd_serve,
}

#: command-line flag -> config key for the shared shortcuts
_FLAG_KEYS = {
    "seed": "seed",
    "endpoint": "endpoint",
    "output": "output",
    "mode": "mode",
    "port": "port",
    "threshold_domain": "threshold_domain",
    "threshold_pair": "threshold_pair",
}


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ontoenrich", description="ontology enrichment pipeline"
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", help="key = value config file")
        sub.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override any config key",
        )
        sub.add_argument("--seed")
        sub.add_argument("--endpoint")
        sub.add_argument("--output")
        sub.add_argument("--mode", choices=("auto", "review"))
        sub.add_argument("--port")
        sub.add_argument("--threshold-domain", dest="threshold_domain")
        sub.add_argument("--threshold-pair", dest="threshold_pair")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_arg_parser()
    args = parser.parse_args(argv)

    overrides: dict[str, str] = {}
    for item in args.set:
        if "=" not in item:
            parser.error(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = str(value)

    try:
        config = load_run_config(args.subcommand, args.config, overrides)
        return COMMANDS[args.subcommand](config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1 if not isinstance(exc, MissingArtifactError) else 2
    except EndpointError as exc:
        print(f"endpoint error: {exc}", file=sys.stderr)
        return 3
    except (OntoEnrichError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
