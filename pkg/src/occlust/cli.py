"""Command-line entry point.

Verbs: validate, baseline, reduce-sweep, silhouette, metrics, report.
stdout carries human-readable progress, files carry the machine-readable
output, stderr carries errors (as a JSON list) only.
"""

import argparse
import csv
import json
import sys

from . import pipeline
from .corpus import load_corpus, major_group_labels, normalize_rows
from .exceptions import ContractError, OcclustError
from .metrics import (
    accuracy,
    adjusted_mutual_information,
    adjusted_rand_index,
    mutual_information,
    pair_confusion,
    youden,
)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="occlust",
        description="Occupation-embedding clustering study: baselines, "
        "reduction sweeps, silhouette pipelines and reports.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def config_verb(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-c", "--config", required=True, help="JSON config file")
        p.add_argument("--jobs", type=int, default=None, help="worker count (default: cores)")
        p.add_argument("--seed", type=int, default=None, help="override base_seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("overrides", nargs="*", metavar="key=value",
                       help="dotted config overrides, e.g. tsne.perplexity=30")
        return p

    config_verb("validate", "check corpora and config without running anything")
    config_verb("baseline", "pipeline 1 step 1: fixed-k clustering of raw embeddings")
    config_verb("reduce-sweep", "pipeline 1: baseline plus the reduction-dimension sweep")
    config_verb("silhouette", "pipeline 2: silhouette-selected cluster counts")

    m = sub.add_parser("metrics", help="score a (labels, ground-truth) CSV pair")
    m.add_argument("--pred", required=True, help="CSV of id,label predictions")
    m.add_argument("--truth", required=True, help="CSV of id,label ground truth")

    r = sub.add_parser("report", help="re-emit tables from stored results")
    r.add_argument("--results", required=True, help="results.csv from a previous run")
    r.add_argument("--out", default="out", help="output directory")
    return parser


def _settings(args):
    settings = pipeline.RunSettings.from_file(args.config, overrides=args.overrides)
    if args.seed is not None:
        settings.base_seed = args.seed
    if args.out is not None:
        settings.out_dir = args.out
    if args.jobs is not None:
        settings.jobs = args.jobs
    return settings


def _fail(errors):
    sys.stderr.write(json.dumps([{"error": str(e)} for e in errors]) + "\n")
    return 1


def cmd_validate(args):
    settings = _settings(args)
    errors = []
    for model_id in sorted(settings.corpora):
        path = settings.corpora[model_id]
        try:
            corpus = normalize_rows(load_corpus(path))
            truth = major_group_labels(corpus)
        except OcclustError as exc:
            errors.append(f"model {model_id}: {exc}")
            continue
        print(f"model {model_id}: n={corpus.n} m={corpus.m} classes={truth.n_classes} ({path})")
    if errors:
        return _fail(errors)
    print("config ok")
    return 0


def cmd_baseline(args):
    settings = _settings(args)
    model_data = pipeline.load_model_data(settings)
    if not model_data:
        return _fail(["no corpus could be loaded"])
    results = pipeline.run_baseline(settings, k_policy="fixed", model_data=model_data)
    rows = []
    for metric in pipeline.SELECTION_METRICS:
        best = pipeline.select_best(results, metric)
        rows.append(pipeline.BestModelRow(
            method=best.config.method, metric=metric, reduction="none",
            m1=best.m1, m2=best.m1,
            sigma1=best.mean(metric), sigma2=best.mean(metric),
        ))
        print(f"best by {metric}: {best.config.method} ({best.mean(metric):.4f})")
    paths = pipeline.emit_report(results, rows, settings.out_dir)
    print(f"wrote {paths['results']} and {paths['best_models']}")
    return 0


def cmd_reduce_sweep(args):
    settings = _settings(args)
    model_data = pipeline.load_model_data(settings)
    if not model_data:
        return _fail(["no corpus could be loaded"])
    baseline, sweep, best_rows, skipped = pipeline.run_fixed_pipeline(settings, model_data)
    paths = pipeline.emit_report(baseline + sweep, best_rows, settings.out_dir, skipped)
    print(f"{len(sweep)} sweep cells scored, {len(skipped)} skipped")
    print(f"wrote {paths['results']} and {paths['best_models']}")
    return 0


def cmd_silhouette(args):
    settings = _settings(args)
    model_data = pipeline.load_model_data(settings)
    if not model_data:
        return _fail(["no corpus could be loaded"])
    baseline, sweep, best_rows, skipped = pipeline.run_silhouette_pipeline(settings, model_data)
    paths = pipeline.emit_report(baseline + sweep, best_rows, settings.out_dir, skipped)
    print(f"{len(sweep)} sweep cells scored, {len(skipped)} skipped")
    print(f"wrote {paths['results']} and {paths['best_models']}")
    return 0


def _read_label_csv(path):
    labels = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.reader(handle):
            if not row:
                continue
            if [c.strip().lower() for c in row[:2]] == ["id", "label"]:
                continue
            if len(row) < 2:
                raise ContractError(f"{path}: expected two columns (id,label), got {row!r}")
            labels[row[0].strip()] = row[1].strip()
    if not labels:
        raise ContractError(f"{path}: no labeled rows")
    return labels


def _encode(values):
    codes = {}
    out = []
    for v in values:
        try:
            out.append(int(v))
            continue
        except ValueError:
            pass
        if v not in codes:
            codes[v] = len(codes)
        out.append(codes[v])
    return out


def cmd_metrics(args):
    pred_map = _read_label_csv(args.pred)
    truth_map = _read_label_csv(args.truth)
    if set(pred_map) != set(truth_map):
        raise ContractError("prediction and truth files label different ids")
    ids = sorted(pred_map)
    pred = _encode([pred_map[i] for i in ids])
    truth = _encode([truth_map[i] for i in ids])
    pc = pair_confusion(pred, truth)
    print(f"ac={accuracy(pc)}")
    print(f"ari={adjusted_rand_index(pred, truth)}")
    print(f"yi={youden(pc)}")
    print(f"mi={mutual_information(pred, truth)}")
    print(f"ami={adjusted_mutual_information(pred, truth)}")
    return 0


def cmd_report(args):
    import os

    rows = pipeline.read_results_csv(args.results)
    best = pipeline.best_rows_from_results(rows)
    os.makedirs(args.out, exist_ok=True)
    path = pipeline.write_best_models_csv(best, os.path.join(args.out, "best_models.csv"))
    print(f"wrote {path} ({len(best)} rows)")
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "baseline": cmd_baseline,
    "reduce-sweep": cmd_reduce_sweep,
    "silhouette": cmd_silhouette,
    "metrics": cmd_metrics,
    "report": cmd_report,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.verb](args)
    except OcclustError as exc:
        return _fail([exc])


if __name__ == "__main__":
    sys.exit(main())
