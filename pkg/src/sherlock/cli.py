"""Command-line surface: ingest, features, train, predict, evaluate,
benchmark.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import numpy as np
import pandas as pd

from . import container as container_mod
from .container import ModelBundle, load_container, save_container
from .corpus import Column, Corpus, SplitSpec, filter_corpus, load_corpus, save_corpus, split
from .errors import DataError, SherlockError
from .evaluation import bootstrap_f1, evaluate, rejection_curve
from .features.paragraph import ParagraphVectorModel, PVHyperparams, train_pvdbow
from .features.words import load_word_vectors
from .match import ABSTAIN, RegexRuleSet, build_dictionary, predict_dictionary, predict_regex
from .nn import TrainingConfig, train_sherlock
from .pipeline import SCHEMA, assemble_features, extract_matrix, fit_imputer, load_matrix, save_matrix
from .semtypes import type_name
from .trees import feature_importances, train_decision_tree, train_random_forest


@click.group()
def cli() -> None:
    """Semantic column-type detection toolkit."""


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise click.UsageError("--ratios needs three comma-separated fractions")
    return (parts[0], parts[1], parts[2])


@cli.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False),
              help="Word-vector file used by the vocabulary-coverage filter.")
@click.option("--cap", default=15_000, show_default=True)
@click.option("--min-count", default=1_000, show_default=True)
@click.option("--coverage-threshold", default=0.15, show_default=True)
@click.option("--ratios", default="0.6,0.2,0.2", show_default=True)
@click.option("--seed", default=0, show_default=True)
def ingest(input_path, out_dir, embeddings, cap, min_count, coverage_threshold,
           ratios, seed):
    """Load a JSONL corpus, filter it, and write stratified splits."""
    corpus = load_corpus(input_path)
    vocab = load_word_vectors(embeddings) if embeddings else None
    filtered = filter_corpus(corpus, cap=cap, min_count=min_count,
                             coverage_threshold=coverage_threshold,
                             vocab=vocab, seed=seed)
    spec = SplitSpec(_parse_ratios(ratios), seed=seed)
    train_c, val_c, test_c = split(filtered, spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", train_c), ("val", val_c), ("test", test_c)):
        save_corpus(part, out / f"{name}.jsonl")
    click.echo(f"ingested {len(corpus)} columns -> {len(filtered)} after filtering "
               f"(train {len(train_c)} / val {len(val_c)} / test {len(test_c)})")


def _load_pv(path: str) -> ParagraphVectorModel:
    meta, arrays = load_container(path)
    if "pv_vocab" not in meta:
        raise DataError(f"{path}: container carries no paragraph-vector model")
    return container_mod._unpack_pv(meta, arrays)


def _save_pv(pv: ParagraphVectorModel, path: str) -> None:
    meta: dict = {}
    arrays: dict = {}
    container_mod._pack_pv(pv, meta, arrays)
    save_container(path, "pv", meta, arrays)


@cli.command()
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--pv-model", type=click.Path(exists=True, dir_okay=False),
              help="Load a trained paragraph-vector model from a container.")
@click.option("--fit-pv", is_flag=True,
              help="Train the paragraph-vector model on this corpus.")
@click.option("--save-pv", type=click.Path(dir_okay=False))
@click.option("--pv-epochs", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
def features(corpus_path, embeddings, out_path, pv_model, fit_pv, save_pv,
             pv_epochs, seed):
    """Extract the 1,588-feature matrix for a corpus (CSV, label column last)."""
    if bool(pv_model) == bool(fit_pv):
        raise click.UsageError("pass exactly one of --pv-model or --fit-pv")
    corpus = load_corpus(corpus_path)
    table = load_word_vectors(embeddings)
    if fit_pv:
        pv = train_pvdbow(corpus, PVHyperparams(epochs=pv_epochs, seed=seed))
    else:
        pv = _load_pv(pv_model)
    if save_pv:
        _save_pv(pv, save_pv)
    X, y = extract_matrix(corpus, table, pv, pv_seed=seed)
    save_matrix(X, y, out_path)
    click.echo(f"wrote {X.shape[0]} x {X.shape[1]} feature matrix to {out_path}")


def _read_config_file(path: str) -> dict:
    """Flat key=value file mirroring the training configuration."""
    out: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


_CONFIG_FIELDS = {
    "learning_rate": float, "epochs": int, "batch_size": int, "dropout": float,
    "weight_decay": float, "patience": int, "seed": int,
}


def _build_training_config(config_file, seed, **flags) -> TrainingConfig:
    kwargs: dict = {}
    if config_file:
        raw = _read_config_file(config_file)
        for key, value in raw.items():
            if key not in _CONFIG_FIELDS:
                raise DataError(f"unknown config key {key!r}")
            kwargs[key] = _CONFIG_FIELDS[key](value)
    for key, value in flags.items():
        if value is not None:
            kwargs[key] = value
    if seed is not None:
        kwargs["seed"] = seed
    return TrainingConfig(**kwargs)


@cli.command()
@click.option("--model", "model_type", required=True,
              type=click.Choice(["nn", "tree", "forest", "dictionary", "regex"]))
@click.option("--train", "train_path", type=click.Path(exists=True, dir_okay=False),
              help="Training feature matrix CSV (nn/tree/forest).")
@click.option("--val", "val_path", type=click.Path(exists=True, dir_okay=False),
              help="Validation matrix CSV (nn).")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, dir_okay=False),
              help="Raw training corpus JSONL (dictionary).")
@click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON map of type name to regex pattern (regex).")
@click.option("--pv-model", type=click.Path(exists=True, dir_okay=False),
              help="Embed this paragraph-vector model for raw-column prediction.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--log", "log_path", type=click.Path(dir_okay=False),
              help="Per-epoch JSONL metrics log (nn).")
@click.option("--learning-rate", type=float)
@click.option("--epochs", type=int)
@click.option("--batch-size", type=int)
@click.option("--dropout", type=float)
@click.option("--weight-decay", type=float)
@click.option("--patience", type=int)
@click.option("--max-depth", default=50, show_default=True)
@click.option("--n-trees", default=10, show_default=True)
@click.option("--dict-k", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
def train(model_type, train_path, val_path, corpus_path, rules_path, pv_model,
          out_path, config_file, log_path, learning_rate, epochs, batch_size,
          dropout, weight_decay, patience, max_depth, n_trees, dict_k, seed):
    """Train a model and persist it as a container."""
    pv = _load_pv(pv_model) if pv_model else None

    if model_type in ("nn", "tree", "forest"):
        if not train_path:
            raise click.UsageError(f"--model {model_type} requires --train")
        X, y = load_matrix(train_path)
        if (y < 0).any():
            raise DataError("training matrix contains unlabeled rows")
        imputer = fit_imputer(X)
        X = imputer.apply(X)
        if model_type == "nn":
            if not val_path:
                raise click.UsageError("--model nn requires --val")
            Xv, yv = load_matrix(val_path)
            Xv = imputer.apply(Xv)
            config = _build_training_config(
                config_file, seed, learning_rate=learning_rate, epochs=epochs,
                batch_size=batch_size, dropout=dropout,
                weight_decay=weight_decay, patience=patience)
            log_fh = open(log_path, "w") if log_path else None
            try:
                net = train_sherlock(X, y, Xv, yv, config, log_file=log_fh)
            finally:
                if log_fh:
                    log_fh.close()
            bundle = ModelBundle("nn", net, imputer, pv)
        elif model_type == "tree":
            tree = train_decision_tree(X, y, max_depth=max_depth, seed=seed)
            bundle = ModelBundle("tree", tree, imputer, pv)
        else:
            forest = train_random_forest(X, y, n_trees=n_trees,
                                         max_depth=max_depth, seed=seed)
            bundle = ModelBundle("forest", forest, imputer, pv)
    elif model_type == "dictionary":
        if not corpus_path:
            raise click.UsageError("--model dictionary requires --corpus")
        bundle = ModelBundle("dictionary",
                             build_dictionary(load_corpus(corpus_path), k=dict_k))
    else:  # regex
        if not rules_path:
            raise click.UsageError("--model regex requires --rules")
        bundle = ModelBundle("regex", RegexRuleSet.load(rules_path))

    bundle.save(out_path)
    click.echo(f"saved {model_type} model to {out_path} "
               f"({Path(out_path).stat().st_size} bytes)")


def _columns_from_csv_table(path: str) -> tuple[list[str], list[Column]]:
    """Each CSV column becomes one Column: cells below the header row; the
    header itself is ignored for prediction."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    if df.shape[0] == 0:
        raise DataError(f"{path}: table has no data rows")
    names = [str(c) for c in df.columns]
    cols = [Column(tuple(df[c].tolist())) for c in df.columns]
    return names, cols


def _predict_columns(bundle: ModelBundle, columns: list[Column], table,
                     reject_below, seed: int):
    """Per-column (predicted label or None, confidence or None)."""
    results = []
    if bundle.model_type in ("dictionary", "regex"):
        for col in columns:
            if bundle.model_type == "dictionary":
                pred = predict_dictionary(bundle.model, col, seed=seed)
            else:
                pred = predict_regex(bundle.model, col, seed=seed)
            results.append((None if pred == ABSTAIN else pred, None))
        return results
    if bundle.pv is None:
        raise DataError("container has no paragraph-vector model; "
                        "cannot featurize raw columns")
    if bundle.imputer is None:
        raise DataError("container has no fitted imputer")
    if table is None:
        raise DataError("predicting on raw columns requires --embeddings")
    X = np.stack([assemble_features(c, table, bundle.pv, pv_seed=seed)
                  for c in columns])
    X = bundle.imputer.apply(X)
    probs = np.atleast_2d(bundle.model.predict_proba(X))
    for row in probs:
        pred = int(row.argmax())
        conf = float(row.max())
        if reject_below is not None and conf < reject_below:
            results.append((None, conf))
        else:
            results.append((pred, conf))
    return results


@cli.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Corpus JSONL or a raw CSV table.")
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False))
@click.option("--reject-below", type=float)
@click.option("--seed", default=0, show_default=True)
def predict(model_path, input_path, embeddings, reject_below, seed):
    """Predict a semantic type (plus confidence) for every column."""
    bundle = ModelBundle.load(model_path)
    table = load_word_vectors(embeddings) if embeddings else None
    if input_path.endswith(".csv"):
        names, columns = _columns_from_csv_table(input_path)
    else:
        corpus = load_corpus_lenient(input_path)
        names = [c.source_header or f"column_{i}" for i, c in enumerate(corpus)]
        columns = list(corpus)
    results = _predict_columns(bundle, columns, table, reject_below, seed)
    for name, (pred, conf) in zip(names, results):
        label = "rejected" if pred is None else type_name(pred)
        conf_str = "" if conf is None else f"\t{conf:.4f}"
        click.echo(f"{name}\t{label}{conf_str}")


def load_corpus_lenient(path: str) -> Corpus:
    """Corpus loading for prediction inputs: unlabeled lines are kept."""
    columns = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON line: {exc}") from exc
            values = obj.get("values")
            if not values:
                raise DataError(f"{path}:{lineno}: missing 'values'")
            columns.append(Column(tuple(str(v) for v in values),
                                  source_header=obj.get("header")))
    if not columns:
        raise DataError(f"{path}: empty corpus file")
    return Corpus(columns)


@cli.command("evaluate")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--matrix", "matrix_path", type=click.Path(exists=True, dir_okay=False),
              help="Imputable test feature matrix (nn/tree/forest).")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, dir_okay=False),
              help="Raw labeled test corpus (dictionary/regex).")
@click.option("--out", "out_path", type=click.Path(dir_okay=False))
@click.option("--curve-out", type=click.Path(dir_okay=False))
@click.option("--fractions", default="0.5,0.6,0.7,0.8,0.9,1.0", show_default=True)
@click.option("--bootstrap", "bootstrap_n", type=int, default=0,
              help="Also report a bootstrap mean/interval of weighted F1.")
@click.option("--seed", default=0, show_default=True)
def evaluate_cmd(model_path, matrix_path, corpus_path, out_path, curve_out,
                 fractions, bootstrap_n, seed):
    """Evaluate a trained container; emits a JSON report and optionally a
    rejection-curve CSV."""
    bundle = ModelBundle.load(model_path)
    probs = None
    if bundle.model_type in ("dictionary", "regex"):
        if not corpus_path:
            raise click.UsageError("matching models need --corpus")
        corpus = load_corpus(corpus_path)
        truths = corpus.labels()
        preds = []
        for col in corpus:
            if bundle.model_type == "dictionary":
                preds.append(predict_dictionary(bundle.model, col, seed=seed))
            else:
                preds.append(predict_regex(bundle.model, col, seed=seed))
        preds = np.array(preds)
    else:
        if not matrix_path:
            raise click.UsageError("ml models need --matrix")
        X, truths = load_matrix(matrix_path)
        if bundle.imputer is None:
            raise DataError("container has no fitted imputer")
        X = bundle.imputer.apply(X)
        probs = np.atleast_2d(bundle.model.predict_proba(X))
        preds = probs.argmax(axis=1)

    report = evaluate(preds, truths)
    report.model_size_bytes = Path(model_path).stat().st_size
    doc = report.to_dict()
    if bootstrap_n:
        mean, (lo, hi) = bootstrap_f1(preds, truths, bootstrap_n, seed=seed)
        doc["bootstrap_weighted_f1"] = {"mean": mean, "p2.5": lo, "p97.5": hi}
    if probs is not None and curve_out:
        fracs = [float(f) for f in fractions.split(",")]
        curve = rejection_curve(probs, truths, fracs)
        Path(curve_out).write_text(curve.to_csv())
    text = json.dumps(doc, indent=2)
    if out_path:
        Path(out_path).write_text(text)
    click.echo(f"weighted_f1\t{report.weighted_f1:.4f}")
    if out_path:
        click.echo(f"report written to {out_path}")


@cli.command()
@click.option("--train", "train_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--val", "val_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--test", "test_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--train-corpus", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--test-corpus", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False))
@click.option("--pv-model", type=click.Path(exists=True, dir_okay=False))
@click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--epochs", type=int)
@click.option("--seed", default=0, show_default=True)
def benchmark(train_path, val_path, test_path, train_corpus, test_corpus,
              embeddings, pv_model, rules_path, out_dir, epochs, seed):
    """Train every model and compare F1, runtime per sample, and size."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    Xtr, ytr = load_matrix(train_path)
    Xv, yv = load_matrix(val_path)
    Xte, yte = load_matrix(test_path)
    imputer = fit_imputer(Xtr)
    Xtr_i, Xv_i, Xte_i = imputer.apply(Xtr), imputer.apply(Xv), imputer.apply(Xte)
    tr_corpus = load_corpus(train_corpus)
    te_corpus = load_corpus(test_corpus)
    table = load_word_vectors(embeddings) if embeddings else None
    pv = _load_pv(pv_model) if pv_model else None

    config = TrainingConfig(seed=seed) if epochs is None else \
        TrainingConfig(seed=seed, epochs=epochs)

    rows = []

    def _measure(bundle: ModelBundle, name: str):
        path = out / f"{name}.model"
        bundle.save(path)
        size = path.stat().st_size
        start = time.perf_counter()
        results = _predict_columns(bundle, list(te_corpus), table, None, seed) \
            if (bundle.model_type in ("dictionary", "regex")
                or (table is not None and bundle.pv is not None)) else None
        if results is not None:
            preds = np.array([ABSTAIN if p is None else p for p, _ in results])
            runtime = (time.perf_counter() - start) / max(1, len(te_corpus))
        else:
            start = time.perf_counter()
            preds = bundle.model.predict(Xte_i)
            runtime = (time.perf_counter() - start) / max(1, Xte_i.shape[0])
        truths = te_corpus.labels() if results is not None else yte
        f1 = evaluate(preds, truths).weighted_f1
        rows.append((name, f1, runtime, size))

    net = train_sherlock(Xtr_i, ytr, Xv_i, yv, config)
    _measure(ModelBundle("nn", net, imputer, pv), "nn")
    tree = train_decision_tree(Xtr_i, ytr, seed=seed)
    _measure(ModelBundle("tree", tree, imputer, pv), "tree")
    forest = train_random_forest(Xtr_i, ytr, seed=seed)
    _measure(ModelBundle("forest", forest, imputer, pv), "forest")
    _measure(ModelBundle("dictionary", build_dictionary(tr_corpus)), "dictionary")
    if rules_path:
        _measure(ModelBundle("regex", RegexRuleSet.load(rules_path)), "regex")

    imp = feature_importances(tree)
    ranked = np.argsort(-imp)
    with (out / "tree_importances.csv").open("w") as fh:
        fh.write("rank,feature,score\n")
        for rank, fi in enumerate(ranked[:50], start=1):
            fh.write(f"{rank},{SCHEMA.names[fi]},{imp[fi]:.4f}\n")

    click.echo(f"{'model':<12}{'f1':>8}{'runtime_s':>12}{'size_bytes':>12}")
    for name, f1, runtime, size in rows:
        click.echo(f"{name:<12}{f1:>8.4f}{runtime:>12.6f}{size:>12}")


def main() -> None:
    try:
        cli.main(standalone_mode=False)
        sys.exit(0)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(1)
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(2)
    except SherlockError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    except Exception as exc:  # pragma: no cover
        click.echo(f"internal error: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
