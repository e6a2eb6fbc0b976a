"""Acceptance gate: nine end-to-end correctness criteria.

Each test prints a single [PASS]/[FAIL] line (directly to the terminal,
bypassing pytest capture) and enforces its own wall-clock budget.
"""

import re
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from sherlock.cli import cli
from sherlock.container import ModelBundle
from sherlock.corpus import Column, SplitSpec, save_corpus, split
from sherlock.evaluation import bootstrap_f1, evaluate, rejection_curve
from sherlock.features.chars import extract_char_features
from sherlock.features.paragraph import PVHyperparams, train_pvdbow
from sherlock.features.stats import extract_global_stats
from sherlock.features.words import load_word_vectors
from sherlock.match import build_dictionary, predict_dictionary
from sherlock.nn import SherlockNet, TrainingConfig, train_isolated, train_sherlock
from sherlock.pipeline import (N_FEATURES, build_schema, extract_matrix,
                               fit_imputer)
from sherlock.trees import (_gini_from_counts, feature_importances,
                            train_decision_tree, train_random_forest)

from oracles import char_features_oracle, global_stats_oracle, random_column_values
from synthdata import make_corpus, write_word_vectors

GOLDEN_NAMES = Path(__file__).parent / "data" / "schema_names.txt"

_CAPSYS = None


@pytest.fixture(autouse=True)
def _grab_capsys(capsys):
    global _CAPSYS
    _CAPSYS = capsys
    yield
    _CAPSYS = None


def _report(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f" — {detail}"
    if _CAPSYS is not None:
        with _CAPSYS.disabled():
            print(line, flush=True)
    else:
        print(line, file=sys.__stdout__, flush=True)
    assert ok, line


class Budget:
    def __init__(self, seconds: float):
        self.limit = seconds
        self.start = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def ok(self) -> bool:
        return self.elapsed <= self.limit


def test_c1_schema_exactness():
    budget = Budget(1.0)
    schema = build_schema()
    cats = list(schema.categories)
    counts_ok = (len(schema) == 1588 and cats.count("stats") == 27
                 and cats.count("chars") == 960 and cats.count("words") == 200
                 and cats.count("words_flag") == 1
                 and cats.count("paragraph") == 400)
    golden_ok = list(schema.names) == GOLDEN_NAMES.read_text().splitlines()
    unique_ok = len(set(schema.names)) == 1588
    ok = counts_ok and golden_ok and unique_ok and budget.ok()
    _report("criterion 1: feature schema (1,588 slots, golden names)", ok,
            f"{budget.elapsed:.2f}s")


def test_c2_feature_oracles():
    budget = Budget(60.0)
    rng = np.random.default_rng(2024)
    max_err = 0.0
    for _ in range(1000):
        values = tuple(random_column_values(rng))
        col = Column(values)
        got = np.concatenate([extract_global_stats(col),
                              extract_char_features(col)])
        want = np.array(global_stats_oracle(values)
                        + char_features_oracle(values))
        denom = np.maximum(np.abs(want), 1.0)
        max_err = max(max_err, float(np.max(np.abs(got - want) / denom)))
    ok = max_err < 1e-9 and budget.ok()
    _report("criterion 2: 1,000 fuzzed columns match brute-force oracles", ok,
            f"max rel err {max_err:.2e}, {budget.elapsed:.1f}s")


def test_c3_full_gradient_check():
    budget = Budget(300.0)
    # full four-subnet architecture at reduced widths so every parameter is
    # checkable inside the budget
    config = TrainingConfig(chars_hidden=6, words_hidden=6, paragraph_hidden=6,
                            primary_hidden=(8, 8), seed=3)
    net = SherlockNet(config)
    rng = np.random.default_rng(30)
    X = rng.normal(size=(10, N_FEATURES))
    y = rng.integers(0, 78, size=10)
    _, grads = net.loss_and_grads(X, y)
    step = 1e-5
    worst = 0.0
    n_checked = 0
    for p, g in zip(net.parameters(), grads):
        fp, fg = p.reshape(-1), g.reshape(-1)
        for j in range(fp.size):
            orig = fp[j]
            fp[j] = orig + step
            lp, _ = net.loss_and_grads(X, y)
            fp[j] = orig - step
            lm, _ = net.loss_and_grads(X, y)
            fp[j] = orig
            fd = (lp - lm) / (2 * step)
            # denominator floor: finite-difference round-off (~1e-10 here)
            # must not register as relative error on near-zero gradients
            worst = max(worst, abs(fd - fg[j]) / max(1e-5, abs(fd) + abs(fg[j])))
            n_checked += 1
    ok = worst < 1e-4 and budget.ok()
    _report("criterion 3: gradient check, every parameter of the joint net", ok,
            f"{n_checked} params, worst rel err {worst:.2e}, {budget.elapsed:.0f}s")


def test_c4_probabilities_and_determinism():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(60, N_FEATURES))
    y = rng.integers(0, 8, size=60)
    config = TrainingConfig(chars_hidden=8, words_hidden=8, paragraph_hidden=8,
                            primary_hidden=(12, 12), epochs=3, batch_size=32,
                            seed=4)

    nets = [train_sherlock(X, y, X[:20], y[:20], config) for _ in range(2)]
    probs = nets[0].predict_proba(X)
    softmax_ok = bool(np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)
                      and (probs >= 0).all())
    nn_ok = all(a.tobytes() == b.tobytes() for a, b in
                zip(nets[0].parameters(), nets[1].parameters()))

    trees = [train_decision_tree(X, y, n_classes=8) for _ in range(2)]
    tree_ok = (trees[0].feature.tobytes() == trees[1].feature.tobytes()
               and trees[0].threshold.tobytes() == trees[1].threshold.tobytes())
    forests = [train_random_forest(X, y, n_trees=4, n_classes=8, seed=1)
               for _ in range(2)]
    forest_ok = all(a.threshold.tobytes() == b.threshold.tobytes()
                    for a, b in zip(forests[0].trees, forests[1].trees))

    cols = [Column((f"v{i % 5}", f"v{(i + 1) % 5}", f"v{i % 3}"))
            for i in range(12)]
    pvs = [train_pvdbow(cols, PVHyperparams(dimension=16, epochs=4, seed=5))
           for _ in range(2)]
    pv_ok = (pvs[0].paragraph_vectors.tobytes() == pvs[1].paragraph_vectors.tobytes()
             and pvs[0].token_weights.tobytes() == pvs[1].token_weights.tobytes())

    ok = softmax_ok and nn_ok and tree_ok and forest_ok and pv_ok
    _report("criterion 4: softmax validity + bitwise training determinism", ok,
            f"nn={nn_ok} tree={tree_ok} forest={forest_ok} pv={pv_ok}")


def test_c5_tree_correctness():
    gini_ok = _gini_from_counts(np.array([2.0, 2.0]), 4) == 0.5

    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 10))
    y = (X[:, 3] > 0.2).astype(np.int64)
    tree = train_decision_tree(X, y, n_classes=2)
    acc = float((tree.predict(X) == y).mean())
    imp = feature_importances(tree)
    imp_ok = imp.max() == 1.0 and int(imp.argmax()) == 3

    ok = gini_ok and acc == 1.0 and imp_ok
    _report("criterion 5: CART correctness (gini, separable fit, importances)",
            ok, f"train acc {acc:.3f}, top importance feature {int(imp.argmax())}")


def test_c6_metrics_oracle():
    report = evaluate([0, 0, 1], [0, 1, 1])
    f1_ok = report.weighted_f1 == pytest.approx(2.0 / 3.0, abs=1e-15)

    rng = np.random.default_rng(6)
    truth = rng.integers(0, 6, size=50)
    pred = np.where(rng.uniform(size=50) < 0.7, truth, (truth + 1) % 6)
    probs = np.full((50, 78), 1e-4)
    for i, p in enumerate(pred):
        probs[i, p] = 1.0
    probs /= probs.sum(axis=1, keepdims=True)
    curve = rejection_curve(probs, truth, [0.5, 1.0])
    curve_ok = curve.points[-1][1] == pytest.approx(
        evaluate(pred, truth).weighted_f1, abs=1e-12)

    mean, _ = bootstrap_f1([0, 1], [0, 0], n_iterations=4000, seed=6)
    expected = 0.25 * 1.0 + 0.25 * 0.0 + 0.5 * (2.0 / 3.0)
    boot_ok = abs(mean - expected) < 0.01

    ok = f1_ok and curve_ok and boot_ok
    _report("criterion 6: metrics oracle (weighted F1, curve, bootstrap)", ok,
            f"bootstrap mean {mean:.4f} vs closed form {expected:.4f}")


@pytest.fixture(scope="module")
def synth_e2e(tmp_path_factory):
    """Shared artifacts for the end-to-end criteria: a noisy 8-type corpus,
    embeddings, splits, matrices and a trained paragraph-vector model."""
    root = tmp_path_factory.mktemp("e2e")
    corpus = make_corpus(600, seed=7, dirty_frac=0.10, overlap_frac=0.20)
    table = load_word_vectors(write_word_vectors(root / "vectors.txt"))
    train_c, val_c, test_c = split(corpus, SplitSpec((0.6, 0.2, 0.2), seed=7))
    pv = train_pvdbow(train_c, PVHyperparams(epochs=5, seed=7))
    Xtr, ytr = extract_matrix(train_c, table, pv, pv_seed=7)
    Xv, yv = extract_matrix(val_c, table, pv, pv_seed=7)
    Xte, yte = extract_matrix(test_c, table, pv, pv_seed=7)
    imputer = fit_imputer(Xtr)
    return {
        "root": root, "table": table, "pv": pv,
        "train_c": train_c, "test_c": test_c,
        "Xtr": imputer.apply(Xtr), "ytr": ytr,
        "Xv": imputer.apply(Xv), "yv": yv,
        "Xte": imputer.apply(Xte), "yte": yte,
    }


def test_c7_end_to_end_f1(synth_e2e):
    budget = Budget(600.0)
    e = synth_e2e
    config = TrainingConfig(epochs=40, seed=7)
    net = train_sherlock(e["Xtr"], e["ytr"], e["Xv"], e["yv"], config)
    full_f1 = evaluate(net.predict(e["Xte"]), e["yte"]).weighted_f1

    _, stats_f1 = train_isolated("stats", e["Xtr"], e["ytr"], e["Xv"], e["yv"],
                                 config, test_X=e["Xte"], test_y=e["yte"])

    model = build_dictionary(e["train_c"])
    dict_preds = np.array([predict_dictionary(model, col, seed=7)
                           for col in e["test_c"]])
    dict_f1 = evaluate(dict_preds, e["test_c"].labels()).weighted_f1

    ok = (full_f1 >= 0.90 and full_f1 > stats_f1 and full_f1 > dict_f1
          and budget.ok())
    _report("criterion 7: end-to-end F1 on noisy 8-type corpus", ok,
            f"full {full_f1:.3f} vs stats-only {stats_f1:.3f} "
            f"vs dictionary {dict_f1:.3f}, {budget.elapsed:.0f}s")


def test_c8_paragraph_vector_separation():
    rng = np.random.default_rng(8)
    pop_a = [f"alpha{i}" for i in range(12)]
    pop_b = [f"beta{i}" for i in range(12)]
    cols, labels = [], []
    for k in range(40):
        pop = pop_a if k % 2 == 0 else pop_b
        cols.append(Column(tuple(pop[rng.integers(0, len(pop))]
                                 for _ in range(12))))
        labels.append(k % 2)
    labels = np.array(labels)

    margins = []
    for seed in (1, 2, 3):
        model = train_pvdbow(cols, PVHyperparams(epochs=20, seed=seed))
        P = model.paragraph_vectors
        P = P / np.linalg.norm(P, axis=1, keepdims=True)
        sim = P @ P.T
        np.fill_diagonal(sim, np.nan)
        intra = np.nanmean(sim[np.ix_(labels == 0, labels == 0)])
        inter = np.nanmean(sim[np.ix_(labels == 0, labels == 1)])
        margins.append(float(intra - inter))
    mean_margin = float(np.mean(margins))
    ok = mean_margin > 0 and model.paragraph_vectors.shape[1] == 400
    _report("criterion 8: paragraph vectors separate value populations", ok,
            f"mean intra-inter cosine margin {mean_margin:.4f} over 3 seeds")


def test_c9_persistence_and_reported_size(synth_e2e, tmp_path):
    e = synth_e2e
    bitwise_ok = True

    tiny = TrainingConfig(chars_hidden=8, words_hidden=8, paragraph_hidden=8,
                          primary_hidden=(12, 12), epochs=2, seed=9)
    net = train_sherlock(e["Xtr"][:200], e["ytr"][:200],
                         e["Xv"][:50], e["yv"][:50], tiny)
    tree = train_decision_tree(e["Xtr"][:200], e["ytr"][:200], max_depth=8)
    forest = train_random_forest(e["Xtr"][:200], e["ytr"][:200], n_trees=3,
                                 max_depth=6)
    for name, mt, model in (("nn", "nn", net), ("tree", "tree", tree),
                            ("forest", "forest", forest)):
        path = tmp_path / f"{name}.model"
        ModelBundle(mt, model).save(path)
        again = ModelBundle.load(path).model
        before = np.atleast_2d(model.predict_proba(e["Xte"][:50]))
        after = np.atleast_2d(again.predict_proba(e["Xte"][:50]))
        bitwise_ok &= before.tobytes() == after.tobytes()

    # benchmark must report exactly the on-disk container sizes
    root = e["root"]
    out_dir = root / "bench"
    for split_name, X, y in (("train", e["Xtr"][:300], e["ytr"][:300]),
                             ("val", e["Xv"][:80], e["yv"][:80]),
                             ("test", e["Xte"][:80], e["yte"][:80])):
        from sherlock.pipeline import save_matrix
        save_matrix(X, y, root / f"b_{split_name}.csv")
    save_corpus(e["train_c"], root / "b_train.jsonl")
    save_corpus(e["test_c"], root / "b_test.jsonl")
    result = CliRunner().invoke(cli, [
        "benchmark", "--train", str(root / "b_train.csv"),
        "--val", str(root / "b_val.csv"), "--test", str(root / "b_test.csv"),
        "--train-corpus", str(root / "b_train.jsonl"),
        "--test-corpus", str(root / "b_test.jsonl"),
        "--out-dir", str(out_dir), "--epochs", "2", "--seed", "9"],
        catch_exceptions=False)
    bench_ok = result.exit_code == 0
    size_ok = bench_ok
    if bench_ok:
        for line in result.output.splitlines():
            m = re.match(r"(\w+)\s+[\d.]+\s+[\d.]+\s+(\d+)$", line.strip())
            if m and (out_dir / f"{m.group(1)}.model").exists():
                size_ok &= int(m.group(2)) == \
                    (out_dir / f"{m.group(1)}.model").stat().st_size
    ok = bitwise_ok and bench_ok and size_ok
    _report("criterion 9: container round-trip + benchmark size reporting", ok,
            f"bitwise={bitwise_ok} benchmark_exit={result.exit_code} "
            f"sizes_match={size_ok}")
