"""Acceptance suite: one test per numbered criterion, at its stated tolerance.

Each test prints a `[criterion N] ... PASS/FAIL` line (visible with -s or on
failure). Criteria 4, 5, and 6 share one end-to-end pipeline run on the
synthetic bilingual corpus, trained with the library defaults.
"""

import math
import time
from collections import Counter
from types import SimpleNamespace

import numpy as np
import pytest
from helpers import make_vocab, random_model, random_pair, relative_gradient_errors

from bibow import synth
from bibow.classifier import crosslingual_pipeline, nearest_neighbors
from bibow.corpus import BagOfWords, SentencePair, Vocabulary, build_vocab, tfidf, to_bag
from bibow.model import IDENTITY, TANH, BilingualModel
from bibow.trainer import TrainConfig, train

LN2 = math.log(2.0)


def _report(number, name, ok, detail):
    print(f"[criterion {number}] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {number} {name}: {detail}"


# --- shared end-to-end run (criteria 4, 5, 6) -------------------------------


@pytest.fixture(scope="module")
def pipeline():
    started = time.time()
    data = synth.generate(synth.SynthConfig())
    vocab_x = build_vocab(data.x_lines, min_count=1)
    vocab_y = build_vocab(data.y_lines, min_count=1)
    pairs = [
        SentencePair(to_bag(xl, vocab_x), to_bag(yl, vocab_y))
        for xl, yl in zip(data.x_lines, data.y_lines)
    ]
    config = TrainConfig()  # library defaults, dim 16
    model, report = train(pairs, vocab_x, vocab_y, config)
    result = crosslingual_pipeline(model, data.x_docs, data.y_docs, train_language="x")

    control_model = BilingualModel.initialize(
        vocab_x, vocab_y, config.dim,
        tree_seed_x=config.tree_seed_x, tree_seed_y=config.tree_seed_y,
        init_seed=1,  # untrained random embeddings; frozen from the seed scan
    )
    control = crosslingual_pipeline(control_model, data.x_docs, data.y_docs,
                                    train_language="x")
    return SimpleNamespace(
        data=data, vocab_x=vocab_x, vocab_y=vocab_y, pairs=pairs,
        model=model, report=report, result=result, control=control,
        seconds=time.time() - started,
    )


# --- criterion 1 --------------------------------------------------------------


def test_criterion_1_tree_softmax_normalization():
    worst = 0.0
    rng = np.random.default_rng(11)
    for v in (1, 2, 3, 5, 8, 100, 1024):
        for state in range(20):
            model = random_model(v, 3, dim=3, seed=1000 * v + state,
                                 h=TANH if state % 2 else IDENTITY)
            hidden = rng.normal(size=3)
            total = sum(math.exp(model.word_log_prob(w, hidden, "x")) for w in range(v))
            worst = max(worst, abs(total - 1.0))
    _report(1, "tree-softmax normalization", worst < 1e-6,
            f"max |sum - 1| = {worst:.3g} over V in {{1,2,3,5,8,100,1024}} x 20 states")


# --- criterion 2 --------------------------------------------------------------


def test_criterion_2_gradient_correctness():
    rng = np.random.default_rng(22)
    worst = 0.0
    for trial in range(20):
        vx_n, vy_n = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        dim = int(rng.integers(1, 6))
        model = random_model(vx_n, vy_n, dim, seed=2000 + trial,
                             h=TANH if trial % 2 else IDENTITY)
        pair = random_pair(rng, vx_n, vy_n)
        dense = model.pair_gradients(pair).dense(model)
        worst = max(worst, relative_gradient_errors(model, pair, dense, step=1e-5))
    _report(2, "gradients vs central finite differences", worst < 1e-4,
            f"max relative error {worst:.3g} over 20 random instances")


# --- criterion 3 --------------------------------------------------------------


def test_criterion_3_zero_initialization_loss_law():
    rng = np.random.default_rng(33)
    sizes = (2, 4, 7, 16)
    worst = 0.0
    for i in range(50):
        v = sizes[i % 4]
        model = BilingualModel.initialize(
            make_vocab("x", v), make_vocab("y", v), 4,
            tree_seed_x=i, tree_seed_y=i + 1, init_seed=i + 2,
            h=TANH if i % 2 else IDENTITY,
        )
        model.c[...] = rng.normal(size=4)  # decoders stay zero; W, c arbitrary
        bag = BagOfWords(rng.integers(0, v, size=int(rng.integers(0, 12))))
        enc = model.encode(BagOfWords(rng.integers(0, v, size=3)), "x")
        expected = sum(model.tree_x.depth(int(w)) for w in bag.indices) * LN2
        got = model.recon_loss(bag, "x", enc)
        worst = max(worst, abs(got - expected) / max(1.0, abs(expected)))
    _report(3, "zero-decoder loss law", worst < 1e-12,
            f"max relative deviation {worst:.3g} over 50 bags, V in {sizes}")


# --- criterion 4 --------------------------------------------------------------


def test_criterion_4_synthetic_crosslingual_transfer(pipeline):
    err = pipeline.result.test_error
    ctrl = pipeline.control.test_error
    ok = err <= 0.15 and ctrl >= 0.60
    _report(4, "cross-lingual transfer", ok,
            f"test error {err:.3f} (bound 0.15), random-embedding control "
            f"{ctrl:.3f} (bound 0.60), pipeline {pipeline.seconds:.0f}s")


# --- criterion 5 --------------------------------------------------------------


def test_criterion_5_translation_recovery(pipeline):
    hits = 0
    for i in range(30):  # vocab order is frequency order
        word = pipeline.vocab_x.words[i]
        top1 = nearest_neighbors(word, "x", "y", 1, pipeline.model)[0][0]
        hits += top1 == pipeline.data.truth[word]
    _report(5, "translation recovery", hits / 30 >= 0.80,
            f"top-1 recovers the renaming for {hits}/30 most frequent words")


# --- criterion 6 --------------------------------------------------------------


def test_criterion_6_trainer_effectiveness_and_early_stopping(pipeline):
    report = pipeline.report
    ratio = report.best_validation_loss / report.initial_validation_loss
    ok = ratio < 0.5 and report.best_validation_loss <= report.final_validation_loss
    _report(6, "trainer effectiveness", ok,
            f"best/initial validation loss {ratio:.3f} (bound 0.5); "
            f"best {report.best_validation_loss:.2f} <= final {report.final_validation_loss:.2f}")


# --- criterion 7 --------------------------------------------------------------


def test_criterion_7_determinism(tmp_path):
    data = synth.generate(synth.SynthConfig(n_pairs=300, n_docs=10))
    vocab_x = build_vocab(data.x_lines, min_count=1)
    vocab_y = build_vocab(data.y_lines, min_count=1)
    pairs = [
        SentencePair(to_bag(xl, vocab_x), to_bag(yl, vocab_y))
        for xl, yl in zip(data.x_lines, data.y_lines)
    ]
    config = TrainConfig(dim=8, epochs_max=3, eval_every=100)
    model_a, _ = train(pairs, vocab_x, vocab_y, config)
    model_b, _ = train(pairs, vocab_x, vocab_y, config)
    model_a.save(tmp_path / "a.npz")
    model_b.save(tmp_path / "b.npz")
    identical = (tmp_path / "a.npz").read_bytes() == (tmp_path / "b.npz").read_bytes()

    loaded = BilingualModel.load(tmp_path / "a.npz")
    round_trip = all(
        np.array_equal(arr, loaded.params()[name]) and arr.dtype == loaded.params()[name].dtype
        for name, arr in model_a.params().items()
    )
    _report(7, "determinism", identical and round_trip,
            f"repeated training byte-identical: {identical}; "
            f"save/load bit-exact: {round_trip}")


# --- criterion 8 --------------------------------------------------------------


def test_criterion_8_tfidf_oracle_equivalence():
    vocab = Vocabulary(["a", "b", "c", "d", "e"], [9, 8, 7, 6, 5])
    raw = [
        (["a", "b", "a", "e"], "l0"),
        (["b", "c"], "l1"),
        (["c", "c", "d"], "l0"),
        (["a", "d", "d", "d"], "l1"),
        (["b", "e", "e"], "l0"),
    ]
    docset = tfidf(raw, vocab)

    # independent implementation of tf(w,d) * ln(N / df(w)), L1-normalized
    n = len(raw)
    df = Counter()
    for tokens, _ in raw:
        df.update({vocab.index[t] for t in tokens})
    worst = 0.0
    sums_ok = True
    for doc, (tokens, _) in zip(docset.documents, raw):
        tf = Counter(vocab.index[t] for t in tokens)
        weights = {i: c * math.log(n / df[i]) for i, c in tf.items()}
        total = sum(weights.values())
        weights = {i: w / total for i, w in weights.items() if w > 0}
        assert set(weights) == set(doc.weights)
        for i, w in weights.items():
            worst = max(worst, abs(doc.weights[i] - w))
        if not doc.degenerate:
            sums_ok &= abs(sum(doc.weights.values()) - 1.0) < 1e-9
    _report(8, "TF-IDF oracle equivalence", worst < 1e-12 and sums_ok,
            f"max |weight - oracle| = {worst:.3g}; all documents sum to 1: {sums_ok}")


# --- criterion 9 --------------------------------------------------------------


def test_criterion_9_decoder_touch_complexity():
    rng = np.random.default_rng(99)
    ok = True
    worst = ""
    for trial in range(100):
        v = int(rng.integers(2, 80))
        model = random_model(v, 3, dim=3, seed=9000 + trial)
        bag = BagOfWords(rng.integers(0, v, size=int(rng.integers(0, 20))))
        enc = model.encode(bag, "x")
        counter = [0]
        model.recon_loss(bag, "x", enc, touch_counter=counter)
        bound = len(bag) * math.ceil(math.log2(v))
        if counter[0] > bound:
            ok = False
            worst = f"V={v}, |bag|={len(bag)}: {counter[0]} touches > {bound}"
    _report(9, "decoder touches within |bag| * ceil(log2 V)", ok,
            worst or "100 random bags within bound")
