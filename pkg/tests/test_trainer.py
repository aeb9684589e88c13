import numpy as np
import pytest
from helpers import make_vocab, random_pair

from bibow.corpus import BagOfWords, SentencePair
from bibow.model import BilingualModel
from bibow.trainer import TrainConfig, TrainingDivergedError, train


def small_corpus(n_pairs=60, vx_n=10, vy_n=8, seed=0):
    rng = np.random.default_rng(seed)
    vocab_x, vocab_y = make_vocab("x", vx_n), make_vocab("y", vy_n)
    pairs = [random_pair(rng, vx_n, vy_n, max_len=6, min_len=1) for _ in range(n_pairs)]
    return pairs, vocab_x, vocab_y


def test_epochs_zero_returns_initialization():
    pairs, vx, vy = small_corpus()
    cfg = TrainConfig(dim=4, epochs_max=0)
    model, report = train(pairs, vx, vy, cfg)
    fresh = BilingualModel.initialize(
        vx, vy, 4, tree_seed_x=cfg.tree_seed_x, tree_seed_y=cfg.tree_seed_y,
        init_seed=cfg.init_seed, h=cfg.h, init_scale=cfg.init_scale,
    )
    for name, arr in model.params().items():
        assert np.array_equal(arr, fresh.params()[name])
    assert report.evaluations == []
    assert report.best_validation_loss is None
    assert report.stopped_reason == "epochs_max"


def test_single_repeated_pair_loss_decreases():
    # 200 steps of SGD on one fixed pair: its own loss is non-increasing on
    # nearly every step and strictly lower at the end
    vocab_x, vocab_y = make_vocab("x", 6), make_vocab("y", 5)
    pair = SentencePair(BagOfWords([0, 2, 4]), BagOfWords([1, 3]))
    cfg = TrainConfig(
        dim=4, learning_rate=0.1, epochs_max=200, eval_every=1,
        patience=10**9, validation_pairs=[pair],
    )
    model, report = train([pair], vocab_x, vocab_y, cfg)
    losses = [ev.valid_loss for ev in report.evaluations]
    assert len(losses) == 201  # baseline + one per step
    increases = sum(1 for a, b in zip(losses, losses[1:]) if b > a + 1e-8)
    assert increases <= 0.05 * (len(losses) - 1)
    assert losses[-1] < losses[0]
    assert report.best_validation_loss <= report.final_validation_loss


def test_determinism_bit_identical():
    pairs, vx, vy = small_corpus()
    cfg = TrainConfig(dim=4, epochs_max=3, eval_every=20)
    m1, r1 = train(pairs, vx, vy, cfg)
    m2, r2 = train(pairs, vx, vy, cfg)
    for name, arr in m1.params().items():
        assert np.array_equal(arr, m2.params()[name]), name
    assert [e.valid_loss for e in r1.evaluations] == [e.valid_loss for e in r2.evaluations]


def test_returned_model_is_best_snapshot():
    pairs, vx, vy = small_corpus(n_pairs=80)
    cfg = TrainConfig(dim=4, epochs_max=4, eval_every=25, patience=10**9)
    model, report = train(pairs, vx, vy, cfg)
    assert report.best_validation_loss == min(e.valid_loss for e in report.evaluations)
    assert report.best_validation_loss <= report.final_validation_loss
    # the returned parameters reproduce the best validation loss exactly
    from bibow.trainer import _PairData, _evaluate

    valid = pairs[-4:]  # default 5% of 80
    data = [_PairData(p, model.tree_x, model.tree_y) for p in valid]
    loss, _ = _evaluate(model, data, np.ones(4), np.zeros(4))
    assert loss == report.best_validation_loss


def test_explicit_validation_pairs_and_split_requirements():
    pairs, vx, vy = small_corpus(n_pairs=10)
    cfg = TrainConfig(dim=3, epochs_max=1, validation_pairs=pairs[:2])
    model, report = train(pairs[2:], vx, vy, cfg)
    assert len(report.evaluations) >= 1

    with pytest.raises(ValueError, match="at least 1 training and 1 validation"):
        train([], vx, vy, TrainConfig(dim=3, epochs_max=1))


def test_config_validation():
    with pytest.raises(ValueError, match="learning_rate"):
        TrainConfig(learning_rate=0.0).validate()
    with pytest.raises(ValueError, match="patience"):
        TrainConfig(patience=0).validate()
    with pytest.raises(ValueError, match="task_weights"):
        TrainConfig(task_weights=(0, 0, 0, 0)).validate()
    with pytest.raises(ValueError, match="task_weights"):
        TrainConfig(task_weights=(1, 1, 1)).validate()
    with pytest.raises(ValueError, match="validation_fraction"):
        TrainConfig(validation_fraction=1.5).validate()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # overflow is the point
def test_divergence_aborts_with_diagnostics():
    pairs, vx, vy = small_corpus(n_pairs=30)
    cfg = TrainConfig(dim=4, h="identity", learning_rate=1e120, epochs_max=5,
                      eval_every=1000)
    with pytest.raises(TrainingDivergedError, match="non-finite"):
        train(pairs, vx, vy, cfg)


def test_training_log_format(tmp_path):
    pairs, vx, vy = small_corpus(n_pairs=40)
    log_path = tmp_path / "train_log.tsv"
    cfg = TrainConfig(dim=3, epochs_max=2, eval_every=19)
    _, report = train(pairs, vx, vy, cfg, log_path=log_path)
    lines = log_path.read_text().splitlines()
    assert lines[0] == "pairs_seen\ttrain_loss\tvalid_loss\tl_xx\tl_yy\tl_xy\tl_yx"
    assert len(lines) == 1 + len(report.evaluations)
    for line, ev in zip(lines[1:], report.evaluations):
        cells = line.split("\t")
        assert len(cells) == 7
        assert int(cells[0]) == ev.pairs_seen
        assert float(cells[2]) == pytest.approx(ev.valid_loss, rel=1e-9)


def test_checkpoints_written_at_improvements(tmp_path):
    pairs, vx, vy = small_corpus(n_pairs=40)
    ckpt_dir = tmp_path / "ckpts"
    cfg = TrainConfig(dim=3, epochs_max=2, eval_every=19)
    _, report = train(pairs, vx, vy, cfg, checkpoint_dir=ckpt_dir)
    files = sorted(p.name for p in ckpt_dir.iterdir())
    assert files, "no checkpoints written"
    assert all(name.startswith("ckpt_") and name.endswith(".npz") for name in files)
    # the final checkpoint on disk is the best snapshot
    best = BilingualModel.load(ckpt_dir / f"ckpt_{report.best_pairs_seen:09d}.npz")
    assert best.vocab_x.size == 10


def test_final_evaluation_always_present():
    pairs, vx, vy = small_corpus(n_pairs=30)
    # eval_every larger than the run: only baseline + forced final evaluation
    cfg = TrainConfig(dim=3, epochs_max=1, eval_every=10**6, patience=10**9)
    _, report = train(pairs, vx, vy, cfg)
    assert len(report.evaluations) == 2
    assert report.evaluations[0].pairs_seen == 0
    assert report.evaluations[-1].pairs_seen == len(pairs) - max(1, round(0.05 * len(pairs)))
    assert report.final_validation_loss == report.evaluations[-1].valid_loss
