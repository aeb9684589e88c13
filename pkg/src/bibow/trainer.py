"""Stochastic gradient descent over sentence pairs with early stopping.

One pair per step, constant learning rate; the four reconstruction tasks of a
pair are combined into a single update. Validation loss (the task-weighted
pair loss averaged over the held-out pairs) is evaluated every `eval_every`
pairs and once more after the final step; the snapshot with the best
validation loss is what `train` returns. Identical inputs give bit-identical
results on the same platform and kernel backend.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from bibow import kernels
from bibow.corpus import SentencePair, Vocabulary
from bibow.model import TANH, BilingualModel

logger = logging.getLogger(__name__)

# an evaluation counts as progress only if it beats the best by this much
REL_IMPROVEMENT = 1e-6

LOG_HEADER = "pairs_seen\ttrain_loss\tvalid_loss\tl_xx\tl_yy\tl_xy\tl_yx"


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    """Everything `train` needs besides the data.

    When `validation_pairs` is given, all of `pairs` are trained on and the
    explicit list is scored instead; otherwise the last `validation_fraction`
    of the pair list (before any shuffling) is held out.
    """

    dim: int = 16
    learning_rate: float = 0.02
    epochs_max: int = 50
    patience: int = 5
    validation_fraction: float = 0.05
    validation_pairs: list[SentencePair] | None = None
    shuffle_seed: int = 1235
    init_seed: int = 1234
    tree_seed_x: int = 1236
    tree_seed_y: int = 1237
    task_weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    eval_every: int = 1000
    h: str = TANH
    init_scale: float = 0.05

    def validate(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        if self.epochs_max < 0:
            raise ValueError("epochs_max must be >= 0")
        if len(self.task_weights) != 4 or any(w < 0 for w in self.task_weights):
            raise ValueError("task_weights must be 4 non-negative reals")
        if not any(self.task_weights):
            raise ValueError("task_weights must not all be zero")
        if self.validation_pairs is None and not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")


@dataclass
class EvalRecord:
    pairs_seen: int
    train_loss: float  # mean weighted loss since the previous evaluation
    valid_loss: float
    parts: np.ndarray  # mean unweighted [x->x, y->y, x->y, y->x] on validation


@dataclass
class TrainReport:
    evaluations: list[EvalRecord] = field(default_factory=list)
    best_validation_loss: float | None = None
    best_pairs_seen: int = 0
    final_validation_loss: float | None = None
    stopped_reason: str = ""

    @property
    def initial_validation_loss(self) -> float | None:
        return self.evaluations[0].valid_loss if self.evaluations else None


class _PairData:
    """Kernel-ready arrays for one pair: sorted indices + concatenated paths."""

    __slots__ = ("x_idx", "y_idx", "x_nodes", "x_bits", "y_nodes", "y_bits")

    def __init__(self, pair: SentencePair, tree_x, tree_y):
        self.x_idx = np.ascontiguousarray(np.sort(pair.source.indices), dtype=np.int32)
        self.y_idx = np.ascontiguousarray(np.sort(pair.target.indices), dtype=np.int32)
        self.x_nodes, self.x_bits = tree_x.paths_for_bag(self.x_idx)
        self.y_nodes, self.y_bits = tree_y.paths_for_bag(self.y_idx)


def _split_pairs(pairs, config):
    if config.validation_pairs is not None:
        return list(pairs), list(config.validation_pairs)
    n = len(pairs)
    n_valid = max(1, int(round(config.validation_fraction * n)))
    return list(pairs[:n - n_valid]), list(pairs[n - n_valid:])


def _evaluate(model, valid_data, weights, parts_buf):
    use_tanh = 1 if model.h == TANH else 0
    total = 0.0
    parts_sum = np.zeros(4)
    for pd in valid_data:
        kernels.score_pair(
            model.W_x, model.W_y, model.c, model.b_x, model.U_x, model.b_y, model.U_y,
            pd.x_idx, pd.y_idx, pd.x_nodes, pd.x_bits, pd.y_nodes, pd.y_bits,
            use_tanh, parts_buf,
        )
        total += float(weights @ parts_buf)
        parts_sum += parts_buf
    n = len(valid_data)
    return total / n, parts_sum / n


def train(
    pairs: list[SentencePair],
    vocab_x: Vocabulary,
    vocab_y: Vocabulary,
    config: TrainConfig,
    checkpoint_dir=None,
    log_path=None,
) -> tuple[BilingualModel, TrainReport]:
    """Run SGD and return (best-validation model, report)."""
    config.validate()
    train_pairs, valid_pairs = _split_pairs(pairs, config)
    if not train_pairs or not valid_pairs:
        raise ValueError(
            f"need at least 1 training and 1 validation pair after the split, "
            f"got {len(train_pairs)} / {len(valid_pairs)}"
        )

    model = BilingualModel.initialize(
        vocab_x, vocab_y, config.dim,
        tree_seed_x=config.tree_seed_x, tree_seed_y=config.tree_seed_y,
        init_seed=config.init_seed, h=config.h, init_scale=config.init_scale,
    )
    report = TrainReport(stopped_reason="epochs_max")
    if config.epochs_max == 0:
        return model, report

    if checkpoint_dir is not None:
        os.makedirs(checkpoint_dir, exist_ok=True)
    train_data = [_PairData(p, model.tree_x, model.tree_y) for p in train_pairs]
    valid_data = [_PairData(p, model.tree_x, model.tree_y) for p in valid_pairs]
    weights = np.asarray(config.task_weights, dtype=np.float64)
    use_tanh = 1 if model.h == TANH else 0
    lr = float(config.learning_rate)
    parts_buf = np.zeros(4)

    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    if log_fh:
        log_fh.write(LOG_HEADER + "\n")

    best = np.inf
    best_params = None
    best_pairs_seen = 0
    stale_evals = 0
    pairs_seen = 0
    window_sum = 0.0
    window_n = 0
    stop = False

    def run_eval(train_loss):
        nonlocal best, best_params, best_pairs_seen, stale_evals, stop
        bad = model.nonfinite_blocks()
        if bad:
            raise TrainingDivergedError(
                f"non-finite parameters in block(s) {', '.join(bad)} "
                f"after {pairs_seen} pairs"
            )
        valid_loss, parts = _evaluate(model, valid_data, weights, parts_buf)
        report.evaluations.append(EvalRecord(pairs_seen, train_loss, valid_loss, parts))
        if log_fh:
            cells = [str(pairs_seen), f"{train_loss:.10g}", f"{valid_loss:.10g}"]
            cells += [f"{p:.10g}" for p in parts]
            log_fh.write("\t".join(cells) + "\n")
            log_fh.flush()
        improved_enough = valid_loss < best * (1.0 - REL_IMPROVEMENT)
        if valid_loss < best:
            best = valid_loss
            best_params = model.copy_params()
            best_pairs_seen = pairs_seen
            if checkpoint_dir is not None:
                model.save(os.path.join(checkpoint_dir, f"ckpt_{pairs_seen:09d}.npz"))
        if improved_enough:
            stale_evals = 0
        else:
            stale_evals += 1
            if stale_evals >= config.patience:
                stop = True
        return valid_loss

    try:
        run_eval(float("nan"))  # baseline: the initialized model
        for epoch in range(config.epochs_max):
            order = np.random.default_rng(config.shuffle_seed + epoch).permutation(len(train_data))
            for i in order:
                pd = train_data[i]
                kernels.train_pair(
                    model.W_x, model.W_y, model.c, model.b_x, model.U_x, model.b_y, model.U_y,
                    pd.x_idx, pd.y_idx, pd.x_nodes, pd.x_bits, pd.y_nodes, pd.y_bits,
                    weights, lr, use_tanh, parts_buf,
                )
                wloss = float(weights @ parts_buf)
                if not np.isfinite(wloss):
                    bad = model.nonfinite_blocks()
                    raise TrainingDivergedError(
                        f"non-finite loss at training pair {i} (epoch {epoch})"
                        + (f"; non-finite parameter block(s): {', '.join(bad)}" if bad else "")
                    )
                pairs_seen += 1
                window_sum += wloss
                window_n += 1
                if pairs_seen % config.eval_every == 0:
                    run_eval(window_sum / window_n)
                    window_sum = 0.0
                    window_n = 0
                    if stop:
                        break
            if stop:
                report.stopped_reason = "patience"
                break
        if window_n > 0 or pairs_seen % config.eval_every != 0:
            # final iterate was not on an evaluation boundary
            run_eval(window_sum / window_n if window_n else float("nan"))
    finally:
        if log_fh:
            log_fh.close()

    report.final_validation_loss = report.evaluations[-1].valid_loss
    report.best_validation_loss = best
    report.best_pairs_seen = best_pairs_seen
    if best_params is not None:
        model.set_params(best_params)
    logger.info(
        "training stopped (%s) after %d pairs; best validation loss %.6g at %d pairs",
        report.stopped_reason, pairs_seen, best, best_pairs_seen,
    )
    return model, report
