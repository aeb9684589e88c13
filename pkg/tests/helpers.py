"""Shared builders for the test suite."""

import numpy as np

from bibow.corpus import BagOfWords, SentencePair, Vocabulary
from bibow.model import BilingualModel


def make_vocab(prefix, n):
    return Vocabulary([f"{prefix}{i:03d}" for i in range(n)], [n - i for i in range(n)])


def random_model(vx_n, vy_n, dim, seed, h="tanh", scale=0.5):
    """Model with all parameter blocks randomized (decoders included)."""
    model = BilingualModel.initialize(
        make_vocab("x", vx_n), make_vocab("y", vy_n), dim,
        tree_seed_x=seed, tree_seed_y=seed + 1, init_seed=seed + 2, h=h,
    )
    r = np.random.default_rng(seed + 3)
    for arr in model.params().values():
        arr[...] = r.normal(0.0, scale, size=arr.shape)
    return model


def random_pair(rng, vx_n, vy_n, max_len=6, min_len=0):
    return SentencePair(
        BagOfWords(rng.integers(0, vx_n, size=int(rng.integers(min_len, max_len + 1)))),
        BagOfWords(rng.integers(0, vy_n, size=int(rng.integers(min_len, max_len + 1)))),
    )


def relative_gradient_errors(model, pair, dense, step=1e-5):
    """Central finite differences of pair_loss.total against `dense` gradients."""
    worst = 0.0
    for name, arr in model.params().items():
        if arr.size == 0:
            continue
        grad = dense[name]
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            orig = arr[ix]
            arr[ix] = orig + step
            up = model.pair_loss(pair).total
            arr[ix] = orig - step
            down = model.pair_loss(pair).total
            arr[ix] = orig
            fd = (up - down) / (2.0 * step)
            denom = max(abs(grad[ix]), abs(fd))
            if denom < 1e-10:
                assert abs(grad[ix] - fd) < 1e-8, (name, ix, grad[ix], fd)
            else:
                worst = max(worst, abs(grad[ix] - fd) / denom)
    return worst
