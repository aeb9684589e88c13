"""Bilingual bag-of-words autoencoder: encoders, tree decoders, losses, gradients.

A sentence bag is encoded as the sum of its word embedding columns; the
decoder scores each word of the reconstruction target through a chain of
left/right branching probabilities along the word's tree path, each branch
being a logistic regression on the nonlinearly transformed encoding. Both
languages share the hidden bias `c`; embeddings and decoder parameters are
language specific.

Everything in this module is straightforward reference NumPy; the fused
per-pair kernels used by the trainer live in `bibow.kernels` and are tested
against these functions.

Summation over a bag is canonicalized to ascending index order, so encoding
and losses are exactly invariant under any permutation of a bag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from bibow.code_tree import CodeTree, build_random_tree
from bibow.corpus import BagOfWords, SentencePair, Vocabulary

LANG_X = "x"
LANG_Y = "y"

TANH = "tanh"
IDENTITY = "identity"

CHECKPOINT_FORMAT_VERSION = 1

DEFAULT_INIT_SCALE = 0.05


def _sigmoid(a: float) -> float:
    if a >= 0.0:
        return 1.0 / (1.0 + math.exp(-a))
    ea = math.exp(a)
    return ea / (1.0 + ea)


def _softplus(a: float) -> float:
    # log(1 + e^a) without overflow on either tail
    if a > 0.0:
        return a + math.log1p(math.exp(-a))
    return math.log1p(math.exp(a))


def _check_language(language: str) -> str:
    if language not in (LANG_X, LANG_Y):
        raise ValueError(f"language must be {LANG_X!r} or {LANG_Y!r}, got {language!r}")
    return language


@dataclass
class EncodedSentence:
    """Sum-of-embeddings encoding and its nonlinear transform."""

    phi: np.ndarray
    hidden: np.ndarray
    language: str


class PairLoss(NamedTuple):
    total: float
    parts: np.ndarray  # [x->x, y->y, x->y, y->x]


@dataclass
class SparseRows:
    """Gradient rows actually touched by one pair; rows are sorted unique ids.

    For embedding matrices the ids are column indices and `values[j]` is the
    gradient of column `rows[j]`.
    """

    rows: np.ndarray
    values: np.ndarray


@dataclass
class PairGradients:
    """Exact analytic gradients of a (possibly weighted) pair loss."""

    w_x: SparseRows
    w_y: SparseRows
    c: np.ndarray
    b_x: SparseRows
    u_x: SparseRows
    b_y: SparseRows
    u_y: SparseRows

    def dense(self, model: "BilingualModel") -> dict[str, np.ndarray]:
        """Expand to full-size arrays keyed like `model.params()`."""
        out = {name: np.zeros_like(arr) for name, arr in model.params().items()}
        out["c"][:] = self.c
        for name, sparse in (("b_x", self.b_x), ("b_y", self.b_y),
                             ("U_x", self.u_x), ("U_y", self.u_y)):
            out[name][sparse.rows] = sparse.values
        for name, sparse in (("W_x", self.w_x), ("W_y", self.w_y)):
            out[name][:, sparse.rows] = sparse.values.T
        return out


class BilingualModel:
    """Embedding matrices, per-language tree decoders, and the shared bias.

    Parameters (all float64):
      W_x (D, V^x), W_y (D, V^y)   word embeddings, one column per word
      c   (D,)                     hidden bias shared across decode directions
      b_x (V^x-1,), U_x (V^x-1, D) decoder for language X
      b_y (V^y-1,), U_y (V^y-1, D) decoder for language Y
    """

    def __init__(self, vocab_x, vocab_y, dim, h, W_x, W_y, c, b_x, U_x, b_y, U_y,
                 tree_x: CodeTree, tree_y: CodeTree):
        if h not in (TANH, IDENTITY):
            raise ValueError(f"unknown nonlinearity {h!r}")
        self.vocab_x = vocab_x
        self.vocab_y = vocab_y
        self.dim = int(dim)
        self.h = h
        as_f64 = lambda a: np.ascontiguousarray(a, dtype=np.float64)
        self.W_x = as_f64(W_x)
        self.W_y = as_f64(W_y)
        self.c = as_f64(c)
        self.b_x = as_f64(b_x)
        self.U_x = as_f64(U_x)
        self.b_y = as_f64(b_y)
        self.U_y = as_f64(U_y)
        self.tree_x = tree_x
        self.tree_y = tree_y
        self._validate_shapes()

    def _validate_shapes(self):
        vx, vy, d = self.vocab_x.size, self.vocab_y.size, self.dim
        expected = {
            "W_x": (d, vx), "W_y": (d, vy), "c": (d,),
            "b_x": (vx - 1,), "U_x": (vx - 1, d),
            "b_y": (vy - 1,), "U_y": (vy - 1, d),
        }
        params = self.params()
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ValueError(f"{name} has shape {params[name].shape}, expected {shape}")
        if self.tree_x.V != vx or self.tree_y.V != vy:
            raise ValueError("tree size does not match vocabulary size")

    @classmethod
    def initialize(
        cls,
        vocab_x: Vocabulary,
        vocab_y: Vocabulary,
        dim: int,
        tree_seed_x: int,
        tree_seed_y: int,
        init_seed: int,
        h: str = TANH,
        init_scale: float = DEFAULT_INIT_SCALE,
    ) -> "BilingualModel":
        """Seeded start: uniform(-init_scale, init_scale) embeddings, zero decoders."""
        vx, vy = vocab_x.size, vocab_y.size
        rng = np.random.default_rng(init_seed)
        return cls(
            vocab_x, vocab_y, dim, h,
            W_x=rng.uniform(-init_scale, init_scale, size=(dim, vx)),
            W_y=rng.uniform(-init_scale, init_scale, size=(dim, vy)),
            c=np.zeros(dim),
            b_x=np.zeros(vx - 1),
            U_x=np.zeros((vx - 1, dim)),
            b_y=np.zeros(vy - 1),
            U_y=np.zeros((vy - 1, dim)),
            tree_x=build_random_tree(vx, tree_seed_x),
            tree_y=build_random_tree(vy, tree_seed_y),
        )

    # --- parameter access -------------------------------------------------

    def params(self) -> dict[str, np.ndarray]:
        return {
            "W_x": self.W_x, "W_y": self.W_y, "c": self.c,
            "b_x": self.b_x, "U_x": self.U_x, "b_y": self.b_y, "U_y": self.U_y,
        }

    def copy_params(self) -> dict[str, np.ndarray]:
        return {name: arr.copy() for name, arr in self.params().items()}

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        for name, arr in self.params().items():
            arr[...] = params[name]

    def nonfinite_blocks(self) -> list[str]:
        return [name for name, arr in self.params().items() if not np.all(np.isfinite(arr))]

    def vocab(self, language: str) -> Vocabulary:
        return self.vocab_x if _check_language(language) == LANG_X else self.vocab_y

    def embedding(self, language: str) -> np.ndarray:
        return self.W_x if _check_language(language) == LANG_X else self.W_y

    def decoder(self, language: str) -> tuple[np.ndarray, np.ndarray, CodeTree]:
        if _check_language(language) == LANG_X:
            return self.b_x, self.U_x, self.tree_x
        return self.b_y, self.U_y, self.tree_y

    # --- encoder ----------------------------------------------------------

    def encode(self, bag: BagOfWords, language: str) -> EncodedSentence:
        """phi = sum of embedding columns over the bag; hidden = h(c + phi)."""
        W = self.embedding(language)
        phi = np.zeros(self.dim)
        for i in np.sort(bag.indices):
            phi += W[:, i]
        z = self.c + phi
        hidden = np.tanh(z) if self.h == TANH else z
        return EncodedSentence(phi=phi, hidden=hidden, language=language)

    # --- decoder ----------------------------------------------------------

    def branch_prob(self, node: int, hidden: np.ndarray, language: str) -> float:
        """Probability of branching right at `node` given a hidden vector."""
        b, U, tree = self.decoder(language)
        if not 0 <= node < tree.internal_count:
            raise IndexError(f"internal node {node} out of range for V={tree.V}")
        return _sigmoid(b[node] + float(U[node] @ hidden))

    def word_log_prob(self, word: int, hidden: np.ndarray, language: str,
                      touch_counter: list | None = None) -> float:
        """log p(word | hidden) along the word's root-to-leaf path; always <= 0."""
        b, U, tree = self.decoder(language)
        nodes, bits = tree.path(word)
        total = 0.0
        for n, bit in zip(nodes, bits):
            a = b[n] + float(U[n] @ hidden)
            # -log p(bit) = softplus(a) - bit * a
            total -= _softplus(a) - bit * a
            if touch_counter is not None:
                touch_counter[0] += 1
        return total

    def recon_loss(self, target_bag: BagOfWords, target_language: str,
                   enc: EncodedSentence, touch_counter: list | None = None) -> float:
        """Negative log-likelihood of the target bag as a multinomial sample."""
        loss = 0.0
        for w in np.sort(target_bag.indices):
            loss -= self.word_log_prob(int(w), enc.hidden, target_language,
                                       touch_counter=touch_counter)
        return loss

    def pair_loss(self, pair: SentencePair) -> PairLoss:
        """The four reconstruction tasks for one pair, equally weighted.

        parts = [x->x, y->y, x->y, y->x]; total is their plain sum.
        """
        enc_x = self.encode(pair.source, LANG_X)
        enc_y = self.encode(pair.target, LANG_Y)
        parts = np.array([
            self.recon_loss(pair.source, LANG_X, enc_x),
            self.recon_loss(pair.target, LANG_Y, enc_y),
            self.recon_loss(pair.target, LANG_Y, enc_x),
            self.recon_loss(pair.source, LANG_X, enc_y),
        ])
        return PairLoss(total=float(parts.sum()), parts=parts)

    # --- gradients ----------------------------------------------------------

    def pair_gradients(self, pair: SentencePair, task_weights=None) -> PairGradients:
        """Exact analytic gradients of the pair loss.

        With the default weights this is the gradient of `pair_loss(...).total`;
        non-default `task_weights` scale each task's contribution, matching the
        trainer's update. Parameters untouched by the pair's words and paths
        get no entry (their gradient is zero).
        """
        if task_weights is None:
            task_weights = (1.0, 1.0, 1.0, 1.0)
        w_xx, w_yy, w_xy, w_yx = (float(w) for w in task_weights)

        enc_x = self.encode(pair.source, LANG_X)
        enc_y = self.encode(pair.target, LANG_Y)

        gb = {LANG_X: {}, LANG_Y: {}}
        gU = {LANG_X: {}, LANG_Y: {}}
        gh = {LANG_X: np.zeros(self.dim), LANG_Y: np.zeros(self.dim)}

        # tasks: (source encoding, target bag, target language, weight)
        tasks = (
            (enc_x, pair.source, LANG_X, w_xx),
            (enc_y, pair.target, LANG_Y, w_yy),
            (enc_x, pair.target, LANG_Y, w_xy),
            (enc_y, pair.source, LANG_X, w_yx),
        )
        for enc, tgt_bag, tgt_lang, weight in tasks:
            if weight == 0.0:
                continue
            b, U, tree = self.decoder(tgt_lang)
            for word in np.sort(tgt_bag.indices):
                nodes, bits = tree.path(int(word))
                for n, bit in zip(nodes, bits):
                    n = int(n)
                    a = b[n] + float(U[n] @ enc.hidden)
                    g = weight * (_sigmoid(a) - bit)
                    gb[tgt_lang][n] = gb[tgt_lang].get(n, 0.0) + g
                    if n in gU[tgt_lang]:
                        gU[tgt_lang][n] += g * enc.hidden
                    else:
                        gU[tgt_lang][n] = g * enc.hidden
                    gh[enc.language] += g * U[n]

        def backprop_hidden(enc):
            if self.h == TANH:
                return gh[enc.language] * (1.0 - enc.hidden * enc.hidden)
            return gh[enc.language].copy()

        gpre_x = backprop_hidden(enc_x)
        gpre_y = backprop_hidden(enc_y)

        def embed_grad(bag, gpre):
            cols, mult = np.unique(bag.indices, return_counts=True)
            return SparseRows(rows=cols.astype(np.int64),
                              values=mult[:, None].astype(np.float64) * gpre[None, :])

        def decoder_grad(lang):
            rows = np.array(sorted(gb[lang]), dtype=np.int64)
            bvals = np.array([gb[lang][n] for n in rows])
            uvals = (np.vstack([gU[lang][n] for n in rows])
                     if len(rows) else np.zeros((0, self.dim)))
            return SparseRows(rows, bvals), SparseRows(rows.copy(), uvals)

        b_x, u_x = decoder_grad(LANG_X)
        b_y, u_y = decoder_grad(LANG_Y)
        return PairGradients(
            w_x=embed_grad(pair.source, gpre_x),
            w_y=embed_grad(pair.target, gpre_y),
            c=gpre_x + gpre_y,
            b_x=b_x, u_x=u_x, b_y=b_y, u_y=u_y,
        )

    # --- persistence --------------------------------------------------------

    def save(self, path) -> None:
        """Write a self-describing .npz checkpoint; round-trips bit-exactly."""
        np.savez(
            path,
            format_version=np.int64(CHECKPOINT_FORMAT_VERSION),
            dim=np.int64(self.dim),
            h=np.array(self.h),
            tree_seed_x=np.int64(self.tree_x.seed),
            tree_seed_y=np.int64(self.tree_y.seed),
            vocab_x_words=np.array(self.vocab_x.words),
            vocab_x_counts=np.array(self.vocab_x.counts, dtype=np.int64),
            vocab_y_words=np.array(self.vocab_y.words),
            vocab_y_counts=np.array(self.vocab_y.counts, dtype=np.int64),
            W_x=self.W_x, W_y=self.W_y, c=self.c,
            b_x=self.b_x, U_x=self.U_x, b_y=self.b_y, U_y=self.U_y,
        )

    @classmethod
    def load(cls, path) -> "BilingualModel":
        with np.load(path, allow_pickle=False) as data:
            version = int(data["format_version"])
            if version != CHECKPOINT_FORMAT_VERSION:
                raise ValueError(f"unsupported checkpoint format version {version}")
            vocab_x = Vocabulary(data["vocab_x_words"].tolist(), data["vocab_x_counts"].tolist())
            vocab_y = Vocabulary(data["vocab_y_words"].tolist(), data["vocab_y_counts"].tolist())
            return cls(
                vocab_x, vocab_y,
                dim=int(data["dim"]),
                h=str(data["h"][()]),
                W_x=data["W_x"], W_y=data["W_y"], c=data["c"],
                b_x=data["b_x"], U_x=data["U_x"], b_y=data["b_y"], U_y=data["U_y"],
                tree_x=build_random_tree(vocab_x.size, int(data["tree_seed_x"])),
                tree_y=build_random_tree(vocab_y.size, int(data["tree_seed_y"])),
            )


def export_embeddings(path, vocab: Vocabulary, W: np.ndarray) -> None:
    """Text export: header `<V> <D>`, then one `<token> <v_1> ... <v_D>` per word."""
    d, v = W.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{v} {d}\n")
        for i, word in enumerate(vocab.words):
            vec = " ".join(f"{x:.10g}" for x in W[:, i])
            fh.write(f"{word} {vec}\n")


def import_embeddings(path) -> tuple[list[str], np.ndarray]:
    """Read the text export back; returns (words, W) with W of shape (D, V)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: malformed header")
        v, d = int(header[0]), int(header[1])
        words = []
        W = np.zeros((d, v))
        for i in range(v):
            parts = fh.readline().split()
            if len(parts) != d + 1:
                raise ValueError(f"{path}: malformed row {i}")
            words.append(parts[0])
            W[:, i] = [float(x) for x in parts[1:]]
    return words, W
