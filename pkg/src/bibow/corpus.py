"""Corpus ingestion: vocabularies, bags-of-words, parallel pairs, weighted documents.

All functions here are pure given their inputs; nothing keeps shared mutable
state, so concurrent use on distinct data is safe.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

TFIDF = "tfidf"
BINARY = "binary"


class Vocabulary:
    """Bidirectional token <-> index map with corpus frequency counts.

    Indices are assigned by descending frequency, ties broken by lexicographic
    token order, so index 0 is always a most-frequent word. The index mapping
    is the exact inverse of the word list.
    """

    def __init__(self, words, counts):
        words = list(words)
        if not words:
            raise ValueError("vocabulary empty after cutoff")
        self.words = words
        self.counts = [int(c) for c in counts]
        if len(self.counts) != len(self.words):
            raise ValueError("words and counts differ in length")
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate tokens in vocabulary")

    @property
    def size(self) -> int:
        return len(self.words)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, token) -> bool:
        return token in self.index

    def __repr__(self):
        return f"Vocabulary({len(self.words)} words)"

    def save(self, path) -> None:
        """Write one `<token> <count>` line per word, in index order."""
        with open(path, "w", encoding="utf-8") as fh:
            for word, count in zip(self.words, self.counts):
                fh.write(f"{word} {count}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        words, counts = [], []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected '<token> <count>'")
                words.append(parts[0])
                counts.append(int(parts[1]))
        return cls(words, counts)


class BagOfWords:
    """Multiset of word indices for one sentence or document.

    Order carries no meaning; duplicates are kept. Indices are stored as an
    int32 array in the order the tokens were seen.
    """

    __slots__ = ("indices",)

    def __init__(self, indices):
        self.indices = np.asarray(indices, dtype=np.int32).reshape(-1)

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    def __repr__(self):
        return f"BagOfWords({self.indices.tolist()})"


@dataclass
class SentencePair:
    """One sentence as bags in language X (source) and language Y (target)."""

    source: BagOfWords
    target: BagOfWords


@dataclass
class Document:
    """Sparse weighted vocabulary vector with a label and a language tag.

    `weights` maps word index to a strictly positive weight; zero entries are
    not stored. A document whose weights are all zero is kept with an empty
    map and `degenerate=True`.
    """

    weights: dict[int, float]
    label: int
    language: str
    degenerate: bool = False


@dataclass
class DocumentSet:
    """Labeled documents sharing one weighting mode and one label universe."""

    documents: list[Document]
    mode: str
    label_names: list[str]
    language: str

    def __len__(self) -> int:
        return len(self.documents)


def build_vocab(token_lines, min_count: int = 1, max_size: int | None = None) -> Vocabulary:
    """Count tokens over `token_lines` and build a Vocabulary.

    Tokens with frequency below `min_count` are dropped. If `max_size` is
    given, only the `max_size` most frequent tokens are kept (ties broken by
    lexicographic token order).
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter()
    for line in token_lines:
        counts.update(line)
    kept = [(w, c) for w, c in counts.items() if c >= min_count]
    kept.sort(key=lambda wc: (-wc[1], wc[0]))
    if max_size is not None:
        kept = kept[:max_size]
    if not kept:
        raise ValueError("vocabulary empty after cutoff")
    return Vocabulary([w for w, _ in kept], [c for _, c in kept])


def to_bag(tokens, vocab: Vocabulary) -> BagOfWords:
    """Map tokens to indices, silently dropping out-of-vocabulary tokens."""
    index = vocab.index
    return BagOfWords([index[t] for t in tokens if t in index])


def read_token_lines(path, lowercase: bool = True) -> list[list[str]]:
    """Read a whitespace-tokenized, one-sentence-per-line UTF-8 file."""
    lines = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if lowercase:
                line = line.lower()
            lines.append(line.split())
    return lines


def load_parallel(
    source_path,
    target_path,
    vocab_x: Vocabulary,
    vocab_y: Vocabulary,
    lowercase: bool = True,
) -> list[SentencePair]:
    """Pair up line-aligned sentence files into bags-of-words.

    Files must have equal line counts. Pairs where both sides are empty after
    out-of-vocabulary filtering are dropped; order of the survivors follows
    file order.
    """
    src_lines = read_token_lines(source_path, lowercase=lowercase)
    tgt_lines = read_token_lines(target_path, lowercase=lowercase)
    if len(src_lines) != len(tgt_lines):
        raise ValueError(f"line count mismatch {len(src_lines)} vs {len(tgt_lines)}")
    pairs = []
    dropped = 0
    for src_tokens, tgt_tokens in zip(src_lines, tgt_lines):
        src = to_bag(src_tokens, vocab_x)
        tgt = to_bag(tgt_tokens, vocab_y)
        if len(src) == 0 and len(tgt) == 0:
            dropped += 1
            continue
        pairs.append(SentencePair(src, tgt))
    logger.info(
        "loaded %d sentence pairs from %s / %s (%d dropped as empty)",
        len(pairs), source_path, target_path, dropped,
    )
    return pairs


def read_labeled_docs(path, lowercase: bool = True) -> list[tuple[list[str], str]]:
    """Read a `<label><TAB><token token ...>` file into (tokens, label) rows."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if "\t" not in line:
                raise ValueError(f"{path}:{lineno}: expected '<label><TAB><tokens>'")
            label, text = line.split("\t", 1)
            if not label:
                raise ValueError(f"{path}:{lineno}: empty label")
            if lowercase:
                text = text.lower()
            docs.append((text.split(), label))
    return docs


def tfidf(
    raw_docs,
    vocab: Vocabulary,
    mode: str = TFIDF,
    language: str = "x",
    label_names: list[str] | None = None,
) -> DocumentSet:
    """Turn (tokens, label) rows into a weighted DocumentSet.

    tfidf mode: weight(w, d) = tf(w, d) * ln(N / df(w)) with raw in-document
    counts, then each document is L1-normalized to sum to one. Documents whose
    pre-normalization weights are all zero keep zeros and are flagged
    degenerate. binary mode: weight 1 iff the word occurs.

    `label_names` fixes the label universe (useful to share one label -> id
    mapping across languages); by default it is the sorted set of labels seen.
    """
    if mode not in (TFIDF, BINARY):
        raise ValueError(f"unknown weighting mode {mode!r}")
    if not raw_docs:
        raise ValueError("no documents given")

    index = vocab.index
    doc_indices = [[index[t] for t in tokens if t in index] for tokens, _ in raw_docs]

    if label_names is None:
        label_names = sorted({label for _, label in raw_docs})
    label_id = {name: i for i, name in enumerate(label_names)}
    for _, label in raw_docs:
        if label not in label_id:
            raise ValueError(f"label {label!r} not in label universe {label_names}")

    n_docs = len(raw_docs)
    df = Counter()
    for idxs in doc_indices:
        df.update(set(idxs))

    documents = []
    for idxs, (_, label) in zip(doc_indices, raw_docs):
        if mode == BINARY:
            weights = {i: 1.0 for i in set(idxs)}
        else:
            tf = Counter(idxs)
            weights = {i: c * math.log(n_docs / df[i]) for i, c in tf.items()}
            total = sum(weights.values())
            if total > 0.0:
                weights = {i: w / total for i, w in weights.items() if w > 0.0}
            else:
                weights = {}
        documents.append(
            Document(
                weights=weights,
                label=label_id[label],
                language=language,
                degenerate=not weights,
            )
        )
    return DocumentSet(documents=documents, mode=mode, label_names=list(label_names), language=language)


def split_documents(
    docset: DocumentSet,
    train_fraction: float = 0.7,
    valid_fraction: float = 0.15,
    seed: int = 7,
) -> tuple[list[Document], list[Document], list[Document]]:
    """Deterministic train/valid/test split by seeded permutation.

    The test split is the remainder after the train and valid fractions.
    """
    n = len(docset.documents)
    if not 0.0 < train_fraction < 1.0 or valid_fraction < 0.0 or train_fraction + valid_fraction >= 1.0:
        raise ValueError("fractions must satisfy 0 < train, 0 <= valid, train + valid < 1")
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(train_fraction * n))
    n_valid = int(round(valid_fraction * n))
    take = lambda sl: [docset.documents[i] for i in sl]
    return (
        take(order[:n_train]),
        take(order[n_train:n_train + n_valid]),
        take(order[n_train + n_valid:]),
    )
