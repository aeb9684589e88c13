"""Cross-lingual document classification and embedding-space queries.

Documents are embedded by multiplying the embedding matrix with their sparse
weight vector (no nonlinearity, no hidden bias). A one-vs-rest linear SVM
(L2-regularized hinge loss, deterministic Pegasos-style subgradient descent)
is trained on documents of one language and evaluated on the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bibow.corpus import BINARY, TFIDF, DocumentSet, split_documents, tfidf
from bibow.model import BilingualModel, _check_language

DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0)
DEFAULT_SVM_EPOCHS = 50
DEFAULT_SVM_SEED = 11


@dataclass
class DocEmbedding:
    vector: np.ndarray
    label: int
    language: str
    degenerate: bool = False


def embed_documents(docs, W: np.ndarray, mode: str | None = None) -> list[DocEmbedding]:
    """Embed each document as W times its sparse weight vector.

    `docs` may be a DocumentSet or a plain list of Documents. `mode`, when
    given, must match the DocumentSet's weighting mode (it is a guard against
    embedding a set built under the wrong scheme).
    """
    if isinstance(docs, DocumentSet):
        if mode is not None and mode != docs.mode:
            raise ValueError(f"document set has mode {docs.mode!r}, not {mode!r}")
        documents = docs.documents
    else:
        documents = docs
    dim = W.shape[0]
    out = []
    for doc in documents:
        if doc.weights:
            idx = np.fromiter(sorted(doc.weights), dtype=np.int64)
            vals = np.array([doc.weights[i] for i in idx])
            vec = W[:, idx] @ vals
        else:
            vec = np.zeros(dim)
        out.append(DocEmbedding(vector=vec, label=doc.label, language=doc.language,
                                degenerate=doc.degenerate))
    return out


class LinearSVM:
    """One-vs-rest linear classifier: predict argmax_k w_k . v + b_k.

    Ties go to the lowest class id. `classes[k]` is the label id scored by
    row k of `weights`.
    """

    def __init__(self, weights, biases, classes, C, mode):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.biases = np.asarray(biases, dtype=np.float64)
        self.classes = np.asarray(classes, dtype=np.int64)
        self.C = float(C)
        self.mode = mode

    def scores(self, vectors: np.ndarray) -> np.ndarray:
        return vectors @ self.weights.T + self.biases

    def predict(self, vectors: np.ndarray) -> np.ndarray:
        # np.argmax takes the first maximum; classes are sorted ascending
        return self.classes[np.argmax(self.scores(vectors), axis=1)]


def _fit_hinge_ovr(X, labels, classes, C, epochs, seed):
    """Pegasos subgradient descent on the one-vs-rest hinge objective.

    The bias is learned through an appended constant feature, so it is
    regularized with the rest of the weights. All K binary problems share one
    deterministic sample order.
    """
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    signs = np.where(labels[:, None] == classes[None, :], 1.0, -1.0)  # (n, K)
    lam = 1.0 / (C * n)
    W = np.zeros((len(classes), d + 1))
    rng = np.random.default_rng(seed)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            x = Xa[i]
            violated = signs[i] * (W @ x) < 1.0
            W *= 1.0 - eta * lam
            if violated.any():
                W[violated] += (eta * signs[i, violated])[:, None] * x[None, :]
    return W[:, :d], W[:, d]


def train_svm(
    train: list[DocEmbedding],
    valid: list[DocEmbedding],
    C_grid=DEFAULT_C_GRID,
    mode: str | None = None,
    epochs: int = DEFAULT_SVM_EPOCHS,
    seed: int = DEFAULT_SVM_SEED,
) -> LinearSVM:
    """Fit one-vs-rest hinge classifiers; pick C by validation error (ties: smaller C)."""
    classes = np.unique([e.label for e in train])
    if len(classes) < 2:
        raise ValueError("training set must contain at least 2 classes")
    X = np.vstack([e.vector for e in train])
    labels = np.array([e.label for e in train])

    best = None
    for C in sorted(float(c) for c in C_grid):
        W, b = _fit_hinge_ovr(X, labels, classes, C, epochs, seed)
        svm = LinearSVM(W, b, classes, C, mode)
        err = evaluate(svm, valid).error_rate
        if best is None or err < best[0]:
            best = (err, svm)
    return best[1]


@dataclass
class EvaluationResult:
    error_rate: float
    confusion: np.ndarray  # rows: true class, cols: predicted; ordered like classes
    classes: np.ndarray
    n_test: int


def evaluate(svm: LinearSVM, test: list[DocEmbedding]) -> EvaluationResult:
    if not test:
        raise ValueError("test set is empty")
    class_pos = {int(cls): k for k, cls in enumerate(svm.classes)}
    labels = np.array([e.label for e in test])
    unknown = sorted(set(labels.tolist()) - set(class_pos))
    if unknown:
        raise ValueError(f"test labels {unknown} unseen during SVM training")
    predicted = svm.predict(np.vstack([e.vector for e in test]))
    k = len(svm.classes)
    confusion = np.zeros((k, k), dtype=np.int64)
    for true, pred in zip(labels, predicted):
        confusion[class_pos[int(true)], class_pos[int(pred)]] += 1
    errors = int(np.sum(labels != predicted))
    return EvaluationResult(
        error_rate=errors / len(test),
        confusion=confusion,
        classes=svm.classes.copy(),
        n_test=len(test),
    )


def _precision_recall(confusion):
    tp = np.diag(confusion).astype(np.float64)
    col = confusion.sum(axis=0).astype(np.float64)
    row = confusion.sum(axis=1).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(col > 0, tp / col, 0.0)
        recall = np.where(row > 0, tp / row, 0.0)
    return precision, recall


def format_report(result: EvaluationResult, label_names) -> str:
    """Human-readable evaluation block."""
    precision, recall = _precision_recall(result.confusion)
    names = [label_names[int(c)] for c in result.classes]
    width = max(len(n) for n in names)
    lines = [
        f"test documents: {result.n_test}",
        f"error rate: {result.error_rate:.4f}",
        "",
        f"{'class':<{width}}  precision  recall",
    ]
    for i, name in enumerate(names):
        lines.append(f"{name:<{width}}  {precision[i]:9.4f}  {recall[i]:6.4f}")
    lines.append("")
    lines.append("confusion (rows true, cols predicted):")
    header = " ".join(f"{n:>{width}}" for n in names)
    lines.append(f"{'':<{width}} {header}")
    for i, name in enumerate(names):
        row = " ".join(f"{result.confusion[i, j]:>{width}d}" for j in range(len(names)))
        lines.append(f"{name:<{width}} {row}")
    return "\n".join(lines) + "\n"


def report_keyvalues(result: EvaluationResult, label_names, extra=None) -> str:
    """Machine-readable `key=value` lines for the same evaluation."""
    precision, recall = _precision_recall(result.confusion)
    lines = []
    if extra:
        lines += [f"{k}={v}" for k, v in extra.items()]
    lines.append(f"n_test={result.n_test}")
    lines.append(f"error_rate={result.error_rate:.6f}")
    for i, cls in enumerate(result.classes):
        name = label_names[int(cls)]
        lines.append(f"precision_{name}={precision[i]:.6f}")
        lines.append(f"recall_{name}={recall[i]:.6f}")
    return "\n".join(lines) + "\n"


def nearest_neighbors(word: str, source_language: str, target_language: str,
                      k: int, model: BilingualModel) -> list[tuple[str, float]]:
    """Top-k target-language words by cosine similarity to `word`'s embedding."""
    if k < 1:
        raise ValueError("k must be >= 1")
    src_vocab = model.vocab(_check_language(source_language))
    tgt_vocab = model.vocab(_check_language(target_language))
    if word not in src_vocab:
        raise KeyError(f"word {word!r} not in the {source_language} vocabulary")
    q = model.embedding(source_language)[:, src_vocab.index[word]]
    W = model.embedding(target_language)
    qn = np.linalg.norm(q)
    norms = np.linalg.norm(W, axis=0)
    denom = qn * norms
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(denom > 0, (q @ W) / denom, 0.0)
    order = np.argsort(-sims, kind="stable")[:k]  # stable: ties by lower index
    return [(tgt_vocab.words[i], float(sims[i])) for i in order]


def project_2d(model: BilingualModel, top_n: int) -> list[tuple[str, str, float, float]]:
    """PCA projection of the top_n most frequent words of both languages.

    Embeddings are stacked (language X block first), mean-centered, and
    projected onto the top-2 principal directions. Each direction's sign is
    fixed so its largest-magnitude coordinate is positive.
    """
    if top_n < 2:
        raise ValueError("top_n must be >= 2")
    rows = []
    labels = []
    for lang in ("x", "y"):
        vocab = model.vocab(lang)
        W = model.embedding(lang)
        for i in range(min(top_n, vocab.size)):  # vocab order is by frequency
            rows.append(W[:, i])
            labels.append((vocab.words[i], lang))
    X = np.vstack(rows)
    X = X - X.mean(axis=0)
    cov = (X.T @ X) / X.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:2]
    dirs = eigvecs[:, order]
    for j in range(dirs.shape[1]):
        if dirs[np.argmax(np.abs(dirs[:, j])), j] < 0:
            dirs[:, j] = -dirs[:, j]
    proj = X @ dirs
    if proj.shape[1] < 2:  # dim-1 models still export two columns
        proj = np.hstack([proj, np.zeros((proj.shape[0], 1))])
    return [(w, lang, float(p[0]), float(p[1])) for (w, lang), p in zip(labels, proj)]


@dataclass
class PipelineResult:
    mode: str
    C: float
    valid_error: float
    test_error: float
    evaluation: EvaluationResult
    label_names: list[str]
    svm: LinearSVM


def crosslingual_pipeline(
    model: BilingualModel,
    train_raw_docs,
    test_raw_docs,
    train_language: str = "x",
    C_grid=DEFAULT_C_GRID,
    mode: str = "auto",
    train_fraction: float = 0.7,
    valid_fraction: float = 0.15,
    split_seed: int = 7,
    svm_epochs: int = DEFAULT_SVM_EPOCHS,
    svm_seed: int = DEFAULT_SVM_SEED,
) -> PipelineResult:
    """Train an SVM on one language's documents, evaluate on the other's test split.

    `mode='auto'` tries tfidf and binary weighting and keeps whichever has the
    lower validation error in the training language (ties keep tfidf).
    """
    train_language = _check_language(train_language)
    test_language = "y" if train_language == "x" else "x"
    label_names = sorted(
        {label for _, label in train_raw_docs} | {label for _, label in test_raw_docs}
    )
    candidate_modes = (TFIDF, BINARY) if mode == "auto" else (mode,)

    W_train = model.embedding(train_language)
    best = None
    for m in candidate_modes:
        docset = tfidf(train_raw_docs, model.vocab(train_language), mode=m,
                       language=train_language, label_names=label_names)
        tr, va, _ = split_documents(docset, train_fraction, valid_fraction, split_seed)
        svm = train_svm(embed_documents(tr, W_train), embed_documents(va, W_train),
                        C_grid=C_grid, mode=m, epochs=svm_epochs, seed=svm_seed)
        verr = evaluate(svm, embed_documents(va, W_train)).error_rate
        if best is None or verr < best[0]:
            best = (verr, svm, m)
    valid_error, svm, chosen_mode = best

    test_set = tfidf(test_raw_docs, model.vocab(test_language), mode=chosen_mode,
                     language=test_language, label_names=label_names)
    _, _, te = split_documents(test_set, train_fraction, valid_fraction, split_seed)
    result = evaluate(svm, embed_documents(te, model.embedding(test_language)))
    return PipelineResult(
        mode=chosen_mode, C=svm.C, valid_error=valid_error,
        test_error=result.error_rate, evaluation=result,
        label_names=label_names, svm=svm,
    )
