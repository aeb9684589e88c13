"""Synthetic bilingual corpus with known ground truth.

Language Y is a seeded bijective renaming of language X's words, so the true
cross-lingual word mapping is known by construction. Sentences and labeled
documents are drawn from per-topic word distributions; a document's label is
its topic. This is the self-contained stand-in for a real parallel corpus and
labeled document collection, used by the acceptance tests and the `synth` CLI
command.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np


@dataclass
class SynthConfig:
    vocab_size: int = 60
    topics: int = 4
    n_pairs: int = 2000
    n_docs: int = 800          # per language
    sent_len: tuple[int, int] = (5, 15)
    doc_len: tuple[int, int] = (30, 80)
    decay: float = 0.5         # geometric decay of word probability inside a topic block
    leak: float = 0.03         # probability mass a topic spreads outside its own block
    seed: int = 2024
    perm_seed: int = 99


@dataclass
class SynthData:
    x_lines: list[list[str]]
    y_lines: list[list[str]]
    x_docs: list[tuple[list[str], str]]
    y_docs: list[tuple[list[str], str]]
    truth: dict[str, str]      # x token -> its y translation


def _topic_distributions(cfg: SynthConfig) -> np.ndarray:
    """One distribution per topic over all words.

    Each topic owns a contiguous block of words whose probabilities decay
    geometrically; `leak` mass is spread uniformly over the other blocks. The
    decay keeps the per-token entropy well below the uniform log(V) start, so
    a trained decoder has real headroom over the initialized one.
    """
    v, t = cfg.vocab_size, cfg.topics
    blocks = np.minimum(np.arange(v) * t // v, t - 1)
    dists = np.empty((t, v))
    for topic in range(t):
        own = blocks == topic
        w = cfg.decay ** np.arange(own.sum())
        dists[topic, own] = (1.0 - cfg.leak) * w / w.sum()
        dists[topic, ~own] = cfg.leak / (~own).sum()
    return dists


def generate(cfg: SynthConfig) -> SynthData:
    if cfg.vocab_size < cfg.topics:
        raise ValueError("need at least one word per topic")
    width = len(str(cfg.vocab_size - 1))
    x_name = [f"xw{i:0{width}d}" for i in range(cfg.vocab_size)]
    perm = np.random.default_rng(cfg.perm_seed).permutation(cfg.vocab_size)
    y_name = [f"yw{int(perm[i]):0{width}d}" for i in range(cfg.vocab_size)]
    truth = dict(zip(x_name, y_name))

    dists = _topic_distributions(cfg)
    rng = np.random.default_rng(cfg.seed)

    x_lines, y_lines = [], []
    lo, hi = cfg.sent_len
    for _ in range(cfg.n_pairs):
        topic = int(rng.integers(cfg.topics))
        length = int(rng.integers(lo, hi + 1))
        words = rng.choice(cfg.vocab_size, size=length, p=dists[topic])
        x_lines.append([x_name[w] for w in words])
        # the translation is the same bag renamed; order is shuffled for looks
        y_lines.append([y_name[w] for w in rng.permutation(words)])

    def make_docs(names):
        docs = []
        dlo, dhi = cfg.doc_len
        for _ in range(cfg.n_docs):
            topic = int(rng.integers(cfg.topics))
            length = int(rng.integers(dlo, dhi + 1))
            words = rng.choice(cfg.vocab_size, size=length, p=dists[topic])
            docs.append(([names[w] for w in words], f"topic{topic}"))
        return docs

    return SynthData(
        x_lines=x_lines,
        y_lines=y_lines,
        x_docs=make_docs(x_name),
        y_docs=make_docs(y_name),
        truth=truth,
    )


def write(data: SynthData, out_dir) -> dict[str, str]:
    """Write the corpus in the formats the rest of the pipeline reads."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "parallel_x": os.path.join(out_dir, "parallel.x"),
        "parallel_y": os.path.join(out_dir, "parallel.y"),
        "docs_x": os.path.join(out_dir, "docs.x"),
        "docs_y": os.path.join(out_dir, "docs.y"),
        "truth": os.path.join(out_dir, "truth.tsv"),
    }
    with open(paths["parallel_x"], "w", encoding="utf-8") as fh:
        fh.writelines(" ".join(line) + "\n" for line in data.x_lines)
    with open(paths["parallel_y"], "w", encoding="utf-8") as fh:
        fh.writelines(" ".join(line) + "\n" for line in data.y_lines)
    with open(paths["docs_x"], "w", encoding="utf-8") as fh:
        fh.writelines(f"{label}\t{' '.join(tokens)}\n" for tokens, label in data.x_docs)
    with open(paths["docs_y"], "w", encoding="utf-8") as fh:
        fh.writelines(f"{label}\t{' '.join(tokens)}\n" for tokens, label in data.y_docs)
    with open(paths["truth"], "w", encoding="utf-8") as fh:
        fh.writelines(f"{x}\t{y}\n" for x, y in sorted(data.truth.items()))
    return paths
