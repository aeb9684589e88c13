"""Bilingual bag-of-words autoencoder embeddings, trained from sentence-aligned
parallel text only, with cross-lingual document classification on top."""

__version__ = "0.1.0"

from bibow.code_tree import CodeTree, build_random_tree
from bibow.corpus import (
    BagOfWords,
    Document,
    DocumentSet,
    SentencePair,
    Vocabulary,
    build_vocab,
    load_parallel,
    tfidf,
    to_bag,
)
from bibow.model import BilingualModel
from bibow.trainer import TrainConfig, TrainReport, train

__all__ = [
    "BagOfWords",
    "BilingualModel",
    "CodeTree",
    "Document",
    "DocumentSet",
    "SentencePair",
    "TrainConfig",
    "TrainReport",
    "Vocabulary",
    "build_random_tree",
    "build_vocab",
    "load_parallel",
    "tfidf",
    "to_bag",
    "train",
]
