"""Probabilistic binary tree over a vocabulary.

Every word sits at a leaf of a complete (heap-shaped) binary tree with V
leaves: all levels full except possibly the last, which is filled left to
right. The V-1 internal nodes are numbered breadth-first from the root, so
node 0 is the root and path depths differ by at most one across words. Words
are assigned to leaves by a seeded uniform random permutation, which makes the
whole structure a deterministic function of (V, seed).

The tree is laid out as one implicit heap array of 2V-1 positions: positions
0..V-2 are the internal nodes (ids equal positions), positions V-1..2V-2 are
the leaves, and the children of position p are 2p+1 (left) and 2p+2 (right).
"""

from __future__ import annotations

import numpy as np


class CodeTree:
    """Root-to-leaf codes for V words; immutable after construction."""

    __slots__ = ("V", "seed", "internal_count", "nodes_flat", "bits_flat", "offsets", "depths")

    def __init__(self, V: int, seed: int):
        if V < 1:
            raise ValueError("tree needs at least one word")
        self.V = int(V)
        self.seed = int(seed)
        self.internal_count = self.V - 1

        # word w sits at leaf slot leaf_of_word[w], i.e. heap position V-1+slot
        leaf_of_word = np.random.default_rng(seed).permutation(self.V)

        nodes_parts = []
        bits_parts = []
        offsets = np.zeros(self.V + 1, dtype=np.int32)
        for w in range(self.V):
            pos = self.V - 1 + int(leaf_of_word[w])
            nodes = []
            bits = []
            while pos > 0:
                parent = (pos - 1) // 2
                nodes.append(parent)
                bits.append(1.0 if pos == 2 * parent + 2 else 0.0)
                pos = parent
            nodes.reverse()
            bits.reverse()
            nodes_parts.append(nodes)
            bits_parts.append(bits)
            offsets[w + 1] = offsets[w] + len(nodes)

        self.offsets = offsets
        self.nodes_flat = np.array(
            [n for part in nodes_parts for n in part], dtype=np.int32
        )
        self.bits_flat = np.array(
            [b for part in bits_parts for b in part], dtype=np.float64
        )
        self.depths = np.diff(offsets).astype(np.int32)

    def path(self, word: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (internal node ids, left/right bits) from root to `word`'s leaf."""
        if not 0 <= word < self.V:
            raise IndexError(f"word index {word} out of range for V={self.V}")
        lo, hi = self.offsets[word], self.offsets[word + 1]
        return self.nodes_flat[lo:hi], self.bits_flat[lo:hi]

    def depth(self, word: int) -> int:
        if not 0 <= word < self.V:
            raise IndexError(f"word index {word} out of range for V={self.V}")
        return int(self.depths[word])

    @property
    def max_depth(self) -> int:
        return int(self.depths.max()) if self.V > 1 else 0

    def paths_for_bag(self, indices) -> tuple[np.ndarray, np.ndarray]:
        """Concatenated paths for every index in `indices`, in the given order."""
        if len(indices) == 0:
            return (np.empty(0, dtype=np.int32), np.empty(0, dtype=np.float64))
        nodes = [self.nodes_flat[self.offsets[w]:self.offsets[w + 1]] for w in indices]
        bits = [self.bits_flat[self.offsets[w]:self.offsets[w + 1]] for w in indices]
        return np.concatenate(nodes), np.concatenate(bits)

    def __repr__(self):
        return f"CodeTree(V={self.V}, seed={self.seed})"


def build_random_tree(V: int, seed: int) -> CodeTree:
    """Build the complete binary tree with a seeded random word-to-leaf assignment."""
    return CodeTree(V, seed)
