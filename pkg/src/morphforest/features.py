"""Sparse features for (word, candidate) pairs."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from .candidates import Candidate, CandidateConfig, DerivationType
from .corpus import Vocabulary, WordVectors

STOP = DerivationType.STOP


@dataclass(frozen=True)
class FeatureConfig:
    sibl: bool = False
    comp: bool = False
    freq_bin_width: float = 1.0
    freq_bin_cap: int = 12


@dataclass(frozen=True)
class FeatureContext:
    vocab: Vocabulary
    vectors: WordVectors = field(default_factory=WordVectors.empty)
    siblings: Mapping[str, int] = field(default_factory=dict)


class FeatureIndex:
    """Feature name to contiguous integer id. Frozen indexes drop unseen names."""

    def __init__(self, names=()):
        self.ids: dict[str, int] = {}
        self.frozen = False
        for n in names:
            self.add(n)

    def __len__(self):
        return len(self.ids)

    def __contains__(self, name):
        return name in self.ids

    def add(self, name: str) -> int | None:
        i = self.ids.get(name)
        if i is None and not self.frozen:
            i = self.ids[name] = len(self.ids)
        return i

    def freeze(self) -> "FeatureIndex":
        self.frozen = True
        return self

    @property
    def names(self) -> list[str]:
        return list(self.ids)


class SparseVector(NamedTuple):
    ids: np.ndarray
    values: np.ndarray

    def to_dict(self, index: FeatureIndex | None = None) -> dict:
        names = index.names if index is not None else None
        return {(names[i] if names else int(i)): float(v) for i, v in zip(self.ids, self.values)}

    def dot(self, theta) -> float:
        return float(np.dot(theta[self.ids], self.values)) if len(self.ids) else 0.0


def freq_bin(count: int, cfg: FeatureConfig) -> int:
    return min(int(math.log1p(count) / cfg.freq_bin_width), cfg.freq_bin_cap)


def _boundary_bigrams(w: str, z: Candidate) -> tuple[str, str]:
    """(stem-side, affix-side) bigrams at the derivation boundary in ``w``."""
    t = z.dtype
    if t == DerivationType.PREFIX:
        k = len(z.affix)
        return ("^" + w[:k])[-2:], (w[k:] + "$")[:2]
    if t == DerivationType.COMPOUND_LEFT:
        k = len(z.parent)
    elif t == DerivationType.COMPOUND_RIGHT:
        k = len(w) - len(z.parent)
    else:
        k = len(w) - len(z.affix)
    return ("^" + w[:k])[-2:], (w[k:] + "$")[:2]


def feature_dict(w: str, z: Candidate, ctx: FeatureContext,
                 cfg: FeatureConfig = FeatureConfig()) -> dict[str, float]:
    """Named feature values for candidate ``z`` of word ``w``."""
    t = z.dtype.value
    f: Counter = Counter()
    f["type=" + t] = 1.0
    for a in sorted(z.affixes):
        f["affix=" + a] = 1.0
    if z.dtype is STOP:
        # a root's own string says nothing about derivation: only its edges
        f["begin=" + (w + "$")[:2]] = 1.0
        f["end=" + ("^" + w)[-2:]] = 1.0
        return dict(f)
    left, right = _boundary_bigrams(w, z)
    f[f"{t}:stem_bigram={left}"] = 1.0
    f[f"{t}:affix_bigram={right}"] = 1.0
    sim = ctx.vectors.similarity(w, z.parent)
    if sim is None:
        f["cos_oov"] = 1.0
    else:
        f["cos"] = sim
    count = ctx.vocab.count(z.parent)
    f[f"freq_bin={freq_bin(count, cfg)}"] = 1.0
    if z.parent in ctx.vocab:
        f["parent_in_vocab"] = 1.0
    if cfg.sibl and not z.dtype.is_compound:
        f["sibl"] = math.log1p(siblings(ctx.siblings, z.parent))
    if cfg.comp and z.dtype.is_compound:
        other = z.affix
        if z.parent in ctx.vocab and other in ctx.vocab:
            f["comp_both_in_vocab"] = 1.0
        low = min(ctx.vocab.count(z.parent), ctx.vocab.count(other))
        f[f"comp_min_freq_bin={freq_bin(low, cfg)}"] = 1.0
    return {k: v for k, v in f.items() if v != 0.0}


def featurize(w: str, z: Candidate, ctx: FeatureContext, index: FeatureIndex,
              cfg: FeatureConfig = FeatureConfig()) -> SparseVector:
    pairs: dict[int, float] = {}
    for name, value in feature_dict(w, z, ctx, cfg).items():
        i = index.add(name)
        if i is not None:
            pairs[i] = pairs.get(i, 0.0) + value
    ids = np.array(sorted(pairs), dtype=np.int64)
    return SparseVector(ids, np.array([pairs[i] for i in ids], dtype=np.float64))


def siblings(table: Mapping[str, int], parent: str) -> int:
    return max(table.get(parent, 0) - 1, 0)


def build_sibling_table(vocab, affixes, cfg: CandidateConfig = CandidateConfig()) -> dict[str, int]:
    """Count, per parent string, the vocabulary words that strip to it.

    Every live suffix and prefix is stripped from every word independently
    (subject to ``cfg.min_stem``); ``siblings(table, p)`` then gives the
    number of other words sharing parent ``p``.
    """
    suffixes = affixes.live_suffixes()
    prefixes = affixes.live_prefixes()
    table: Counter = Counter()
    for w in vocab:
        n = len(w)
        for k in range(1, n):
            if w[n - k:] in suffixes and n - k >= cfg.min_stem:
                table[w[:n - k]] += 1
            if w[:k] in prefixes and n - k >= cfg.min_stem:
                table[w[k:]] += 1
    return dict(table)


def sibling_table_from_edges(edges: Mapping[str, tuple]) -> dict[str, int]:
    """Parent-string counts from a decoded forest's ``child -> (parent, dtype, ...)`` map."""
    table: Counter = Counter()
    for child, edge in edges.items():
        parent, dtype = edge[0], edge[1]
        if dtype is not STOP:
            table[parent] += 1
    return dict(table)
