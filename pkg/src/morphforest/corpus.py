"""Wordlist and word-vector ingestion."""
from __future__ import annotations

import gzip
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np


class CorpusError(ValueError):
    """Base class for malformed input files."""


class WordlistFormatError(CorpusError):
    def __init__(self, path, lineno, msg):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {msg}")


class EmptyVocabularyError(CorpusError):
    pass


class VectorFormatError(CorpusError):
    def __init__(self, path, lineno, msg):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {msg}")


def open_text(path, mode="rt"):
    """Open a UTF-8 text file, transparently decompressing ``*.gz``."""
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, mode, encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def normalize(word: str, lowercase: bool = True) -> str:
    word = unicodedata.normalize("NFC", word)
    return word.lower() if lowercase else word


@dataclass(frozen=True)
class Vocabulary:
    """Frequency-ranked word list.

    Entries are sorted by count descending, ties broken lexicographically, so
    ``rank`` is a total order and truncation to the top K is deterministic.
    """

    entries: tuple[tuple[str, int], ...]
    index: Mapping[str, int] = field(repr=False, compare=False)
    total_tokens: int = 0

    @classmethod
    def from_counts(cls, counts: Mapping[str, int] | Iterable[tuple[str, int]],
                    top_k: int | None = None) -> "Vocabulary":
        if isinstance(counts, Mapping):
            items = counts.items()
        else:
            merged: Counter = Counter()
            for w, c in counts:
                merged[w] += c
            items = merged.items()
        ranked = sorted(items, key=lambda wc: (-wc[1], wc[0]))
        if top_k is not None:
            ranked = ranked[:top_k]
        entries = tuple((w, int(c)) for w, c in ranked)
        index = {w: i for i, (w, _) in enumerate(entries)}
        return cls(entries, index, sum(c for _, c in entries))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return (w for w, _ in self.entries)

    def __contains__(self, word):
        return word in self.index

    @property
    def words(self) -> list[str]:
        return [w for w, _ in self.entries]

    def count(self, word: str) -> int:
        """Count of ``word``; 0 for out-of-vocabulary strings."""
        i = self.index.get(word)
        return 0 if i is None else self.entries[i][1]

    def rank(self, word: str) -> int:
        return self.index[word]

    def write(self, path) -> None:
        with open_text(path, "wt") as f:
            for w, c in self.entries:
                f.write(f"{w}\t{c}\n")


def read_wordlist(path, lowercase: bool = True, filter_nonalpha: bool = True) -> Counter:
    """Parse a ``word<TAB>count`` file into summed counts (no truncation)."""
    counts: Counter = Counter()
    with open_text(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise WordlistFormatError(path, lineno, "expected 'word<TAB>count'")
            word, count = parts
            if not word or any(ch.isspace() for ch in word):
                raise WordlistFormatError(path, lineno, f"invalid word {word!r}")
            count = count.strip()
            if not count.isdigit() or int(count) <= 0:
                raise WordlistFormatError(path, lineno, f"count must be a positive integer, got {count!r}")
            word = normalize(word, lowercase)
            if filter_nonalpha and not word.isalpha():
                continue
            counts[word] += int(count)
    return counts


def load_wordlist(path, top_k: int, lowercase: bool = True,
                  filter_nonalpha: bool = True) -> Vocabulary:
    """Load the ``top_k`` most frequent words of a ``word<TAB>count`` file.

    Duplicate surface forms (after NFC and optional lowercasing) have their
    counts summed before ranking. Non-alphabetic tokens are dropped before
    truncation when ``filter_nonalpha`` is set.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    counts = read_wordlist(path, lowercase, filter_nonalpha)
    if not counts:
        raise EmptyVocabularyError(f"{path}: no words")
    return Vocabulary.from_counts(counts, top_k=top_k)


def cosine(v1, v2) -> float | None:
    """Cosine similarity, or ``None`` when either vector is all zeros."""
    a = np.asarray(v1, dtype=np.float64)
    b = np.asarray(v2, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        return None
    return max(-1.0, min(1.0, float(a @ b) / (na * nb)))


@dataclass(frozen=True)
class WordVectors:
    dim: int
    table: Mapping[str, np.ndarray] = field(repr=False)

    @classmethod
    def empty(cls, dim: int = 1) -> "WordVectors":
        return cls(dim, {})

    def __len__(self):
        return len(self.table)

    def __contains__(self, word):
        return word in self.table

    def similarity(self, a: str, b: str) -> float | None:
        va = self.table.get(a)
        vb = self.table.get(b)
        if va is None or vb is None:
            return None
        return cosine(va, vb)


def _parent_filter(vocab: Vocabulary):
    """Predicate accepting strings that could be generated as a parent.

    Parents are prefixes or suffixes of vocabulary words, possibly with one
    final character restored or substituted.
    """
    pieces = set()
    for w in vocab:
        for i in range(1, len(w) + 1):
            pieces.add(w[:i])
            pieces.add(w[-i:])

    def keep(word):
        return word in pieces or word[:-1] in pieces

    return keep


def load_vectors(path, vocab: Vocabulary, retain: str = "vocab",
                 lowercase: bool = True) -> WordVectors:
    """Read word2vec text-format vectors.

    ``retain="vocab"`` keeps vocabulary words and strings that could appear as
    generated parents; ``retain="all"`` keeps everything.
    """
    if retain not in ("vocab", "all"):
        raise ValueError(f"retain must be 'vocab' or 'all', got {retain!r}")
    keep = _parent_filter(vocab) if retain == "vocab" else (lambda w: True)
    table: dict[str, np.ndarray] = {}
    dim = None
    with open_text(path) as f:
        for lineno, raw in enumerate(f, 1):
            parts = raw.rstrip().split(" ")
            if not parts or parts == [""]:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                dim = int(parts[1])
                if dim < 1:
                    raise VectorFormatError(path, lineno, "dimension must be positive")
                continue
            word, comps = parts[0], parts[1:]
            if dim is None:
                dim = len(comps)
            if len(comps) != dim:
                raise VectorFormatError(path, lineno, f"expected {dim} components, got {len(comps)}")
            try:
                vec = np.array([float(x) for x in comps], dtype=np.float64)
            except ValueError as e:
                raise VectorFormatError(path, lineno, str(e)) from None
            if not np.all(np.isfinite(vec)):
                raise VectorFormatError(path, lineno, "non-finite component")
            word = normalize(word, lowercase)
            if keep(word):
                table[word] = vec
    if dim is None:
        dim = 1
    return WordVectors(dim, table)
