"""Candidate parent edges C(w) and contrastive neighborhoods N(w)."""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field

from .affixes import (AffixSet, REPEAT_MARKER, delete_marker, modify_marker,
                      prefix_id, suffix_id)


class DerivationType(enum.Enum):
    STOP = "STOP"
    SUFFIX = "SUFFIX"
    PREFIX = "PREFIX"
    MODIFY = "MODIFY"
    DELETE = "DELETE"
    REPEAT = "REPEAT"
    COMPOUND_LEFT = "COMPOUND-LEFT"
    COMPOUND_RIGHT = "COMPOUND-RIGHT"

    def __str__(self):
        return self.value

    @property
    def is_compound(self) -> bool:
        return self in (DerivationType.COMPOUND_LEFT, DerivationType.COMPOUND_RIGHT)

    @property
    def is_transform(self) -> bool:
        return self in (DerivationType.MODIFY, DerivationType.DELETE, DerivationType.REPEAT)


STOP = DerivationType.STOP


@dataclass
class Candidate:
    child: str
    parent: str
    dtype: DerivationType
    affixes: frozenset = frozenset()
    # suffix/prefix string for affixal edges, the other part for compounds
    affix: str = ""
    log_prob: float = field(default=0.0, compare=False)

    @property
    def key(self):
        return (self.parent, self.dtype)

    def __str__(self):
        return f"{self.parent}/{self.dtype}"


@dataclass(frozen=True)
class CandidateConfig:
    min_stem: int = 2
    min_compound: int = 3
    compounds: bool = False
    compound_both_in_vocab: bool = True
    transforms: bool = False
    delete_chars: tuple[str, ...] = ("e",)
    modify_table: tuple[tuple[str, str], ...] = (("i", "y"),)
    max_affix_len: int = 6
    max_neighbors: int = 25
    seed: int = 0

    def marker_ids(self) -> tuple[str, ...]:
        if not self.transforms:
            return ()
        ids = [REPEAT_MARKER]
        ids += [delete_marker(c) for c in self.delete_chars]
        ids += [modify_marker(a, b) for a, b in self.modify_table]
        return tuple(ids)


LANGUAGE_PROFILES = {
    "english": dict(transforms=True, delete_chars=("e",), modify_table=(("i", "y"),)),
    "german": dict(transforms=True, delete_chars=("e",), modify_table=()),
    "generic": dict(transforms=False, delete_chars=(), modify_table=()),
}


class CandidateGenerator:
    """Generates candidate sets against a fixed vocabulary and live affix view.

    Holding the live view avoids rebuilding affix sets per word; a new
    generator is created after every prune.
    """

    def __init__(self, vocab, affixes: AffixSet, cfg: CandidateConfig = CandidateConfig()):
        self.vocab = vocab
        self.cfg = cfg
        self.live = affixes.live_ids()
        self.suffixes = affixes.live_suffixes()
        self.prefixes = affixes.live_prefixes()
        self._max_suf = max(map(len, self.suffixes), default=0)
        self._max_pre = max(map(len, self.prefixes), default=0)
        self.rep = REPEAT_MARKER if REPEAT_MARKER in self.live else None
        self.dels = [(c, delete_marker(c)) for c in cfg.delete_chars if delete_marker(c) in self.live]
        self.mods = [(a, b, modify_marker(a, b)) for a, b in cfg.modify_table
                     if modify_marker(a, b) in self.live]
        self._cache: dict[str, list[Candidate]] = {}

    def __call__(self, w: str) -> list[Candidate]:
        cands = self._cache.get(w)
        if cands is None:
            cands = self._cache[w] = self._generate(w)
        return cands

    def _generate(self, w: str) -> list[Candidate]:
        cfg = self.cfg
        n = len(w)
        out = [Candidate(w, w, STOP)]
        seen = {(w, STOP)}

        def add(parent, dtype, ids, affix):
            if (parent, dtype) in seen or len(parent) >= n:
                return
            seen.add((parent, dtype))
            out.append(Candidate(w, parent, dtype, frozenset(ids), affix))

        for k in range(1, min(self._max_suf, n - 1) + 1):
            s = w[n - k:]
            if s not in self.suffixes:
                continue
            stem = w[:n - k]
            sid = suffix_id(s)
            if len(stem) >= cfg.min_stem:
                add(stem, DerivationType.SUFFIX, (sid,), s)
            if self.rep and len(stem) >= 2 and len(stem) - 1 >= cfg.min_stem and stem[-1] == stem[-2]:
                add(stem[:-1], DerivationType.REPEAT, (sid, self.rep), s)
            if len(stem) >= cfg.min_stem:
                for c, mid in self.dels:
                    add(stem + c, DerivationType.DELETE, (sid, mid), s)
                for old, new, mid in self.mods:
                    if stem.endswith(old) and len(stem) - len(old) >= 1:
                        add(stem[:len(stem) - len(old)] + new, DerivationType.MODIFY, (sid, mid), s)

        if cfg.compounds:
            m = cfg.min_compound
            for i in range(m, n - m + 1):
                u, v = w[:i], w[i:]
                u_in, v_in = u in self.vocab, v in self.vocab
                ok = (u_in and v_in) if cfg.compound_both_in_vocab else (u_in or v_in)
                if ok:
                    add(u, DerivationType.COMPOUND_LEFT, (), v)
                    add(v, DerivationType.COMPOUND_RIGHT, (), u)

        for k in range(1, min(self._max_pre, n - 1) + 1):
            p = w[:k]
            if p not in self.prefixes:
                continue
            rest = w[k:]
            if len(rest) >= cfg.min_stem:
                add(rest, DerivationType.PREFIX, (prefix_id(p),), p)
        return out


def gen_candidates(w: str, vocab, affixes: AffixSet,
                   cfg: CandidateConfig = CandidateConfig()) -> list[Candidate]:
    """Candidate parent edges for ``w``; index 0 is always the STOP edge."""
    return CandidateGenerator(vocab, affixes, cfg)(w)


@dataclass(frozen=True)
class Neighborhood:
    word: str
    neighbors: tuple[str, ...]

    def __contains__(self, s):
        return s in self.neighbors

    def __len__(self):
        return len(self.neighbors)


def gen_neighbors(w: str, max_neighbors: int = 25, seed: int = 0) -> Neighborhood:
    """``w`` plus all distinct single adjacent transpositions of it.

    When there are more than ``max_neighbors`` strings in total, ``w`` is kept
    and the rest are subsampled with a generator seeded by ``(seed, w)``.
    """
    swaps = []
    seen = {w}
    for i in range(len(w) - 1):
        s = w[:i] + w[i + 1] + w[i] + w[i + 2:]
        if s not in seen:
            seen.add(s)
            swaps.append(s)
    if len(swaps) + 1 > max_neighbors:
        rng = random.Random(f"{seed}:{w}")
        swaps = sorted(rng.sample(swaps, max(max_neighbors - 1, 0)))
    return Neighborhood(w, (w, *swaps))
