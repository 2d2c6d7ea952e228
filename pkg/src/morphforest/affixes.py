"""Affix inventories: extraction from the vocabulary and ILP-driven pruning.

Affix identifiers are plain strings: ``"-ing"`` for a suffix, ``"un-"`` for a
prefix and ``"+del:e"`` style names for transformation markers.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable

from .corpus import open_text

SUFFIX = "suffix"
PREFIX = "prefix"
MARKER = "marker"

REPEAT_MARKER = "+rep"


def suffix_id(s: str) -> str:
    return "-" + s


def prefix_id(s: str) -> str:
    return s + "-"


def delete_marker(ch: str) -> str:
    return "+del:" + ch


def modify_marker(old: str, new: str) -> str:
    return f"+mod:{old}>{new}"


class AffixRevivalError(ValueError):
    """Raised when a prune would turn a dead affix live again."""


@dataclass(frozen=True)
class Affix:
    side: str
    string: str
    support: int
    live: bool = True

    @property
    def id(self) -> str:
        if self.side == SUFFIX:
            return suffix_id(self.string)
        if self.side == PREFIX:
            return prefix_id(self.string)
        return self.string


@dataclass(frozen=True)
class AffixSet:
    suffixes: tuple[Affix, ...] = ()
    prefixes: tuple[Affix, ...] = ()
    markers: tuple[Affix, ...] = ()

    def __post_init__(self):
        for group in (self.suffixes, self.prefixes, self.markers):
            strings = [a.string for a in group]
            if len(set(strings)) != len(strings):
                raise ValueError("duplicate affix strings")
            if any(not s for s in strings):
                raise ValueError("empty affix string")

    def __iter__(self):
        yield from self.suffixes
        yield from self.prefixes
        yield from self.markers

    def __len__(self):
        return len(self.suffixes) + len(self.prefixes) + len(self.markers)

    def live_ids(self) -> frozenset[str]:
        return frozenset(a.id for a in self if a.live)

    def live_suffixes(self) -> frozenset[str]:
        return frozenset(a.string for a in self.suffixes if a.live)

    def live_prefixes(self) -> frozenset[str]:
        return frozenset(a.string for a in self.prefixes if a.live)

    def is_live(self, affix_id: str) -> bool:
        return affix_id in self.live_ids()

    def support(self) -> dict[str, int]:
        return {a.id: a.support for a in self}

    @property
    def live_count(self) -> int:
        return sum(a.live for a in self)

    def with_markers(self, marker_ids: Iterable[str], support: int = 0) -> "AffixSet":
        have = {a.string for a in self.markers}
        extra = tuple(Affix(MARKER, m, support) for m in marker_ids if m not in have)
        return replace(self, markers=self.markers + extra)

    def with_injected(self, suffixes: Iterable[str] = (), prefixes: Iterable[str] = (),
                      support: int = 1) -> "AffixSet":
        """Append extra live affixes (used to plant decoys in experiments)."""
        suf = self.suffixes + tuple(Affix(SUFFIX, s, support) for s in suffixes
                                    if s not in {a.string for a in self.suffixes})
        pre = self.prefixes + tuple(Affix(PREFIX, s, support) for s in prefixes
                                    if s not in {a.string for a in self.prefixes})
        return replace(self, suffixes=suf, prefixes=pre)


def _rank(counter: Counter, min_support: int) -> list[tuple[str, int]]:
    items = [(s, c) for s, c in counter.items() if c >= min_support]
    items.sort(key=lambda sc: (-sc[1], sc[0]))
    return items


def count_residues(vocab, min_parent_len: int = 3, max_affix_len: int = 6) -> tuple[Counter, Counter]:
    """Count suffix and prefix residues over in-vocabulary (child, parent) pairs."""
    words = set(vocab)
    suffixes: Counter = Counter()
    prefixes: Counter = Counter()
    for w in words:
        n = len(w)
        for i in range(max(min_parent_len, n - max_affix_len), n):
            if w[:i] in words:
                suffixes[w[i:]] += 1
            if w[n - i:] in words:
                prefixes[w[:n - i]] += 1
    return suffixes, prefixes


def extract_affixes(vocab, max_per_side: int = 500, min_support: int = 1, *,
                    min_parent_len: int = 3, max_affix_len: int = 6,
                    budget: str = "per_side", markers: Iterable[str] = ()) -> AffixSet:
    """Extract prefix/suffix inventories from string differences between words.

    Each ordered pair ``(w, p)`` of vocabulary words where ``p`` is a proper
    prefix of ``w`` contributes one occurrence of the suffix ``w[len(p):]``
    (and symmetrically for prefixes). With ``budget="total"`` the
    ``max_per_side`` bound applies to both sides combined.
    """
    if budget not in ("per_side", "total"):
        raise ValueError(f"unknown budget mode {budget!r}")
    suf_counts, pre_counts = count_residues(vocab, min_parent_len, max_affix_len)
    suf = _rank(suf_counts, min_support)
    pre = _rank(pre_counts, min_support)
    if budget == "per_side":
        suf, pre = suf[:max_per_side], pre[:max_per_side]
    else:
        both = sorted([(SUFFIX, s, c) for s, c in suf] + [(PREFIX, s, c) for s, c in pre],
                      key=lambda t: (-t[2], t[1], t[0]))[:max_per_side]
        suf = [(s, c) for side, s, c in both if side == SUFFIX]
        pre = [(s, c) for side, s, c in both if side == PREFIX]
    result = AffixSet(tuple(Affix(SUFFIX, s, c) for s, c in suf),
                      tuple(Affix(PREFIX, s, c) for s, c in pre))
    return result.with_markers(markers)


def prune(affixes: AffixSet, kept) -> AffixSet:
    """Return a copy in which exactly the ids in ``kept`` are live."""
    kept = frozenset(kept)
    live = affixes.live_ids()
    revived = kept - live
    if revived:
        raise AffixRevivalError(f"cannot keep dead or unknown affixes: {sorted(revived)}")

    def update(group):
        return tuple(a if (a.id in kept) == a.live else replace(a, live=a.id in kept)
                     for a in group)

    return AffixSet(update(affixes.suffixes), update(affixes.prefixes), update(affixes.markers))


def write_affixes(affixes: AffixSet, path) -> None:
    with open_text(path, "wt") as f:
        for a in affixes:
            f.write(f"{a.side}\t{a.string}\t{a.support}\t{int(a.live)}\n")


def read_affixes(path) -> AffixSet:
    groups: dict[str, list[Affix]] = {SUFFIX: [], PREFIX: [], MARKER: []}
    with open_text(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4 or parts[0] not in groups:
                raise ValueError(f"{path}:{lineno}: malformed affix line")
            side, s, support, live = parts
            groups[side].append(Affix(side, s, int(support), live == "1"))
    return AffixSet(tuple(groups[SUFFIX]), tuple(groups[PREFIX]), tuple(groups[MARKER]))
