"""Evaluation: boundary precision/recall, family clustering, root accuracy."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import CorpusError, normalize, open_text


class GoldFormatError(CorpusError):
    def __init__(self, path, lineno, msg):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {msg}")


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, p: float, r: float) -> "PRF":
        return cls(p, r, 2 * p * r / (p + r) if p + r > 0 else 0.0)

    @classmethod
    def from_counts(cls, tp: float, fp: float, fn: float) -> "PRF":
        # no predictions (no gold) means nothing was wrongly claimed (missed)
        p = tp / (tp + fp) if tp + fp > 0 else 1.0
        r = tp / (tp + fn) if tp + fn > 0 else 1.0
        return cls.from_pr(p, r)


@dataclass(frozen=True)
class BPRResult:
    prf: PRF
    tp: int
    fp: int
    fn: int
    words: int

    def to_dict(self) -> dict:
        return {"task": "segmentation", "P": self.prf.precision, "R": self.prf.recall,
                "F1": self.prf.f1, "counts": {"tp": self.tp, "fp": self.fp, "fn": self.fn,
                                              "words": self.words}}


def boundaries(morphs: Sequence[str]) -> frozenset[int]:
    """Internal split positions of a morph sequence."""
    out, pos = [], 0
    for m in morphs[:-1]:
        pos += len(m)
        out.append(pos)
    return frozenset(out)


def morphs_from_boundaries(word: str, cuts: Iterable[int]) -> list[str]:
    pts = [0, *sorted(c for c in set(cuts) if 0 < c < len(word)), len(word)]
    return [word[a:b] for a, b in zip(pts, pts[1:])]


def _word_counts(pred: frozenset, gold: frozenset) -> tuple[int, int, int]:
    tp = len(pred & gold)
    return tp, len(pred) - tp, len(gold) - tp


def bpr(pred: Mapping[str, Iterable[int]], gold: Mapping[str, Sequence[Iterable[int]]],
        macro: bool = False) -> BPRResult:
    """Boundary precision/recall/F1.

    ``gold`` maps each word to its alternative analyses as boundary sets. Per
    word the alternative with the best F1 against the prediction is used
    (ties: more true positives, then the earlier alternative). Counts are
    micro-aggregated; ``macro=True`` averages per-word P and R instead.
    """
    missing = sorted(w for w in pred if w not in gold)
    if missing:
        raise EvaluationError(f"predictions for words absent from gold: {missing[:10]}")
    TP = FP = FN = 0
    ps, rs = [], []
    for w in sorted(pred):
        pb = frozenset(pred[w])
        best = None
        for alt in gold[w]:
            tp, fp, fn = _word_counts(pb, frozenset(alt))
            key = (PRF.from_counts(tp, fp, fn).f1, tp)
            if best is None or key > best[0]:
                best = (key, (tp, fp, fn))
        tp, fp, fn = best[1]
        TP, FP, FN = TP + tp, FP + fp, FN + fn
        if macro:
            prf = PRF.from_counts(tp, fp, fn)
            ps.append(prf.precision)
            rs.append(prf.recall)
    if macro:
        n = max(len(ps), 1)
        prf = PRF.from_pr(sum(ps) / n if ps else 1.0, sum(rs) / n if rs else 1.0)
    else:
        prf = PRF.from_counts(TP, FP, FN)
    return BPRResult(prf, TP, FP, FN, len(pred))


@dataclass(frozen=True)
class ClusterResult:
    C: float
    I: float
    D: float
    prf: PRF
    words: int

    def to_dict(self) -> dict:
        return {"task": "clustering", "P": self.prf.precision, "R": self.prf.recall,
                "F1": self.prf.f1, "counts": {"C": self.C, "I": self.I, "D": self.D,
                                              "words": self.words}}


def _as_assignment(clusters) -> dict[str, object]:
    if isinstance(clusters, Mapping):
        return dict(clusters)
    out = {}
    for cid, members in enumerate(clusters):
        for w in members:
            out[w] = cid
    return out


def cluster_prf(pred, gold) -> ClusterResult:
    """Correct / inserted / deleted word counts between predicted and gold families.

    ``pred`` and ``gold`` are either ``word -> cluster id`` maps or iterables
    of member sets. Only words present in both are evaluated, and clusters
    are restricted to those words.
    """
    pa, ga = _as_assignment(pred), _as_assignment(gold)
    shared = sorted(set(pa) & set(ga))
    if not shared:
        raise EvaluationError("predicted and gold clusterings share no words")
    px: dict[object, set] = {}
    gy: dict[object, set] = {}
    for w in shared:
        px.setdefault(pa[w], set()).add(w)
        gy.setdefault(ga[w], set()).add(w)
    C = I = D = 0.0
    for w in shared:
        X, Y = px[pa[w]], gy[ga[w]]
        C += len(X & Y) / len(Y)
        I += len(X - Y) / len(Y)
        D += len(Y - X) / len(Y)
    p = C / (C + I) if C + I > 0 else 0.0
    r = C / (C + D) if C + D > 0 else 0.0
    return ClusterResult(C, I, D, PRF.from_pr(p, r), len(shared))


def root_accuracy(pred: Mapping[str, str], gold: Mapping[str, Iterable[str]],
                  lowercase: bool = True) -> float:
    """Fraction of shared words whose predicted root matches any gold root."""
    shared = [w for w in pred if w in gold]
    if not shared:
        raise EvaluationError("predicted and gold roots share no words")
    hits = 0
    for w in shared:
        acceptable = {normalize(r, lowercase) for r in gold[w]}
        hits += normalize(pred[w], lowercase) in acceptable
    return hits / len(shared)


def _records(path):
    with open_text(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise GoldFormatError(path, lineno, "expected two tab-separated fields")
            yield lineno, parts[0], parts[1]


def load_segmentations(path, lowercase: bool = True) -> dict[str, list[list[str]]]:
    """``word<TAB>m1 m2, m1' m2'`` -> word -> list of alternative morph lists.

    Duplicate words are merged (alternatives deduplicated).
    """
    gold: dict[str, list[list[str]]] = {}
    for lineno, word, rest in _records(path):
        word = normalize(word, lowercase)
        alts = []
        for alt in rest.split(","):
            morphs = [normalize(m, lowercase) for m in alt.split()]
            if "".join(morphs) != word:
                raise GoldFormatError(path, lineno, f"morphs {morphs} do not spell {word!r}")
            alts.append(morphs)
        have = gold.setdefault(word, [])
        for a in alts:
            if a not in have:
                have.append(a)
    return gold


def gold_boundaries(gold: Mapping[str, list[list[str]]]) -> dict[str, list[frozenset[int]]]:
    return {w: [boundaries(a) for a in alts] for w, alts in gold.items()}


def load_clusters(path, lowercase: bool = True, word_first: bool = True) -> dict[str, str]:
    """``word<TAB>cluster_id`` (or ``cluster_id<TAB>word`` with ``word_first=False``)."""
    out = {}
    for lineno, a, b in _records(path):
        word, cid = (a, b) if word_first else (b, a)
        out[normalize(word, lowercase)] = cid
    return out


def load_roots(path, lowercase: bool = True) -> dict[str, set[str]]:
    """``word<TAB>root1|root2`` -> word -> acceptable roots."""
    out: dict[str, set[str]] = {}
    for lineno, word, roots in _records(path):
        rs = {normalize(r, lowercase) for r in roots.split("|") if r}
        if not rs:
            raise GoldFormatError(path, lineno, "no root given")
        out.setdefault(normalize(word, lowercase), set()).update(rs)
    return out


def write_report(path, report: dict) -> None:
    with open(path, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")


def prf_dict(prf: PRF) -> dict:
    return asdict(prf)
