"""Alternating training and forest decoding.

Each round fits the log-linear edge model by contrastive estimation, solves
the forest ILP on the resulting edge log-probabilities, and prunes every
affix the ILP left closed. Training stops after ``cfg.rounds`` rounds or as
soon as a round rejects no affix.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import ilp as ilp_mod
from .affixes import AffixSet, extract_affixes, prune
from .candidates import Candidate, CandidateGenerator, DerivationType, gen_neighbors
from .config import RunConfig
from .corpus import Vocabulary, WordVectors, open_text
from .features import (FeatureContext, FeatureIndex, build_sibling_table, featurize,
                       sibling_table_from_edges)
from .metrics import bpr, morphs_from_boundaries
from .model import AdamState, adam_fit, build_problem, candidate_log_probs

log = logging.getLogger(__name__)

STOP = DerivationType.STOP


@dataclass(frozen=True)
class Edge:
    parent: str
    dtype: DerivationType
    affixes: frozenset = frozenset()
    log_prob: float = 0.0
    # suffix/prefix string, or the non-head part of a compound
    affix: str = ""

    @classmethod
    def from_candidate(cls, z: Candidate, log_prob: float) -> "Edge":
        return cls(z.parent, z.dtype, z.affixes, float(log_prob), z.affix)


@dataclass
class Forest:
    """One outgoing edge per node.

    ``vocab`` lists the words the ILP assigned; other nodes are induced
    out-of-vocabulary parents whose edges were decoded with the final model.
    """

    edges: dict[str, Edge]
    vocab: tuple[str, ...]

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def vocab_edges(self):
        return ((w, self.edges[w]) for w in self.vocab)

    def stop_count(self, vocab_only: bool = False) -> int:
        it = self.vocab_edges() if vocab_only else self.edges.items()
        return sum(e.dtype is STOP for _, e in it)

    def affixes_used(self) -> frozenset:
        used: set = set()
        for _, e in self.vocab_edges():
            used |= e.affixes
        return frozenset(used)

    def write(self, path) -> None:
        with open_text(path, "wt") as f:
            induced = sorted(set(self.edges) - set(self.vocab))
            for w in list(self.vocab) + induced:
                e = self.edges[w]
                f.write(f"{w}\t{e.parent}\t{e.dtype.value}\t{','.join(sorted(e.affixes))}\t"
                        f"{e.log_prob!r}\n")

    @classmethod
    def read(cls, path, vocab) -> "Forest":
        edges = {}
        with open_text(path) as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 5:
                    raise ValueError(f"{path}:{lineno}: expected 5 fields")
                child, parent, dtype, affs, lp = parts
                dt = DerivationType(dtype)
                edges[child] = Edge(parent, dt, frozenset(a for a in affs.split(",") if a),
                                    float(lp), _affix_string(child, parent, dt, affs.split(",")))
        return cls(edges, tuple(w for w in vocab if w in edges))


def _affix_string(child: str, parent: str, dtype: DerivationType, affixes) -> str:
    """Recover an edge's affix string (or compound partner) from its endpoints and affix ids."""
    if dtype is DerivationType.COMPOUND_LEFT:
        return child[len(parent):]
    if dtype is DerivationType.COMPOUND_RIGHT:
        return child[:len(child) - len(parent)]
    for a in affixes:
        if a.endswith("-"):
            return a[:-1]
        if a.startswith("-"):
            return a[1:]
    return ""


def _tie_key(z: Candidate):
    return (z.parent, z.dtype.value)


class EdgeModel:
    """Trained edge scorer used to decode strings the ILP did not assign."""

    def __init__(self, vocab: Vocabulary, vectors: WordVectors, affixes: AffixSet,
                 index: FeatureIndex, theta: np.ndarray, cfg: RunConfig,
                 siblings: Mapping[str, int] | None = None):
        self.vocab = vocab
        self.affixes = affixes
        self.index = index
        self.theta = theta
        self.cfg = cfg
        self.fcfg = cfg.feature_config()
        self.ctx = FeatureContext(vocab, vectors, siblings or {})
        self.gen = CandidateGenerator(vocab, affixes, cfg.candidate_config())

    def best_edge(self, w: str) -> Edge:
        """Highest-probability edge for ``w``; ties prefer STOP, then smaller parents."""
        cands = self.gen(w)
        logits = np.array([featurize(w, z, self.ctx, self.index, self.fcfg).dot(self.theta)
                           for z in cands])
        m = logits.max()
        lse = m + np.log(np.exp(logits - m).sum())
        best = min(range(len(cands)), key=lambda j: (-logits[j], j != 0, _tie_key(cands[j])))
        return Edge.from_candidate(cands[best], logits[best] - lse)


class ForestModel:
    """A forest plus the model that extends it to unseen strings."""

    def __init__(self, forest: Forest, model: EdgeModel | None = None):
        self.forest = forest
        self.model = model
        self._inferred: dict[str, Edge] = {}

    def edge(self, w: str) -> Edge:
        e = self.forest.edges.get(w)
        if e is not None:
            return e
        e = self._inferred.get(w)
        if e is None:
            if self.model is None:
                raise KeyError(f"{w!r} is not in the forest and no model is available")
            e = self._inferred[w] = self.model.best_edge(w)
        return e


def _edge_source(fm) -> ForestModel:
    if isinstance(fm, ForestModel):
        return fm
    if isinstance(fm, Forest):
        return ForestModel(fm)
    raise TypeError(f"expected Forest or ForestModel, got {type(fm).__name__}")


def chain(w: str, fm) -> list[tuple[str, Edge]]:
    """``(node, edge)`` pairs from ``w`` to its STOP node."""
    src = _edge_source(fm)
    out = []
    node = w
    while True:
        e = src.edge(node)
        out.append((node, e))
        if e.dtype is STOP:
            return out
        if len(e.parent) >= len(node):
            raise ValueError(f"edge {node!r} -> {e.parent!r} does not shrink")
        node = e.parent


def segment_boundaries(w: str, fm) -> frozenset[int]:
    """Surface boundary positions of ``w`` obtained by following its derivation."""
    src = _edge_source(fm)
    e = src.edge(w)
    t = e.dtype
    if t is STOP:
        return frozenset()
    if t is DerivationType.SUFFIX or t is DerivationType.REPEAT:
        return segment_boundaries(e.parent, src) | {len(e.parent)}
    if t is DerivationType.PREFIX:
        k = len(w) - len(e.parent)
        return frozenset({k} | {k + b for b in segment_boundaries(e.parent, src)})
    if t is DerivationType.DELETE or t is DerivationType.MODIFY:
        stem_len = len(w) - len(e.affix)
        inner = {b for b in segment_boundaries(e.parent, src) if b < stem_len}
        return frozenset(inner | {stem_len})
    if t.is_compound:
        if t is DerivationType.COMPOUND_LEFT:
            left, right = e.parent, w[len(e.parent):]
        else:
            left, right = w[:len(w) - len(e.parent)], e.parent
        k = len(left)
        return frozenset(segment_boundaries(left, src) | {k}
                         | {k + b for b in segment_boundaries(right, src)})
    raise ValueError(f"unknown derivation type {t}")


def segment(w: str, fm) -> list[str]:
    """Morph sequence of ``w``."""
    return morphs_from_boundaries(w, segment_boundaries(w, fm))


def root_of(w: str, fm) -> str:
    """The STOP node reached from ``w`` (restored form for DELETE/MODIFY edges)."""
    return chain(w, fm)[-1][0]


def families(fm) -> dict[str, list[str]]:
    """Vocabulary words grouped by root; induced parents key clusters but are not members."""
    src = _edge_source(fm)
    out: dict[str, list[str]] = {}
    for w in src.forest.vocab:
        out.setdefault(root_of(w, src), []).append(w)
    return {r: sorted(ms) for r, ms in sorted(out.items())}


def score_forest(forest: Forest, alpha: float, beta: float) -> float:
    """Mean negative edge log-probability + alpha |affixes used| + beta |F| / |V|.

    Computed over the vocabulary edges the ILP assigned, where |E| = |V| and
    |F| is the number of STOP edges.
    """
    n = forest.vocab_size
    if n == 0:
        return 0.0
    nll = -sum(e.log_prob for _, e in forest.vocab_edges()) / n
    return nll + alpha * len(forest.affixes_used()) + beta * forest.stop_count(vocab_only=True) / n


def check_forest(forest: Forest) -> list[str]:
    """Structural invariant violations (empty when the forest is valid)."""
    problems = []
    for w in forest.vocab:
        if w not in forest.edges:
            problems.append(f"vocabulary word {w!r} has no edge")
    roots_seen = {}
    for w, e in forest.edges.items():
        if e.dtype is STOP:
            if e.parent != w:
                problems.append(f"STOP edge of {w!r} points to {e.parent!r}")
            continue
        if len(e.parent) >= len(w):
            problems.append(f"edge {w!r} -> {e.parent!r} does not shrink")
        if e.parent not in forest.edges:
            problems.append(f"parent {e.parent!r} of {w!r} has no edge")
    if problems:
        return problems
    for w in forest.edges:
        roots_seen.setdefault(root_of(w, forest), []).append(w)
    if len(roots_seen) != forest.stop_count():
        problems.append(f"{len(roots_seen)} trees but {forest.stop_count()} STOP edges")
    return problems


@dataclass
class RoundStats:
    round: int
    losses: list[float]
    live_affixes: int
    rejected: list[str]
    ilp_objective: float | None
    ilp_proof: str | None
    score: float
    seconds: float
    bpr_f1: float | None = None

    def to_dict(self) -> dict:
        # wall-clock time is left out so reruns write identical reports
        return {"round": self.round, "final_loss": self.losses[-1] if self.losses else None,
                "adam_iters": max(len(self.losses) - 1, 0), "live_affixes": self.live_affixes,
                "rejected": len(self.rejected), "ilp_objective": self.ilp_objective,
                "ilp_proof": self.ilp_proof, "score": self.score, "bpr_f1": self.bpr_f1}


@dataclass
class TrainReport:
    rounds: list[RoundStats]
    initial_affixes: int
    affixes: AffixSet
    forest: Forest
    model: ForestModel
    index: FeatureIndex
    theta: np.ndarray
    history: list[AffixSet] = field(default_factory=list)

    @property
    def live_counts(self) -> list[int]:
        return [self.initial_affixes] + [r.live_affixes for r in self.rounds]

    def to_dict(self) -> dict:
        return {"initial_affixes": self.initial_affixes,
                "rounds": [r.to_dict() for r in self.rounds],
                "final_live_affixes": self.affixes.live_count,
                "trees": self.forest.stop_count(vocab_only=True),
                "vocab_size": self.forest.vocab_size}


def _induce_parents(edges: dict[str, Edge], model: EdgeModel) -> None:
    """Decode edges for out-of-vocabulary parents until every chain reaches STOP."""
    todo = sorted({e.parent for e in edges.values() if e.parent not in edges})
    while todo:
        nxt = set()
        for p in todo:
            if p in edges:
                continue
            e = edges[p] = model.best_edge(p)
            if e.parent not in edges:
                nxt.add(e.parent)
        todo = sorted(nxt)


def train(vocab: Vocabulary, vectors: WordVectors | None = None, cfg: RunConfig = RunConfig(), *,
          gold=None, inject_suffixes=(), inject_prefixes=()) -> TrainReport:
    """Alternate contrastive estimation and the forest ILP.

    ``gold`` (word -> list of boundary sets) enables a per-round boundary F1
    in the report. ``inject_*`` plant extra live affixes after extraction.
    With ``cfg.ilp_mode == "off"`` one round is run and the forest is the
    per-word argmax of the local model.
    """
    cfg.validate()
    if len(vocab) == 0:
        raise ValueError("empty vocabulary")
    vectors = vectors if vectors is not None else WordVectors.empty()
    ccfg = cfg.candidate_config()
    fcfg = cfg.feature_config()
    affixes = extract_affixes(vocab, cfg.affixes_per_side, cfg.min_support,
                              min_parent_len=cfg.min_parent_len, max_affix_len=cfg.max_affix_len,
                              budget=cfg.affix_budget, markers=ccfg.marker_ids())
    if inject_suffixes or inject_prefixes:
        affixes = affixes.with_injected(inject_suffixes, inject_prefixes)
    initial = affixes.live_count
    history = [affixes]
    words = vocab.words
    index = FeatureIndex()
    theta = np.zeros(0)
    siblings = build_sibling_table(vocab, affixes, ccfg) if fcfg.sibl else {}
    rounds: list[RoundStats] = []
    edges: dict[str, Edge] = {}
    n_rounds = 1 if cfg.ilp_mode == "off" else cfg.rounds

    for t in range(1, n_rounds + 1):
        t0 = time.perf_counter()
        gen = CandidateGenerator(vocab, affixes, ccfg)
        ctx = FeatureContext(vocab, vectors, siblings)
        nbr = lambda w: gen_neighbors(w, ccfg.max_neighbors, ccfg.seed)
        feat = lambda w, z: featurize(w, z, ctx, index, fcfg)
        problem = build_problem(words, gen, nbr, feat, lambda: len(index))
        if cfg.warm_start:
            theta = np.concatenate([theta, np.zeros(len(index) - len(theta))])
        else:
            theta = np.zeros(len(index))
        state = AdamState(lr=cfg.lr)
        theta = adam_fit(problem, theta, cfg.iters, state, cfg.l2)
        log_probs = candidate_log_probs(problem, theta)
        cand_sets = [problem.word_candidates(v) for v in range(len(words))]

        if cfg.ilp_mode == "off":
            choice = [min(range(len(lp)), key=lambda j: (-lp[j], j != 0, _tie_key(cs[j])))
                      for lp, cs in zip(log_probs, cand_sets)]
            objective = proof = None
            rejected: list[str] = []
        else:
            used_ids = sorted(set().union(*(z.affixes for cs in cand_sets for z in cs)))
            support = affixes.support()
            inst = ilp_mod.build_instance(
                words, log_probs, [[z.affixes for z in cs] for cs in cand_sets], used_ids,
                cfg.alpha, cfg.beta, tie_keys=[[_tie_key(z) for z in cs] for cs in cand_sets],
                support={a: support.get(a, 0) for a in used_ids},
                allow_negative_beta=cfg.allow_negative_beta)
            sol = ilp_mod.solve(inst, cfg.ilp_mode, cfg.exact_limit, cfg.node_budget)
            choice = list(sol.choice)
            objective, proof = sol.objective, sol.proof
            live = affixes.live_ids()
            rejected = sorted(live - sol.open_affixes)
            affixes = prune(affixes, sol.open_affixes & live)
            history.append(affixes)

        edges = {w: Edge.from_candidate(cs[j], lp[j])
                 for w, cs, lp, j in zip(words, cand_sets, log_probs, choice)}
        forest = Forest(dict(edges), tuple(words))
        score = score_forest(forest, cfg.alpha, cfg.beta)
        stats = RoundStats(t, list(state.losses), affixes.live_count, rejected, objective, proof,
                           score, time.perf_counter() - t0)
        if gold is not None:
            frozen = FeatureIndex(index.names).freeze()
            src = ForestModel(forest, EdgeModel(vocab, vectors, affixes, frozen, theta, cfg,
                                                siblings))
            pred = {w: segment_boundaries(w, src) for w in words if w in gold}
            stats.bpr_f1 = bpr(pred, gold).prf.f1
        rounds.append(stats)
        log.info("round %d: loss %.4f, live affixes %d (-%d), objective %s, %.1fs",
                 t, state.losses[-1], affixes.live_count, len(rejected),
                 "n/a" if objective is None else f"{objective:.6f}", stats.seconds)
        if fcfg.sibl:
            siblings = sibling_table_from_edges({w: (e.parent, e.dtype) for w, e in edges.items()})
        if cfg.ilp_mode != "off" and not rejected:
            break

    index.freeze()
    model = EdgeModel(vocab, vectors, affixes, index, theta, cfg, siblings)
    _induce_parents(edges, model)
    forest = Forest(edges, tuple(words))
    return TrainReport(rounds, initial, affixes, forest, ForestModel(forest, model), index, theta,
                       history)

