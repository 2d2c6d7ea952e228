"""The forest ILP: choose one candidate edge per word and a set of open affixes.

minimize  -(1/|V|) sum_ij x_ij p_ij + alpha sum_k y_k + (beta/|V|) sum_i x_i1
s.t.      sum_j x_ij = 1 for every word i
          x_ij <= y_k for every affix k used by candidate j of word i

For a fixed affix assignment ``y`` the program decomposes per word, so both
solvers search over ``y`` and evaluate leaves with a per-word argmin kernel.
"""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels

log = logging.getLogger(__name__)

EXACT = "exact"
HEURISTIC = "heuristic"


class IlpError(ValueError):
    pass


@dataclass(frozen=True)
class IlpInstance:
    """Candidate costs and affix requirements for every word.

    ``log_probs[i][j]`` is p_ij; candidate 0 of every word is the STOP edge
    and uses no affixes. ``tie_keys[i][j]`` orders equal-cost candidates
    (smaller wins); the default prefers STOP, then lower candidate index.
    """

    words: tuple[str, ...]
    log_probs: tuple[np.ndarray, ...]
    cand_affixes: tuple[tuple[frozenset, ...], ...]
    affix_ids: tuple[str, ...]
    alpha: float
    beta: float
    tie_keys: tuple[tuple, ...] | None = None
    support: dict | None = None
    _compiled: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_words(self) -> int:
        return len(self.words)

    @property
    def n_affixes(self) -> int:
        return len(self.affix_ids)

    def costs(self, i: int) -> np.ndarray:
        """Per-candidate objective contribution of word ``i`` (excluding alpha)."""
        n = max(self.n_words, 1)
        c = -np.asarray(self.log_probs[i], dtype=np.float64) / n
        c[0] += self.beta / n
        return c

    def objective(self, choice: Sequence[int], open_affixes) -> float:
        """Objective value of an assignment, recomputed from scratch."""
        total = 0.0
        for i, j in enumerate(choice):
            total += float(self.costs(i)[j])
        return total + self.alpha * len(open_affixes)

    def is_feasible(self, choice: Sequence[int], open_affixes) -> bool:
        if len(choice) != self.n_words:
            return False
        opened = set(open_affixes)
        for i, j in enumerate(choice):
            if not 0 <= j < len(self.log_probs[i]):
                return False
            if not self.cand_affixes[i][j] <= opened:
                return False
        return True

    def compiled(self):
        """Flat arrays in tie-break order: (costs, word_ptr, aff_ptr, aff_idx, perm)."""
        if "arrays" in self._compiled:
            return self._compiled["arrays"]
        kid = {a: k for k, a in enumerate(self.affix_ids)}
        costs, perm, aff_ptr, aff_idx = [], [], [0], []
        word_ptr = [0]
        for i in range(self.n_words):
            c = self.costs(i)
            keys = self.tie_keys[i] if self.tie_keys is not None else range(len(c))
            order = sorted(range(len(c)), key=lambda j: (j != 0, keys[j]))
            for j in order:
                costs.append(c[j])
                perm.append(j)
                aff_idx.extend(sorted(kid[a] for a in self.cand_affixes[i][j]))
                aff_ptr.append(len(aff_idx))
            word_ptr.append(len(costs))
        arrays = (np.array(costs, dtype=np.float64), np.array(word_ptr, dtype=np.int64),
                  np.array(aff_ptr, dtype=np.int64), np.array(aff_idx, dtype=np.int64),
                  np.array(perm, dtype=np.int64))
        self._compiled["arrays"] = arrays
        return arrays


def build_instance(words: Sequence[str], log_probs: Sequence[Sequence[float]],
                   cand_affixes: Sequence[Sequence], affix_ids: Sequence[str],
                   alpha: float, beta: float, *, tie_keys=None, support=None,
                   allow_negative_beta: bool = False) -> IlpInstance:
    """Validate inputs and assemble an :class:`IlpInstance`.

    Negative ``beta`` is clamped to 0 unless ``allow_negative_beta``.
    """
    if alpha < 0:
        raise IlpError("alpha must be non-negative")
    if beta < 0 and not allow_negative_beta:
        beta = 0.0
    if not (len(words) == len(log_probs) == len(cand_affixes)):
        raise IlpError("words, log_probs and cand_affixes must have equal length")
    known = set(affix_ids)
    if len(known) != len(affix_ids):
        raise IlpError("duplicate affix ids")
    lps, affs = [], []
    for w, lp, ca in zip(words, log_probs, cand_affixes):
        lp = np.asarray(lp, dtype=np.float64)
        if len(lp) == 0:
            raise IlpError(f"word {w!r} has no candidates (STOP must exist)")
        if len(lp) != len(ca):
            raise IlpError(f"word {w!r}: {len(lp)} costs but {len(ca)} affix sets")
        if not np.all(np.isfinite(lp)):
            raise IlpError(f"word {w!r}: non-finite log-probability")
        ca = tuple(frozenset(a) for a in ca)
        if ca[0]:
            raise IlpError(f"word {w!r}: candidate 0 must be STOP (no affixes)")
        for a in ca:
            if not a <= known:
                raise IlpError(f"word {w!r} uses unknown affixes {sorted(a - known)}")
        lps.append(lp)
        affs.append(ca)
    if tie_keys is not None:
        tie_keys = tuple(tuple(t) for t in tie_keys)
    return IlpInstance(tuple(words), tuple(lps), tuple(affs), tuple(affix_ids),
                       float(alpha), float(beta), tie_keys, dict(support) if support else None)


@dataclass(frozen=True)
class IlpSolution:
    choice: tuple[int, ...]
    open_affixes: frozenset
    objective: float
    proof: str
    nodes: int = 0


def _finish(inst: IlpInstance, local_choice: np.ndarray, proof: str, nodes: int = 0) -> IlpSolution:
    """Map kernel-local choices back to caller indices; open exactly the used affixes."""
    _, word_ptr, _, _, perm = inst.compiled()
    choice = tuple(int(perm[word_ptr[i] + c]) for i, c in enumerate(local_choice))
    used = frozenset().union(*(inst.cand_affixes[i][j] for i, j in enumerate(choice))) \
        if choice else frozenset()
    return IlpSolution(choice, used, inst.objective(choice, used), proof, nodes)


def per_word_argmax(inst: IlpInstance) -> IlpSolution:
    """Every word takes its highest-probability candidate (no global terms)."""
    local = []
    _, word_ptr, _, _, perm = inst.compiled()
    for i in range(inst.n_words):
        lp = inst.log_probs[i]
        order = perm[word_ptr[i]:word_ptr[i + 1]]
        best = max(range(len(order)), key=lambda t: (lp[order[t]], -t))
        local.append(best)
    return _finish(inst, np.array(local, dtype=np.int64), HEURISTIC)


def solve_greedy(inst: IlpInstance) -> IlpSolution:
    """Affix-drop local search.

    Starts with every affix open and each word at its cheapest candidate,
    then repeatedly closes the affix whose closure lowers the objective the
    most (unused affixes are closed in bulk, since closing them saves alpha
    and changes no choice) until no single closure helps.
    """
    costs, word_ptr, aff_ptr, aff_idx, _ = inst.compiled()
    K = inst.n_affixes
    closed = np.zeros(K, dtype=bool)
    pen = np.zeros(K)
    choice, _ = kernels.choose(costs, word_ptr, aff_ptr, aff_idx, pen)
    while True:
        used = np.zeros(K, dtype=bool)
        sel = word_ptr[:-1] + choice
        for t in _chosen_affix_positions(aff_ptr, sel):
            used[aff_idx[t]] = True
        unused = ~closed & ~used
        if unused.any():
            closed |= unused
            pen[unused] = math.inf
        open_used = np.flatnonzero(~closed)
        if len(open_used) == 0:
            break
        loss = kernels.closure_losses(costs, word_ptr, aff_ptr, aff_idx, pen, choice)
        delta = loss[open_used] - inst.alpha
        best = int(np.argmin(delta))
        if not delta[best] < 0:
            break
        k = open_used[best]
        closed[k] = True
        pen[k] = math.inf
        choice, _ = kernels.choose(costs, word_ptr, aff_ptr, aff_idx, pen)
    return _finish(inst, choice, HEURISTIC)


def _chosen_affix_positions(aff_ptr, sel):
    starts = aff_ptr[sel]
    ends = aff_ptr[sel + 1]
    counts = ends - starts
    if counts.sum() == 0:
        return np.zeros(0, dtype=np.int64)
    offsets = np.cumsum(counts) - counts
    return np.repeat(starts - offsets, counts) + np.arange(int(counts.sum()))


def _branch_order(inst: IlpInstance, costs, word_ptr, aff_ptr, aff_idx) -> list[int]:
    """Affixes by descending support x potential saving, ties by id."""
    K = inst.n_affixes
    n_cands = len(costs)
    owner_word = np.repeat(np.arange(inst.n_words), np.diff(word_ptr))
    base = np.full(inst.n_words, math.inf)
    has_aff = np.diff(aff_ptr) > 0
    np.minimum.at(base, owner_word[~has_aff], costs[~has_aff])
    best_with = np.full((K,), 0.0)
    usage = np.zeros(K)
    per_word_best: dict[tuple[int, int], float] = {}
    owner_cand = np.repeat(np.arange(n_cands), np.diff(aff_ptr))
    for t, k in enumerate(aff_idx):
        j = owner_cand[t]
        i = owner_word[j]
        usage[k] += 1
        key = (i, int(k))
        if costs[j] < per_word_best.get(key, math.inf):
            per_word_best[key] = costs[j]
    for (i, k), c in per_word_best.items():
        best_with[k] += max(0.0, base[i] - c)
    support = inst.support or {}
    score = [(max(support.get(a, 0), 1) if support else usage[k]) * best_with[k]
             for k, a in enumerate(inst.affix_ids)]
    return sorted(range(K), key=lambda k: (-score[k], inst.affix_ids[k]))


def solve_exact(inst: IlpInstance, node_budget: int = 2_000_000) -> IlpSolution:
    """Branch-and-bound over affix indicators.

    Lower bound at a node: each word takes its cheapest candidate that avoids
    closed affixes, where an undecided affix ``k`` is charged
    ``alpha / n_k`` per word using it (``n_k`` = number of words with any
    candidate using ``k``), plus ``alpha`` per affix fixed open. Since opening
    ``k`` costs ``alpha`` and at most ``n_k`` words can share it, this never
    exceeds the best completion. The incumbent is seeded by
    :func:`solve_greedy`. If the node budget runs out the incumbent is
    returned with ``proof="heuristic"``.
    """
    costs, word_ptr, aff_ptr, aff_idx, _ = inst.compiled()
    K = inst.n_affixes
    incumbent = solve_greedy(inst)
    best_val = incumbent.objective
    best_local = None
    if K == 0:
        choice, _ = kernels.choose(costs, word_ptr, aff_ptr, aff_idx, np.zeros(0))
        return _finish(inst, choice, EXACT, 1)

    owner_word = np.repeat(np.arange(inst.n_words), np.diff(word_ptr))
    owner_cand = np.repeat(np.arange(len(costs)), np.diff(aff_ptr))
    n_k = np.zeros(K)
    for k in range(K):
        n_k[k] = len(np.unique(owner_word[owner_cand[aff_idx == k]]))
    share = np.where(n_k > 0, inst.alpha / np.maximum(n_k, 1), 0.0)
    rank = {k: r for r, k in enumerate(_branch_order(inst, costs, word_ptr, aff_ptr, aff_idx))}
    tol = 1e-12 * max(1.0, abs(best_val))

    # node state per affix: 0 undecided, 1 open, -1 closed
    nodes = 0
    exhausted = False
    stack = [np.zeros(K, dtype=np.int8)]
    while stack:
        status = stack.pop()
        nodes += 1
        if nodes > node_budget:
            exhausted = True
            break
        n_open = int(np.sum(status == 1))
        pen = np.where(status == -1, math.inf, np.where(status == 0, share, 0.0))
        choice, val = kernels.choose(costs, word_ptr, aff_ptr, aff_idx, pen)
        bound = val + inst.alpha * n_open
        if bound >= best_val - tol:
            continue
        sel = word_ptr[:-1] + choice
        pending = {int(k) for k in aff_idx[_chosen_affix_positions(aff_ptr, sel)]
                   if status[k] == 0}
        if not pending:
            # the relaxed choice avoids every undecided affix, so closing them
            # all attains the bound: this subtree is solved
            best_val, best_local = bound, choice
            continue
        k = min(pending, key=rank.__getitem__)
        closed_child = status.copy()
        closed_child[k] = -1
        open_child = status.copy()
        open_child[k] = 1
        # pop the open branch first: the relaxation wants k
        stack.append(closed_child)
        stack.append(open_child)

    if best_local is None:
        sol = incumbent
        result = IlpSolution(sol.choice, sol.open_affixes, sol.objective,
                             HEURISTIC if exhausted else EXACT, nodes)
    else:
        result = _finish(inst, best_local, HEURISTIC if exhausted else EXACT, nodes)
        if result.objective > incumbent.objective:
            result = IlpSolution(incumbent.choice, incumbent.open_affixes,
                                 incumbent.objective, result.proof, nodes)
    if exhausted:
        warnings.warn(f"branch-and-bound node budget ({node_budget}) exhausted; "
                      "returning best incumbent", RuntimeWarning, stacklevel=2)
    return result


def solve(inst: IlpInstance, mode: str = "auto", exact_limit: int = 24,
          node_budget: int = 2_000_000) -> IlpSolution:
    """Dispatch to the exact or greedy solver (``auto`` switches at ``exact_limit`` affixes)."""
    if mode == "auto":
        mode = "exact" if inst.n_affixes <= exact_limit else "greedy"
    if mode == "exact":
        return solve_exact(inst, node_budget)
    if mode == "greedy":
        return solve_greedy(inst)
    raise ValueError(f"unknown ILP mode {mode!r}")


def brute_force(inst: IlpInstance) -> IlpSolution:
    """Enumerate all 2^K affix subsets; reference oracle for small K.

    Deliberately independent of the kernels and the search code: candidate
    affix sets become bitmasks and each subset is scored with numpy.
    """
    K = inst.n_affixes
    if K > 20:
        raise IlpError("brute force limited to 20 affixes")
    kid = {a: k for k, a in enumerate(inst.affix_ids)}
    costs = [inst.costs(i) for i in range(inst.n_words)]
    flat = np.concatenate(costs) if costs else np.zeros(0)
    bits = np.array([sum(1 << kid[a] for a in affs)
                     for i in range(inst.n_words) for affs in inst.cand_affixes[i]], dtype=np.int64)
    starts = np.cumsum([0] + [len(c) for c in costs])[:-1]
    best = None
    for mask in range(1 << K):
        allowed = (bits & ~mask) == 0
        vals = np.where(allowed, flat, np.inf)
        mins = np.minimum.reduceat(vals, starts) if len(starts) else np.zeros(0)
        total = float(np.sum(mins)) + inst.alpha * bin(mask).count("1")
        if best is None or total < best[0] - 1e-15:
            best = (total, mask)
    mask = best[1]
    opened = frozenset(inst.affix_ids[k] for k in range(K) if mask >> k & 1)
    choice = []
    for i, c in enumerate(costs):
        allowed = [j for j in range(len(c)) if inst.cand_affixes[i][j] <= opened]
        choice.append(min(allowed, key=lambda j: c[j]))
    return IlpSolution(tuple(choice), opened, inst.objective(choice, opened), EXACT, 1 << K)


def _var(i, j):
    return f"x_{i}_{j}"


def _coef(v: float) -> str:
    return f"{v:+.17g}"


def export_lp(inst: IlpInstance, path) -> None:
    """Write the program in CPLEX LP format for cross-checking with MILP solvers."""
    kid = {a: k for k, a in enumerate(inst.affix_ids)}
    lines = ["\\ morphforest forest ILP", "Minimize", " obj:"]
    terms = []
    for i in range(inst.n_words):
        for j, c in enumerate(inst.costs(i)):
            terms.append(f"{_coef(c)} {_var(i, j)}")
    terms += [f"{_coef(inst.alpha)} y_{k}" for k in range(inst.n_affixes)]
    lines += ["   " + t for t in terms]
    lines.append("Subject To")
    for i in range(inst.n_words):
        row = " + ".join(_var(i, j) for j in range(len(inst.log_probs[i])))
        lines.append(f" one_{i}: {row} = 1")
    for i in range(inst.n_words):
        for j, affs in enumerate(inst.cand_affixes[i]):
            for a in sorted(affs):
                k = kid[a]
                lines.append(f" link_{i}_{j}_{k}: {_var(i, j)} - y_{k} <= 0")
    lines.append("Binary")
    for i in range(inst.n_words):
        lines += [" " + _var(i, j) for j in range(len(inst.log_probs[i]))]
    lines += [f" y_{k}" for k in range(inst.n_affixes)]
    lines.append("End")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    log.debug("wrote LP with %d words, %d affixes to %s", inst.n_words, inst.n_affixes, path)


def save_instance(inst: IlpInstance, path) -> None:
    """JSON-lines snapshot: a header object, then one object per word."""
    with open(path, "w") as f:
        f.write(json.dumps({"alpha": inst.alpha, "beta": inst.beta,
                            "affix_ids": list(inst.affix_ids)}) + "\n")
        for i, w in enumerate(inst.words):
            f.write(json.dumps({
                "word": w,
                "log_probs": [float(x) for x in inst.log_probs[i]],
                "affixes": [sorted(a) for a in inst.cand_affixes[i]],
            }, ensure_ascii=False) + "\n")


def load_instance(path) -> IlpInstance:
    with open(path) as f:
        header = json.loads(f.readline())
        words, lps, affs = [], [], []
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            words.append(rec["word"])
            lps.append(rec["log_probs"])
            affs.append([frozenset(a) for a in rec["affixes"]])
    return build_instance(words, lps, affs, header["affix_ids"], header["alpha"],
                          header["beta"], allow_negative_beta=True)
