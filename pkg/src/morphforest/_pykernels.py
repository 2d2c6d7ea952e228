"""Pure numpy implementations of the hot kernels.

Each function mirrors the compiled version in ``_ckernels.pyx`` and must
return identical choices; totals may differ in the last ulp because numpy
uses pairwise summation.

Array conventions: candidates of word ``i`` occupy ``word_ptr[i]:word_ptr[i+1]``
and the affix indices of candidate ``j`` are ``aff_idx[aff_ptr[j]:aff_ptr[j+1]]``.
"""
import numpy as np


def segment_softmax(x, ptr):
    """Per-segment logsumexp and within-segment softmax of ``x``.

    Segments must be non-empty.
    """
    x = np.asarray(x, dtype=np.float64)
    ptr = np.asarray(ptr, dtype=np.int64)
    sizes = np.diff(ptr)
    if len(sizes) == 0:
        return np.zeros(0), np.zeros(0)
    m = np.maximum.reduceat(x, ptr[:-1])
    shifted = np.exp(x - np.repeat(m, sizes))
    s = np.add.reduceat(shifted, ptr[:-1])
    lse = m + np.log(s)
    probs = shifted / np.repeat(s, sizes)
    return lse, probs


def _candidate_values(costs, aff_ptr, aff_idx, penalty):
    n = len(costs)
    owner = np.repeat(np.arange(n), np.diff(aff_ptr))
    pen = np.bincount(owner, weights=penalty[aff_idx], minlength=n) if len(owner) else np.zeros(n)
    return costs + pen


def _first_argmin(values, word_ptr):
    sizes = np.diff(word_ptr)
    mins = np.minimum.reduceat(values, word_ptr[:-1])
    hit = values == np.repeat(mins, sizes)
    pos = np.where(hit, np.arange(len(values)), len(values))
    first = np.minimum.reduceat(pos, word_ptr[:-1])
    return first - word_ptr[:-1], mins


def choose(costs, word_ptr, aff_ptr, aff_idx, penalty):
    """Per-word cheapest candidate under per-affix penalties.

    A candidate's value is its cost plus the penalties of its affixes
    (``inf`` blocks it). Ties go to the lowest index. Returns the local
    choice per word and the summed value.
    """
    costs = np.asarray(costs, dtype=np.float64)
    word_ptr = np.asarray(word_ptr, dtype=np.int64)
    if len(word_ptr) <= 1:
        return np.zeros(0, dtype=np.int64), 0.0
    values = _candidate_values(costs, np.asarray(aff_ptr, dtype=np.int64),
                               np.asarray(aff_idx, dtype=np.int64),
                               np.asarray(penalty, dtype=np.float64))
    choice, mins = _first_argmin(values, word_ptr)
    total = 0.0
    for v in mins.tolist():
        total += v
    return choice.astype(np.int64), total


def _ranges(starts, sizes):
    """Concatenation of ``arange(s, s + n)`` for each (s, n)."""
    total = int(sizes.sum())
    offsets = np.cumsum(sizes) - sizes
    return np.repeat(starts - offsets, sizes) + np.arange(total)


def closure_losses(costs, word_ptr, aff_ptr, aff_idx, penalty, choice):
    """Increase in summed value if each affix were additionally blocked.

    Only words whose current choice uses affix ``k`` change, so
    ``loss[k] = sum_i (best value of i avoiding k) - (current value of i)``.
    """
    costs = np.asarray(costs, dtype=np.float64)
    word_ptr = np.asarray(word_ptr, dtype=np.int64)
    aff_ptr = np.asarray(aff_ptr, dtype=np.int64)
    aff_idx = np.asarray(aff_idx, dtype=np.int64)
    penalty = np.asarray(penalty, dtype=np.float64)
    K = len(penalty)
    loss = np.zeros(K)
    if len(word_ptr) <= 1 or K == 0:
        return loss
    values = _candidate_values(costs, aff_ptr, aff_idx, penalty)
    chosen = word_ptr[:-1] + np.asarray(choice, dtype=np.int64)
    counts = np.diff(aff_ptr)[chosen]
    if counts.sum() == 0:
        return loss
    pair_word = np.repeat(np.arange(len(chosen)), counts)
    pair_aff = aff_idx[_ranges(aff_ptr[chosen], counts)]
    sizes = np.diff(word_ptr)[pair_word]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    cand = _ranges(word_ptr[pair_word], sizes)
    k_rep = np.repeat(pair_aff, sizes)
    owner = np.repeat(np.arange(len(costs)), np.diff(aff_ptr))
    has = np.isin(cand * K + k_rep, owner * K + aff_idx)
    alt_vals = np.where(has, np.inf, values[cand])
    alt = np.minimum.reduceat(alt_vals, offsets[:-1])
    cur = values[chosen][pair_word]
    np.add.at(loss, pair_aff, alt - cur)
    return loss
