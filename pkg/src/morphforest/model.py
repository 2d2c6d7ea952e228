"""Log-linear edge model trained by contrastive estimation with full-batch Adam."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from . import kernels
from .candidates import Candidate, Neighborhood
from .corpus import open_text
from .features import FeatureIndex, SparseVector

log = logging.getLogger(__name__)

CHECKPOINT_HEADER = "# morphforest-model\tv1"


class NonFiniteError(FloatingPointError):
    pass


def cand_logits(w: str, cands: Sequence[Candidate], theta: np.ndarray,
                featurize: Callable[[str, Candidate], SparseVector]) -> np.ndarray:
    """Score each candidate of ``w`` and store its log Pr(z | w) on the candidate."""
    if not cands:
        raise ValueError(f"empty candidate set for {w!r}")
    logits = np.array([featurize(w, z).dot(theta) for z in cands])
    lse, _ = kernels.segment_softmax(logits, np.array([0, len(logits)]))
    for z, lp in zip(cands, logits - lse[0]):
        z.log_prob = float(lp)
    return logits


@dataclass
class Problem:
    """A batch of words compiled into a sparse design matrix.

    Rows of ``X`` are (string, candidate) pairs grouped by string; string
    ``s`` owns rows ``row_ptr[s]:row_ptr[s+1]``. ``own[v]`` is the string
    index of batch word ``v`` and its neighborhood is
    ``nbr_idx[nbr_ptr[v]:nbr_ptr[v+1]]``.
    """

    words: list[str]
    strings: list[str]
    cands: list[list[Candidate]]
    X: sp.csr_matrix
    row_ptr: np.ndarray
    own: np.ndarray
    nbr_ptr: np.ndarray
    nbr_idx: np.ndarray

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def word_candidates(self, v: int) -> list[Candidate]:
        return self.cands[self.own[v]]


def build_problem(words: Sequence[str], gen: Callable[[str], list[Candidate]],
                  neighbors: Callable[[str], Neighborhood],
                  featurize: Callable[[str, Candidate], SparseVector],
                  n_features: Callable[[], int] | int) -> Problem:
    """Featurize every candidate of every word and of every neighbor string.

    ``n_features`` may be a callable evaluated after featurization so that a
    growing :class:`FeatureIndex` can size the matrix.
    """
    sid: dict[str, int] = {}
    strings: list[str] = []
    nbr_ptr = [0]
    nbr_idx: list[int] = []

    def intern(s):
        i = sid.get(s)
        if i is None:
            i = sid[s] = len(strings)
            strings.append(s)
        return i

    own = [intern(w) for w in words]
    for w in words:
        nb = neighbors(w)
        if w not in nb.neighbors:
            raise ValueError(f"neighborhood of {w!r} must contain the word itself")
        nbr_idx.extend(intern(s) for s in nb.neighbors)
        nbr_ptr.append(len(nbr_idx))

    cands: list[list[Candidate]] = []
    row_ptr = [0]
    indptr = [0]
    indices: list[np.ndarray] = []
    data: list[np.ndarray] = []
    nnz = 0
    for s in strings:
        cs = gen(s)
        if not cs:
            raise ValueError(f"empty candidate set for {s!r}")
        cands.append(cs)
        for z in cs:
            vec = featurize(s, z)
            indices.append(vec.ids)
            data.append(vec.values)
            nnz += len(vec.ids)
            indptr.append(nnz)
        row_ptr.append(row_ptr[-1] + len(cs))
    dim = n_features() if callable(n_features) else n_features
    X = sp.csr_matrix(
        (np.concatenate(data) if data else np.zeros(0),
         np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64),
         np.array(indptr)),
        shape=(row_ptr[-1], dim))
    return Problem(list(words), strings, cands, X, np.array(row_ptr, dtype=np.int64),
                   np.array(own, dtype=np.int64), np.array(nbr_ptr, dtype=np.int64),
                   np.array(nbr_idx, dtype=np.int64))


def ce_loss_and_grad(problem: Problem, theta: np.ndarray, l2: float = 0.0):
    """Contrastive-estimation negative log-likelihood and its gradient.

    For each batch word ``v`` the loss term is
    ``LSE_{v' in N(v), z' in C(v')} - LSE_{z in C(v)}`` of the scores
    ``theta . phi``; the gradient is the difference of the feature
    expectations under the neighborhood and the word's own candidates.
    """
    logits = problem.X @ theta
    lse_s, probs = kernels.segment_softmax(logits, problem.row_ptr)
    lse_n, pi = kernels.segment_softmax(lse_s[problem.nbr_idx], problem.nbr_ptr)
    loss = float(np.sum(lse_n - lse_s[problem.own]))
    n_str = len(problem.strings)
    weight = (np.bincount(problem.nbr_idx, weights=pi, minlength=n_str)
              - np.bincount(problem.own, minlength=n_str))
    rows = probs * np.repeat(weight, np.diff(problem.row_ptr))
    grad = problem.X.T @ rows
    if l2:
        loss += 0.5 * l2 * float(theta @ theta)
        grad = grad + l2 * theta
    return loss, np.asarray(grad, dtype=np.float64)


def candidate_log_probs(problem: Problem, theta: np.ndarray) -> list[np.ndarray]:
    """Within-C(v) log-probabilities for every batch word, as used by the ILP."""
    logits = problem.X @ theta
    lse_s, _ = kernels.segment_softmax(logits, problem.row_ptr)
    out = []
    for s in problem.own:
        a, b = problem.row_ptr[s], problem.row_ptr[s + 1]
        out.append(logits[a:b] - lse_s[s])
    return out


@dataclass
class AdamState:
    lr: float = 0.5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    losses: list[float] = field(default_factory=list)

    def resize(self, n: int) -> None:
        """Grow the moment vectors when the feature space grows; new entries start at 0."""
        for name in ("m", "v"):
            cur = getattr(self, name)
            if cur is None:
                setattr(self, name, np.zeros(n))
            elif len(cur) < n:
                setattr(self, name, np.concatenate([cur, np.zeros(n - len(cur))]))


def adam_fit(problem: Problem, theta0: np.ndarray, iters: int, state: AdamState | None = None,
             l2: float = 0.0) -> np.ndarray:
    """Run ``iters`` full-batch Adam updates from ``theta0``.

    Loss values (before each update, then once at the end) are appended to
    ``state.losses``.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    state = state if state is not None else AdamState()
    theta = np.array(theta0, dtype=np.float64)
    state.resize(len(theta))
    b1, b2 = state.beta1, state.beta2
    for _ in range(iters):
        loss, grad = ce_loss_and_grad(problem, theta, l2)
        if not math.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise NonFiniteError(f"non-finite loss/gradient at Adam step {state.step}: "
                                 f"loss={loss}, |theta|max={np.max(np.abs(theta), initial=0.0)}")
        state.losses.append(loss)
        if len(theta) == 0:
            continue
        state.step += 1
        state.m *= b1
        state.m += (1.0 - b1) * grad
        state.v *= b2
        state.v += (1.0 - b2) * grad * grad
        mhat = state.m / (1.0 - b1 ** state.step)
        vhat = state.v / (1.0 - b2 ** state.step)
        theta -= state.lr * mhat / (np.sqrt(vhat) + state.eps)
    final, _ = ce_loss_and_grad(problem, theta, l2)
    state.losses.append(final)
    log.debug("adam: %d steps, loss %.6f -> %.6f", iters, state.losses[-iters - 1], final)
    return theta


def save_checkpoint(path, index: FeatureIndex, theta: np.ndarray) -> None:
    with open_text(path, "wt") as f:
        f.write(CHECKPOINT_HEADER + "\n")
        for name, w in zip(index.names, theta):
            f.write(f"{name}\t{float(w)!r}\n")


def load_checkpoint(path) -> tuple[FeatureIndex, np.ndarray]:
    with open_text(path) as f:
        header = f.readline().rstrip("\n")
        if header != CHECKPOINT_HEADER:
            raise ValueError(f"{path}: not a model checkpoint (header {header!r})")
        names, weights = [], []
        for lineno, line in enumerate(f, 2):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                name, w = line.rsplit("\t", 1)
                weights.append(float(w))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed checkpoint line") from None
            names.append(name)
    return FeatureIndex(names).freeze(), np.array(weights, dtype=np.float64)


def write_loss_curve(path, losses: Sequence[float]) -> None:
    with open(path, "w") as f:
        f.write("iter,loss\n")
        for i, v in enumerate(losses):
            f.write(f"{i},{v!r}\n")
