import math
import sys

import numpy as np
import pytest

from morphforest.corpus import Vocabulary, WordVectors
from morphforest.ilp import build_instance
from morphforest.metrics import boundaries
from morphforest.synthbench import GrammarSpec, fixture_config, generate


def random_instance(rng, max_words=100, max_affixes=12, alpha=None, beta=None, normalize=True):
    """Random forest ILP with log-probabilities ~ log U(0,1), optionally normalized per word."""
    n = int(rng.integers(1, max_words + 1))
    K = int(rng.integers(0, max_affixes + 1))
    ids = [f"-a{k}" for k in range(K)]
    lps, affs = [], []
    for _ in range(n):
        nc = 1 if K == 0 else int(rng.integers(1, 6))
        raw = np.log(rng.uniform(1e-12, 1.0, size=nc))
        lp = raw - np.log(np.exp(raw).sum()) if normalize else raw
        cand = [frozenset()]
        for _ in range(nc - 1):
            m = int(rng.integers(1, min(2, K) + 1))
            cand.append(frozenset(rng.choice(ids, size=m, replace=False).tolist()))
        lps.append(lp)
        affs.append(cand)
    a = float(rng.uniform(0, 0.05)) if alpha is None else alpha
    b = float(rng.uniform(0, 1.0)) if beta is None else beta
    return build_instance([f"w{i}" for i in range(n)], lps, affs, ids, a, b)


@pytest.fixture(scope="session")
def synth():
    return generate(GrammarSpec())


@pytest.fixture(scope="session")
def synth_vocab(synth):
    return Vocabulary.from_counts(synth.counts)


@pytest.fixture(scope="session")
def synth_vectors(synth):
    return WordVectors(synth.spec.vector_dim, synth.vectors)


@pytest.fixture(scope="session")
def synth_gold(synth):
    return {w: [boundaries(m)] for w, m in synth.segmentations.items()}


@pytest.fixture(scope="session")
def trained(synth_vocab, synth_vectors, synth_gold):
    from morphforest.pipeline import train
    return train(synth_vocab, synth_vectors, fixture_config(), gold=synth_gold)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def isclose(a, b, tol=1e-12):
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
