import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morphforest import _pykernels, kernels

BACKENDS = kernels.backends()


def random_arrays(rng, n_words, K, max_cands=5):
    sizes = rng.integers(1, max_cands + 1, size=n_words)
    word_ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    n = int(word_ptr[-1])
    # coarse values so ties are common
    costs = rng.integers(0, 4, size=n).astype(float) / 4
    n_aff = rng.integers(0, min(K, 2) + 1, size=n)
    n_aff[word_ptr[:-1]] = 0
    aff_ptr = np.concatenate([[0], np.cumsum(n_aff)]).astype(np.int64)
    # affix lists come from sets, so no repeats within a candidate
    aff_idx = np.array([k for m in n_aff for k in sorted(rng.choice(K, size=m, replace=False))],
                       dtype=np.int64)
    pen = rng.choice([0.0, 0.25, 0.5, math.inf], size=K)
    return costs, word_ptr, aff_ptr, aff_idx, pen


def naive_choose(costs, word_ptr, aff_ptr, aff_idx, pen):
    choice, total = [], 0.0
    for i in range(len(word_ptr) - 1):
        vals = [costs[j] + sum(pen[k] for k in aff_idx[aff_ptr[j]:aff_ptr[j + 1]])
                for j in range(word_ptr[i], word_ptr[i + 1])]
        b = min(range(len(vals)), key=lambda t: (vals[t], t))
        choice.append(b)
        total += vals[b]
    return choice, total


def test_fallback_always_available():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS


def test_segment_softmax_example():
    lse, p = _pykernels.segment_softmax([0.0, 0.0, 1.0, 5.0], [0, 2, 3, 4])
    np.testing.assert_allclose(lse, [math.log(2), 1.0, 5.0])
    np.testing.assert_allclose(p, [0.5, 0.5, 1.0, 1.0])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 30), st.integers(0, 6))
def test_choose_matches_naive_on_all_backends(seed, n_words, K):
    rng = np.random.default_rng(seed)
    arrs = random_arrays(rng, n_words, K)
    ref_choice, ref_total = naive_choose(*arrs)
    for name, mod in BACKENDS.items():
        choice, total = mod.choose(*arrs)
        assert list(choice) == ref_choice, name
        assert total == pytest.approx(ref_total, rel=1e-12, abs=1e-12) or (
            math.isinf(total) and math.isinf(ref_total))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 30), st.integers(1, 6))
def test_closure_losses_match_naive_on_all_backends(seed, n_words, K):
    rng = np.random.default_rng(seed)
    costs, word_ptr, aff_ptr, aff_idx, pen = random_arrays(rng, n_words, K)
    pen = np.where(np.isinf(pen), 0.5, pen)
    choice, base = naive_choose(costs, word_ptr, aff_ptr, aff_idx, pen)
    ref = []
    for k in range(K):
        blocked = pen.copy()
        blocked[k] = math.inf
        # words whose current choice avoids k keep it; the others re-choose
        total = 0.0
        for i in range(n_words):
            j = word_ptr[i] + choice[i]
            uses = k in aff_idx[aff_ptr[j]:aff_ptr[j + 1]]
            sub = naive_choose(costs, word_ptr[i:i + 2], aff_ptr, aff_idx, blocked if uses else pen)
            total += sub[1]
        ref.append(total - base)
    for name, mod in BACKENDS.items():
        got = mod.closure_losses(costs, word_ptr, aff_ptr, aff_idx, pen, np.array(choice))
        for a, b in zip(got, ref):
            assert a == b or abs(a - b) <= 1e-12, name


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_segment_softmax_backends_agree(seed, n):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(1, 6, size=n)
    ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    x = rng.normal(size=int(ptr[-1])) * 50
    ref_lse, ref_p = _pykernels.segment_softmax(x, ptr)
    for mod in BACKENDS.values():
        lse, p = mod.segment_softmax(x, ptr)
        np.testing.assert_allclose(lse, ref_lse, rtol=1e-12)
        np.testing.assert_allclose(p, ref_p, rtol=1e-10, atol=1e-300)
        np.testing.assert_allclose(np.add.reduceat(p, ptr[:-1]), 1.0, rtol=1e-12)


def test_empty_inputs():
    for mod in BACKENDS.values():
        c, t = mod.choose(np.zeros(0), np.array([0]), np.array([0]), np.zeros(0, np.int64), np.zeros(0))
        assert len(c) == 0 and t == 0.0
        lse, p = mod.segment_softmax(np.zeros(0), np.array([0]))
        assert len(lse) == 0 and len(p) == 0


def test_env_var_forces_fallback():
    import os
    import subprocess
    import sys
    env = dict(os.environ, MORPHFOREST_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from morphforest import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
