import math

import numpy as np
from hypothesis import given, strategies as st

from morphforest.affixes import extract_affixes
from morphforest.candidates import Candidate, DerivationType as D
from morphforest.corpus import Vocabulary, WordVectors
from morphforest.features import (FeatureConfig, FeatureContext, FeatureIndex,
                                  build_sibling_table, feature_dict, featurize, freq_bin,
                                  siblings, sibling_table_from_edges)


def ctx_for(counts, vectors=None, sib=None):
    v = Vocabulary.from_counts(counts)
    return FeatureContext(v, vectors or WordVectors.empty(), sib or {})


def test_stop_features():
    f = feature_dict("walks", Candidate("walks", "walks", D.STOP), ctx_for({"walks": 3}))
    assert f["type=STOP"] == 1 and f["begin=wa"] == 1 and f["end=ks"] == 1
    assert not any(k.startswith("affix=") for k in f)


def test_suffix_features():
    ctx = ctx_for({"walks": 3, "walk": 7})
    z = Candidate("walks", "walk", D.SUFFIX, frozenset({"-s"}), "s")
    f = feature_dict("walks", z, ctx)
    assert f["affix=-s"] == 1 and f["type=SUFFIX"] == 1
    assert f["SUFFIX:stem_bigram=lk"] == 1 and f["SUFFIX:affix_bigram=s$"] == 1
    assert f["parent_in_vocab"] == 1
    # log1p(7) = 2.079 -> bin 2 at width 1
    assert f["freq_bin=2"] == 1 and freq_bin(7, FeatureConfig()) == 2
    assert f["cos_oov"] == 1


def test_cosine_feature():
    vec = WordVectors(2, {"walks": np.array([1.0, 0.0]), "walk": np.array([1.0, 1.0])})
    ctx = ctx_for({"walks": 3, "walk": 7}, vec)
    f = feature_dict("walks", Candidate("walks", "walk", D.SUFFIX, frozenset({"-s"}), "s"), ctx)
    assert math.isclose(f["cos"], 1 / math.sqrt(2))


def test_prefix_bigrams():
    ctx = ctx_for({"repaint": 1})
    f = feature_dict("repaint", Candidate("repaint", "paint", D.PREFIX, frozenset({"re-"}), "re"), ctx)
    assert f["PREFIX:stem_bigram=re"] == 1 and f["PREFIX:affix_bigram=pa"] == 1
    assert f["freq_bin=0"] == 1 and "parent_in_vocab" not in f


def test_faithful_siblings():
    v = Vocabulary.from_counts({"faith": 5, "faithful": 2, "faithless": 1})
    aff = extract_affixes(v, 5)
    table = build_sibling_table(v, aff)
    assert table["faith"] == 2
    assert siblings(table, "faith") == 1
    ctx = FeatureContext(v, WordVectors.empty(), table)
    z = Candidate("faithful", "faith", D.SUFFIX, frozenset({"-ful"}), "ful")
    f = feature_dict("faithful", z, ctx, FeatureConfig(sibl=True))
    assert math.isclose(f["sibl"], math.log(2))
    assert "sibl" not in feature_dict("faithful", z, ctx, FeatureConfig(sibl=False))


def test_spotty_not_a_sibling():
    v = Vocabulary.from_counts({"spot": 3, "spotless": 1, "spotty": 1})
    aff = extract_affixes(v, 5).with_injected([])
    from morphforest.affixes import prune
    aff = prune(aff, {"-less"})
    table = build_sibling_table(v, aff)
    assert siblings(table, "spot") == 0
    empty = prune(aff, set())
    assert build_sibling_table(v, empty) == {}


def test_sibling_table_from_edges():
    t = sibling_table_from_edges({"a1": ("a", D.SUFFIX), "a2": ("a", D.SUFFIX), "a": ("a", D.STOP)})
    assert t == {"a": 2}


def test_compound_features():
    ctx = ctx_for({"foot": 20, "ball": 3, "football": 1})
    z = Candidate("football", "foot", D.COMPOUND_LEFT, frozenset(), "ball")
    f = feature_dict("football", z, ctx, FeatureConfig(comp=True))
    assert f["comp_both_in_vocab"] == 1
    assert f[f"comp_min_freq_bin={freq_bin(3, FeatureConfig())}"] == 1
    assert "comp_both_in_vocab" not in feature_dict("football", z, ctx, FeatureConfig())


def test_frozen_index_drops_unseen():
    idx = FeatureIndex(["a", "b"])
    assert idx.add("c") == 2
    idx.freeze()
    assert idx.add("d") is None and len(idx) == 3
    ctx = ctx_for({"walks": 1})
    vec = featurize("walks", Candidate("walks", "walks", D.STOP), ctx, idx)
    assert len(vec.ids) == 0


@given(st.text("abcs", min_size=2, max_size=8))
def test_sparse_vector_contract(w):
    ctx = ctx_for({w: 2, w[:-1]: 3})
    idx = FeatureIndex()
    for z in (Candidate(w, w, D.STOP), Candidate(w, w[:-1], D.SUFFIX, frozenset({"-" + w[-1]}), w[-1])):
        a = featurize(w, z, ctx, idx)
        assert list(a.ids) == sorted(set(a.ids))
        assert np.all(np.isfinite(a.values)) and np.all(a.values != 0)
        b = featurize(w, z, ctx, idx)
        np.testing.assert_array_equal(a.ids, b.ids)
        np.testing.assert_array_equal(a.values, b.values)
