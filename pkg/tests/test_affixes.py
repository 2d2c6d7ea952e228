import pytest
from hypothesis import given, strategies as st

from morphforest.affixes import (AffixRevivalError, AffixSet, count_residues, extract_affixes,
                                 prune, read_affixes, write_affixes)
from morphforest.corpus import Vocabulary


def vocab(*words):
    return Vocabulary.from_counts({w: 1 for w in words})


def test_extract_worked_example():
    # pairs: walks/walk, talks/talk -> "s" x2; walked/walk -> "ed" x1
    aff = extract_affixes(vocab("walk", "walks", "walked", "talk", "talks"), 5, 1)
    assert [(a.string, a.support) for a in aff.suffixes] == [("s", 2), ("ed", 1)]
    assert aff.prefixes == ()
    assert all(a.live for a in aff)


def test_prefix_extraction_and_min_support():
    v = vocab("do", "redo", "undo", "relay", "lay", "unlay", "play")
    # "do" is shorter than min_parent_len=3, so only the "lay" pairs count
    aff = extract_affixes(v, 5, 1)
    assert [(a.string, a.support) for a in aff.prefixes] == [("p", 1), ("re", 1), ("un", 1)]
    assert extract_affixes(v, 5, 2).prefixes == ()
    aff = extract_affixes(v, 5, 2, min_parent_len=2)
    assert [(a.string, a.support) for a in aff.prefixes] == [("re", 2), ("un", 2)]


def test_single_word_is_empty():
    aff = extract_affixes(vocab("walk"), 5)
    assert len(aff) == 0


def test_budget_modes():
    v = vocab("walk", "walks", "walked", "talk", "talks", "lay", "relay", "replay", "play")
    per = extract_affixes(v, 1)
    assert len(per.suffixes) == 1 and len(per.prefixes) == 1
    tot = extract_affixes(v, 1, budget="total")
    assert len(tot.suffixes) + len(tot.prefixes) == 1


def test_max_affix_len():
    aff = extract_affixes(vocab("walk", "walkingly"), 5, max_affix_len=4)
    assert aff.suffixes == ()


def test_prune_contract():
    aff = extract_affixes(vocab("walk", "walks", "walked", "talk", "talks"), 5)
    assert prune(aff, aff.live_ids()) == aff
    p = prune(aff, {"-s"})
    assert p.live_ids() == {"-s"}
    assert [a.support for a in p] == [a.support for a in aff]
    assert aff.live_count == 2  # copy on prune
    with pytest.raises(AffixRevivalError):
        prune(p, {"-s", "-ed"})
    with pytest.raises(AffixRevivalError):
        prune(p, {"-zz"})
    assert prune(p, set()).live_count == 0


def test_markers_are_prunable():
    aff = extract_affixes(vocab("walk", "walks"), 5, markers=("+rep", "+del:e"))
    assert aff.live_ids() == {"-s", "+rep", "+del:e"}
    assert prune(aff, {"-s"}).live_ids() == {"-s"}


def test_no_duplicates():
    from morphforest.affixes import Affix, SUFFIX
    with pytest.raises(ValueError):
        AffixSet((Affix(SUFFIX, "s", 1), Affix(SUFFIX, "s", 2)))


def test_tsv_round_trip(tmp_path):
    aff = extract_affixes(vocab("walk", "walks", "walked", "relay", "lay"), 5, markers=("+rep",))
    aff = prune(aff, {"-s", "+rep"})
    write_affixes(aff, tmp_path / "a.tsv")
    assert read_affixes(tmp_path / "a.tsv") == aff
    assert (tmp_path / "a.tsv").read_text().splitlines()[0] == "suffix\ted\t1\t0"


words = st.lists(st.text("abc", min_size=1, max_size=7), min_size=1, max_size=25, unique=True)


@given(words, st.integers(1, 3))
def test_support_is_real(ws, min_support):
    v = vocab(*ws)
    aff = extract_affixes(v, 500, min_support)
    for a in aff.suffixes:
        pairs = [w for w in ws if w.endswith(a.string) and len(w) > len(a.string)
                 and len(w) - len(a.string) >= 3 and w[:len(w) - len(a.string)] in v]
        assert len(pairs) == a.support >= min_support
    keys = [(-a.support, a.string) for a in aff.suffixes]
    assert keys == sorted(keys)
    assert extract_affixes(v, 500, min_support) == aff


@given(words, st.data())
def test_live_count_non_increasing(ws, data):
    aff = extract_affixes(vocab(*ws), 500)
    counts = [aff.live_count]
    for _ in range(3):
        live = sorted(aff.live_ids())
        kept = data.draw(st.lists(st.sampled_from(live), unique=True)) if live else []
        aff = prune(aff, kept)
        counts.append(aff.live_count)
    assert counts == sorted(counts, reverse=True)


def test_count_residues_counts_pairs():
    suf, pre = count_residues(["walk", "walks", "walkss"], min_parent_len=3)
    assert suf == {"s": 2, "ss": 1}
    assert not pre
