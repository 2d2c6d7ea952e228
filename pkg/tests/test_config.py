import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from morphforest.config import ConfigError, RunConfig


def test_defaults():
    cfg = RunConfig().validate()
    assert (cfg.alpha, cfg.beta, cfg.affixes_per_side, cfg.rounds) == (1e-4, 0.5, 500, 5)
    assert (cfg.top_k, cfg.lr, cfg.iters, cfg.exact_limit) == (10000, 0.5, 300, 24)


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(0, 10), beta=st.floats(0, 10), rounds=st.integers(1, 20),
       sibl=st.booleans(), mode=st.sampled_from(["auto", "exact", "greedy", "off"]),
       delete=st.sampled_from([None, (), ("e",), ("e", "a")]),
       modify=st.sampled_from([None, (("i", "y"),), (("i", "y"), ("v", "f"))]))
def test_text_round_trip(alpha, beta, rounds, sibl, mode, delete, modify):
    cfg = RunConfig(alpha=alpha, beta=beta, rounds=rounds, sibl=sibl, ilp_mode=mode,
                    delete_chars=delete, modify_table=modify)
    back = RunConfig.from_text(cfg.to_text())
    assert back == cfg
    assert back.digest() == cfg.digest()


def test_file_with_comments_and_base(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# run\nalpha = 0.01  # small\n\nsibl = yes\nilp-mode = greedy\n")
    cfg = RunConfig.from_file(p, base=RunConfig(beta=0.9))
    assert (cfg.alpha, cfg.beta, cfg.sibl, cfg.ilp_mode) == (0.01, 0.9, True, "greedy")


@pytest.mark.parametrize("text", ["alpha 1", "nope = 1", "rounds = x", "sibl = maybe"])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        RunConfig.from_text(text)


@pytest.mark.parametrize("field,value", [
    ("alpha", -1.0), ("beta", -0.1), ("rounds", 0), ("lr", 0.0), ("l2", -1.0),
    ("ilp_mode", "simplex"), ("language", "klingon"), ("affix_budget", "some"),
])
def test_validation(field, value):
    with pytest.raises(ConfigError):
        dataclasses.replace(RunConfig(), **{field: value}).validate()


def test_negative_beta_escape():
    RunConfig(beta=-0.5, allow_negative_beta=True).validate()


def test_digest_changes_with_config():
    assert RunConfig().digest() != RunConfig(alpha=0.2).digest()


def test_language_profile_feeds_candidates():
    assert RunConfig(language="english").candidate_config().transforms
    assert RunConfig(language="english", transforms=False).candidate_config().transforms is False
