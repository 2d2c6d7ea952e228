import re
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morphforest import ilp, kernels
from morphforest.ilp import (IlpError, brute_force, build_instance, export_lp, load_instance,
                             per_word_argmax, save_instance, solve, solve_exact, solve_greedy)

from conftest import random_instance


@pytest.fixture(params=sorted(kernels.backends()))
def backend(request, monkeypatch):
    mod = kernels.backends()[request.param]
    for name in ("choose", "closure_losses", "segment_softmax"):
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


def check_solution(inst, sol):
    assert inst.is_feasible(sol.choice, sol.open_affixes)
    used = set().union(*(inst.cand_affixes[i][j] for i, j in enumerate(sol.choice)))
    assert used == set(sol.open_affixes)
    assert abs(inst.objective(sol.choice, sol.open_affixes) - sol.objective) <= 1e-12


@pytest.mark.parametrize("seed", range(40))
def test_exact_matches_brute_force(seed, backend):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, max_words=40, max_affixes=10)
    sol = solve_exact(inst)
    ref = brute_force(inst)
    check_solution(inst, sol)
    assert sol.proof == "exact"
    assert abs(sol.objective - ref.objective) <= 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_greedy_is_feasible_and_not_better_than_exact(seed, backend):
    rng = np.random.default_rng(1000 + seed)
    inst = random_instance(rng, max_words=60, max_affixes=12)
    g = solve_greedy(inst)
    check_solution(inst, g)
    assert g.proof == "heuristic"
    assert g.objective >= brute_force(inst).objective - 1e-12


def test_zero_penalties_give_argmax():
    rng = np.random.default_rng(3)
    for _ in range(20):
        inst = random_instance(rng, alpha=0.0, beta=0.0)
        sol = solve(inst, "exact")
        am = per_word_argmax(inst)
        assert sol.choice == am.choice
        for i, j in enumerate(sol.choice):
            assert inst.log_probs[i][j] == inst.log_probs[i].max()


def test_hand_instance():
    # two words share "-s"; opening it pays off only because both use it
    lp = [np.log([0.3, 0.7]), np.log([0.3, 0.7]), np.log([1.0])]
    affs = [[frozenset(), {"-s"}], [frozenset(), {"-s"}], [frozenset()]]
    n = 3
    gain = 2 * (np.log(0.7) - np.log(0.3)) / n
    inst = build_instance(["a", "b", "c"], lp, affs, ["-s"], alpha=gain - 1e-6, beta=0.0)
    assert solve_exact(inst).open_affixes == {"-s"}
    inst = build_instance(["a", "b", "c"], lp, affs, ["-s"], alpha=gain + 1e-6, beta=0.0)
    sol = solve_exact(inst)
    assert sol.open_affixes == frozenset() and sol.choice == (0, 0, 0)


def test_beta_pushes_off_stop():
    lp = [np.log([0.6, 0.4])]
    affs = [[frozenset(), {"-s"}]]
    lo = build_instance(["a"], lp, affs, ["-s"], alpha=0.0, beta=0.0)
    hi = build_instance(["a"], lp, affs, ["-s"], alpha=0.0, beta=1.0)
    assert solve(lo).choice == (0,) and solve(hi).choice == (1,)


def test_negative_beta_clamped_unless_allowed():
    lp, affs = [np.log([0.5, 0.5])], [[frozenset(), {"-s"}]]
    assert build_instance(["a"], lp, affs, ["-s"], 0.0, -1.0).beta == 0.0
    assert build_instance(["a"], lp, affs, ["-s"], 0.0, -1.0, allow_negative_beta=True).beta == -1.0


@pytest.mark.parametrize("bad", [
    dict(alpha=-1.0),
    dict(lp=[[]], affs=[[]]),
    dict(lp=[[0.0, np.nan]]),
    dict(affs=[[frozenset({"-s"}), frozenset()]]),
    dict(affs=[[frozenset(), frozenset({"-x"})]]),
    dict(ids=["-s", "-s"]),
    dict(words=["a", "b"]),
])
def test_invalid_instances(bad):
    args = dict(words=["a"], lp=[[0.0, -1.0]], affs=[[frozenset(), frozenset({"-s"})]],
                ids=["-s"], alpha=0.1)
    args.update(bad)
    with pytest.raises(IlpError):
        build_instance(args["words"], args["lp"], args["affs"], args["ids"], args["alpha"], 0.0)


def test_node_budget_warns_and_returns_incumbent():
    rng = np.random.default_rng(11)
    inst = random_instance(rng, max_words=100, max_affixes=12, alpha=0.001)
    while inst.n_affixes < 8:
        inst = random_instance(rng, max_words=100, max_affixes=12, alpha=0.001)
    with pytest.warns(RuntimeWarning, match="budget"):
        sol = solve_exact(inst, node_budget=1)
    assert sol.proof == "heuristic"
    check_solution(inst, sol)


def test_auto_mode_switch():
    rng = np.random.default_rng(5)
    inst = random_instance(rng, max_affixes=12)
    while inst.n_affixes < 3:
        inst = random_instance(rng, max_affixes=12)
    assert solve(inst, "auto", exact_limit=inst.n_affixes).proof == "exact"
    assert solve(inst, "auto", exact_limit=inst.n_affixes - 1).proof == "heuristic"
    with pytest.raises(ValueError):
        solve(inst, "simplex")


def test_tie_keys_break_equal_costs():
    lp = [np.log([0.2, 0.4, 0.4])]
    affs = [[frozenset(), frozenset(), frozenset()]]
    a = build_instance(["w"], lp, affs, [], 0.0, 0.0, tie_keys=[[(0,), ("b",), ("a",)]])
    b = build_instance(["w"], lp, affs, [], 0.0, 0.0, tie_keys=[[(0,), ("a",), ("b",)]])
    assert solve(a).choice == (2,) and solve(b).choice == (1,)


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    inst = random_instance(rng)
    save_instance(inst, tmp_path / "inst.jsonl")
    back = load_instance(tmp_path / "inst.jsonl")
    assert back.words == inst.words and back.affix_ids == inst.affix_ids
    assert back.alpha == inst.alpha and back.beta == inst.beta
    assert all(np.array_equal(a, b) for a, b in zip(back.log_probs, inst.log_probs))
    assert back.cand_affixes == inst.cand_affixes
    assert solve_exact(back).objective == solve_exact(inst).objective


def parse_lp(path):
    """Minimal reader for the LP files written by ``export_lp``."""
    text = open(path).read().split("\n")
    sec = None
    obj, rows, binaries = {}, [], []
    term = re.compile(r"([+-][0-9.e+-]+)\s+(\w+)")
    for line in text:
        s = line.strip()
        if s in ("Minimize", "Subject To", "Binary", "End"):
            sec = s
            continue
        if not s or s.startswith("\\"):
            continue
        if sec == "Minimize" and not s.startswith("obj:"):
            m = term.fullmatch(s)
            obj[m.group(2)] = float(m.group(1))
        elif sec == "Subject To":
            _, expr = s.split(":", 1)
            lhs, op, rhs = re.split(r"\s*(<=|=)\s*", expr.strip())
            coefs = {}
            for tok in re.findall(r"([+-]?)\s*(\w+)", lhs):
                coefs[tok[1]] = -1.0 if tok[0] == "-" else 1.0
            rows.append((coefs, op, float(rhs)))
        elif sec == "Binary":
            binaries.append(s)
    return obj, rows, binaries


@pytest.mark.parametrize("seed", range(8))
def test_lp_export_solved_by_milp(seed, tmp_path):
    from scipy.optimize import Bounds, LinearConstraint, milp
    rng = np.random.default_rng(200 + seed)
    inst = random_instance(rng, max_words=15, max_affixes=6)
    export_lp(inst, tmp_path / "f.lp")
    obj, rows, binaries = parse_lp(tmp_path / "f.lp")
    names = binaries
    col = {v: i for i, v in enumerate(names)}
    c = np.array([obj.get(v, 0.0) for v in names])
    A = np.zeros((len(rows), len(names)))
    lo, hi = np.zeros(len(rows)), np.zeros(len(rows))
    for r, (coefs, op, rhs) in enumerate(rows):
        for v, a in coefs.items():
            A[r, col[v]] = a
        lo[r] = rhs if op == "=" else -np.inf
        hi[r] = rhs
    res = milp(c, constraints=LinearConstraint(A, lo, hi), integrality=np.ones(len(names)),
               bounds=Bounds(0, 1))
    assert res.status == 0
    assert abs(res.fun - solve_exact(inst).objective) <= 1e-7


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_exact_never_worse_than_greedy_or_argmax(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, max_words=30, max_affixes=8)
    ex = solve_exact(inst)
    check_solution(inst, ex)
    assert ex.objective <= solve_greedy(inst).objective + 1e-12
    am = per_word_argmax(inst)
    assert ex.objective <= am.objective + 1e-12


def pain_paint_paints(alpha, beta):
    # paint -> pain needs "-t"; paints -> paint needs "-s"
    lp = [np.log([1.0]), np.log([0.5, 0.5]), np.log([0.2, 0.8])]
    affs = [[frozenset()], [frozenset(), {"-t"}], [frozenset(), {"-s"}]]
    return build_instance(["pain", "paint", "paints"], lp, affs, ["-s", "-t"], alpha, beta)


def test_pain_paint_trade_off():
    # "-s" saves log(4)/3 ~ 0.462; "-t" saves only beta/3 by removing a root
    keep_roots = pain_paint_paints(alpha=0.3, beta=0.0)
    sol = solve_exact(keep_roots)
    assert sol.open_affixes == {"-s"} and sol.choice == (0, 0, 1)
    assert sol.objective == pytest.approx(brute_force(keep_roots).objective, abs=1e-12)
    merge = pain_paint_paints(alpha=0.3, beta=3.0)
    sol = solve_exact(merge)
    assert sol.open_affixes == {"-s", "-t"} and sol.choice == (0, 1, 1)
    assert sol.objective == pytest.approx(brute_force(merge).objective, abs=1e-12)


def test_large_alpha_gives_all_stop():
    rng = np.random.default_rng(21)
    for _ in range(10):
        inst = random_instance(rng, max_words=30, max_affixes=8)
        span = sum(float(lp.max() - lp.min()) for lp in inst.log_probs) / inst.n_words
        big = build_instance(inst.words, inst.log_probs, inst.cand_affixes, inst.affix_ids,
                             alpha=span + inst.beta + 1.0, beta=inst.beta)
        sol = solve_exact(big)
        assert sol.open_affixes == frozenset() and set(sol.choice) == {0}


@pytest.mark.parametrize("seed", range(10))
def test_open_count_non_increasing_in_alpha(seed):
    rng = np.random.default_rng(300 + seed)
    base = random_instance(rng, max_words=40, max_affixes=8, alpha=0.0)
    counts = []
    for a in [0.0, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1]:
        inst = build_instance(base.words, base.log_probs, base.cand_affixes, base.affix_ids,
                              a, base.beta)
        counts.append(len(solve_exact(inst).open_affixes))
    assert counts == sorted(counts, reverse=True)


def test_lp_structure(tmp_path):
    lp = [np.log([0.2, 0.8]), np.log([0.3, 0.6])]
    affs = [[frozenset(), {"-s"}], [frozenset(), {"-s"}]]
    inst = build_instance(["w1", "w2"], lp, affs, ["-s"], 0.1, 0.5, allow_negative_beta=True)
    export_lp(inst, tmp_path / "two.lp")
    obj, rows, binaries = parse_lp(tmp_path / "two.lp")
    assert sum(v.startswith("x_") for v in binaries) == 4
    assert sum(v.startswith("y_") for v in binaries) == 1
    assert sum(op == "=" for _, op, _ in rows) == 2
    assert sum(op == "<=" for _, op, _ in rows) == 2
    export_lp(build_instance(["a"], [[0.0]], [[frozenset()]], [], 0.1, 0.0), tmp_path / "one.lp")
    obj, rows, binaries = parse_lp(tmp_path / "one.lp")
    assert binaries == ["x_0_0"] and rows == [({"x_0_0": 1.0}, "=", 1.0)]
