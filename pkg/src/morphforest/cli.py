"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data format error, 3 internal error.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import json
import logging
import sys
import traceback
from pathlib import Path

from . import __version__
from .affixes import extract_affixes, read_affixes, write_affixes
from .config import ConfigError, RunConfig
from .corpus import CorpusError, Vocabulary, WordVectors, load_vectors, load_wordlist, open_text
from .features import feature_dict, sibling_table_from_edges
from .metrics import (EvaluationError, boundaries, bpr, cluster_prf, gold_boundaries, load_clusters,
                      load_roots, load_segmentations, root_accuracy, write_report)
from .model import load_checkpoint, save_checkpoint, write_loss_curve
from .pipeline import (EdgeModel, Forest, ForestModel, families, root_of, segment,
                       segment_boundaries, train)
from .synthbench import GrammarSpec, generate

log = logging.getLogger("morphforest")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


# flag name -> RunConfig field, for flags that map one-to-one
CONFIG_FLAGS = {
    "top_k": "top_k", "affixes": "affixes_per_side", "affix_budget": "affix_budget",
    "min_support": "min_support", "alpha": "alpha", "beta": "beta", "rounds": "rounds",
    "lr": "lr", "iters": "iters", "l2": "l2", "ilp_mode": "ilp_mode",
    "exact_limit": "exact_limit", "node_budget": "node_budget", "seed": "seed",
    "language": "language", "sibl": "sibl", "comp": "comp", "transforms": "transforms",
    "max_neighbors": "max_neighbors", "allow_negative_beta": "allow_negative_beta",
}


def add_config_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration (flags override --config)")
    g.add_argument("--config", type=Path, help="flat 'key = value' config file")
    g.add_argument("--top-k", type=int)
    g.add_argument("--affixes", type=int, help="affixes kept per side")
    g.add_argument("--affix-budget", choices=["per_side", "total"])
    g.add_argument("--min-support", type=int)
    g.add_argument("--alpha", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--rounds", type=int)
    g.add_argument("--lr", type=float)
    g.add_argument("--iters", type=int)
    g.add_argument("--l2", type=float)
    g.add_argument("--ilp-mode", choices=["auto", "exact", "greedy", "off"])
    g.add_argument("--no-ilp", dest="ilp_mode", action="store_const", const="off",
                   help="local model only (same as --ilp-mode off)")
    g.add_argument("--exact-limit", type=int)
    g.add_argument("--node-budget", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--language")
    g.add_argument("--max-neighbors", type=int)
    for name in ("sibl", "comp", "transforms", "allow_negative_beta"):
        flag = name.replace("_", "-")
        g.add_argument(f"--{flag}", dest=name, action="store_true", default=None)
        g.add_argument(f"--no-{flag}", dest=name, action="store_false")


def config_from_args(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = RunConfig.from_file(args.config)
    over = {field: getattr(args, flag) for flag, field in CONFIG_FLAGS.items()
            if getattr(args, flag, None) is not None}
    return dataclasses.replace(cfg, **over).validate()


def _load_inputs(words_path, vectors_path, cfg: RunConfig):
    vocab = load_wordlist(words_path, cfg.top_k, lowercase=cfg.lowercase,
                          filter_nonalpha=cfg.filter_nonalpha)
    vectors = (load_vectors(vectors_path, vocab, cfg.vector_retain)
               if vectors_path else WordVectors.empty())
    return vocab, vectors


def _write_manifest(out: Path, cfg: RunConfig, extra: dict) -> None:
    manifest = {"tool": "morphforest", "version": __version__, "config_hash": cfg.digest(),
                **extra}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _round_table(report) -> str:
    head = f"{'round':>5} {'loss':>12} {'live':>6} {'rejected':>8} {'ilp_obj':>10} {'S(F)':>10} {'F1':>7}"
    lines = [head]
    for r in report.rounds:
        obj = "-" if r.ilp_objective is None else f"{r.ilp_objective:.5f}"
        f1 = "-" if r.bpr_f1 is None else f"{r.bpr_f1:.4f}"
        lines.append(f"{r.round:>5} {r.losses[-1]:>12.4f} {r.live_affixes:>6} "
                     f"{len(r.rejected):>8} {obj:>10} {r.score:>10.5f} {f1:>7}")
    return "\n".join(lines)


def run_training(words, vectors_path, cfg: RunConfig, out: Path, gold_path=None,
                 quiet: bool = False):
    """Train and write every artifact into ``out``. Returns the report."""
    vocab, vectors = _load_inputs(words, vectors_path, cfg)
    gold = None
    if gold_path:
        gold = gold_boundaries(load_segmentations(gold_path, cfg.lowercase))
    report = train(vocab, vectors, cfg, gold=gold)
    out.mkdir(parents=True, exist_ok=True)
    report.forest.write(out / "forest.tsv")
    write_affixes(report.affixes, out / "affixes.tsv")
    save_checkpoint(out / "model.tsv", report.index, report.theta)
    vocab.write(out / "vocab.tsv")
    write_loss_curve(out / "loss.csv", [x for r in report.rounds for x in r.losses])
    (out / "config.txt").write_text(cfg.to_text())
    doc = report.to_dict()
    doc["config"] = dataclasses.asdict(cfg)
    write_report(out / "report.json", doc)
    _write_manifest(out, cfg, {"words": str(words),
                               "vectors": str(Path(vectors_path).resolve()) if vectors_path else None})
    if not quiet:
        print(_round_table(report))
    return report


def load_model(model_dir) -> ForestModel:
    """Rebuild the forest and edge scorer from a training output directory."""
    d = Path(model_dir)
    needed = ["forest.tsv", "affixes.tsv", "model.tsv", "vocab.tsv", "config.txt"]
    missing = [n for n in needed if not (d / n).exists()]
    if missing:
        raise UsageError(f"{d} is not a trained model directory (missing {', '.join(missing)})")
    cfg = RunConfig.from_file(d / "config.txt")
    vocab = Vocabulary.from_counts(_read_counts(d / "vocab.tsv"), 10 ** 9)
    vectors = WordVectors.empty()
    manifest = d / "manifest.json"
    if manifest.exists():
        vpath = json.loads(manifest.read_text()).get("vectors")
        if vpath and Path(vpath).exists():
            vectors = load_vectors(vpath, vocab, cfg.vector_retain)
    forest = Forest.read(d / "forest.tsv", vocab.words)
    index, theta = load_checkpoint(d / "model.tsv")
    siblings = {}
    if cfg.sibl:
        siblings = sibling_table_from_edges({w: (e.parent, e.dtype) for w, e in forest.vocab_edges()})
    model = EdgeModel(vocab, vectors, read_affixes(d / "affixes.tsv"), index, theta, cfg, siblings)
    return ForestModel(forest, model)


def _read_counts(path):
    with open_text(path) as f:
        for line in f:
            w, c = line.rstrip("\n").split("\t")
            yield w, int(c)


def _read_words(path, lowercase=True) -> list[str]:
    out = []
    with open_text(path) as f:
        for line in f:
            w = line.split("\t", 1)[0].strip()
            if w:
                out.append(w.lower() if lowercase else w)
    return out


def _output(path):
    return open(path, "w", encoding="utf-8") if path else contextlib.nullcontext(sys.stdout)


def cmd_train(args) -> int:
    cfg = config_from_args(args)
    out = Path(args.out)
    report = run_training(args.words, args.vectors, cfg, out, args.gold, args.quiet)
    if args.dump_candidates or args.dump_features:
        _dump(report, cfg, out, args.dump_candidates, args.dump_features)
    return EXIT_OK


def _dump(report, cfg: RunConfig, out: Path, cands: bool, feats: bool) -> None:
    model = report.model.model
    fcfg = cfg.feature_config()
    rows_c, rows_f = [], []
    for w in report.forest.vocab:
        for z in model.gen(w):
            rows_c.append(f"{w}\t{z.parent}\t{z.dtype.value}\t{','.join(sorted(z.affixes))}\n")
            if feats:
                fd = feature_dict(w, z, model.ctx, fcfg)
                rows_f.append(f"{w}\t{z}\t" + ",".join(f"{k}={v:g}" for k, v in sorted(fd.items()))
                              + "\n")
    if cands:
        (out / "candidates.tsv").write_text("".join(rows_c))
    if feats:
        (out / "features.tsv").write_text("".join(rows_f))


def cmd_segment(args) -> int:
    fm = load_model(args.model)
    words = _read_words(args.input) if args.input else list(fm.forest.vocab)
    with _output(args.output) as f:
        for w in words:
            f.write(f"{w}\t{' '.join(segment(w, fm))}\n")
    return EXIT_OK


def cmd_roots(args) -> int:
    fm = load_model(args.model)
    words = _read_words(args.input) if args.input else list(fm.forest.vocab)
    with _output(args.output) as f:
        for w in words:
            f.write(f"{w}\t{root_of(w, fm)}\n")
    return EXIT_OK


def cmd_families(args) -> int:
    fm = load_model(args.model)
    with _output(args.output) as f:
        for cid, (root, members) in enumerate(families(fm).items()):
            for w in members:
                f.write(f"{cid}\t{w}\n")
    return EXIT_OK


def _finish_eval(result: dict, args) -> int:
    if args.report:
        write_report(args.report, result)
    print(f"P={result['P']:.4f} R={result['R']:.4f} F1={result['F1']:.4f}")
    return EXIT_OK


def cmd_eval_seg(args) -> int:
    pred = {w: alts[0] for w, alts in load_segmentations(args.pred).items()}
    gold = gold_boundaries(load_segmentations(args.gold))
    res = bpr({w: boundaries(m) for w, m in pred.items()}, gold, macro=args.macro)
    return _finish_eval(res.to_dict(), args)


def cmd_eval_cluster(args) -> int:
    pred = load_clusters(args.pred, word_first=args.pred_word_first)
    gold = load_clusters(args.gold, word_first=not args.gold_cluster_first)
    res = cluster_prf(pred, gold)
    return _finish_eval(res.to_dict(), args)


def cmd_eval_root(args) -> int:
    pred = {w: next(iter(rs)) for w, rs in load_roots(args.pred).items()}
    gold = load_roots(args.gold)
    acc = root_accuracy(pred, gold)
    shared = sum(w in gold for w in pred)
    if args.report:
        write_report(args.report, {"task": "roots", "accuracy": acc, "counts": {"words": shared}})
    print(f"accuracy={acc:.4f}")
    return EXIT_OK


def _grid(spec: str) -> list[float]:
    try:
        return [float(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad grid {spec!r}: expected comma-separated numbers") from None


def cmd_sweep(args) -> int:
    base = config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    gold = gold_boundaries(load_segmentations(args.gold, base.lowercase))
    csv_path = out / "sweep.csv"
    done = {}
    if args.resume and csv_path.exists():
        with open(csv_path) as f:
            for row in csv.DictReader(f):
                done[(float(row["alpha"]), float(row["beta"]))] = row
    rows = []
    for a in _grid(args.alphas):
        for b in _grid(args.betas):
            if (a, b) in done:
                rows.append(done[(a, b)])
                continue
            cfg = dataclasses.replace(base, alpha=a, beta=b)
            cell = out / f"alpha={a!r}_beta={b!r}"
            try:
                report = run_training(args.words, args.vectors, cfg, cell, quiet=True)
                fm = report.model
                pred = {w: segment_boundaries(w, fm) for w in fm.forest.vocab if w in gold}
                prf = bpr(pred, gold).prf
                row = {"alpha": a, "beta": b, "P": prf.precision, "R": prf.recall, "F1": prf.f1,
                       "live_affixes": report.affixes.live_count, "error": ""}
            except Exception as e:  # a failed cell is recorded and the sweep goes on
                log.error("cell alpha=%g beta=%g failed: %s", a, b, e)
                row = {"alpha": a, "beta": b, "P": "", "R": "", "F1": "", "live_affixes": "",
                       "error": f"{type(e).__name__}: {e}"}
            rows.append(row)
            _write_sweep(csv_path, rows)
            print(f"alpha={a:g} beta={b:g} F1={row['F1']}")
    _write_sweep(csv_path, rows)
    return EXIT_OK


def _write_sweep(path, rows) -> None:
    with open(path, "w", newline="") as f:
        wr = csv.DictWriter(f, ["alpha", "beta", "P", "R", "F1", "live_affixes", "error"])
        wr.writeheader()
        wr.writerows(rows)


def cmd_synth(args) -> int:
    spec = GrammarSpec.from_file(args.spec) if args.spec else GrammarSpec()
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    paths = generate(spec).write(args.out)
    for name, p in sorted(paths.items()):
        print(f"{name}\t{p}")
    return EXIT_OK


def cmd_extract_affixes(args) -> int:
    cfg = config_from_args(args)
    vocab, _ = _load_inputs(args.words, None, cfg)
    aff = extract_affixes(vocab, cfg.affixes_per_side, cfg.min_support,
                          min_parent_len=cfg.min_parent_len, max_affix_len=cfg.max_affix_len,
                          budget=cfg.affix_budget)
    if args.output:
        write_affixes(aff, args.output)
    else:
        for a in aff:
            print(f"{a.side}\t{a.string}\t{a.support}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="morphforest",
                                description="Morphological forests via contrastive estimation and an affix-sparsity ILP.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a forest and write artifacts")
    t.add_argument("--words", required=True, type=Path, help="word<TAB>count list")
    t.add_argument("--vectors", type=Path, help="word2vec text-format vectors")
    t.add_argument("--out", default="out", type=Path)
    t.add_argument("--gold", type=Path, help="gold segmentations for per-round F1")
    t.add_argument("--dump-candidates", action="store_true")
    t.add_argument("--dump-features", action="store_true")
    t.add_argument("-q", "--quiet", action="store_true")
    add_config_args(t)
    t.set_defaults(func=cmd_train)

    for name, fn, helptext in (("segment", cmd_segment, "word<TAB>morphs"),
                               ("roots", cmd_roots, "word<TAB>root")):
        s = sub.add_parser(name, help=f"write {helptext} lines")
        s.add_argument("--model", required=True, type=Path)
        s.add_argument("--input", type=Path, help="one word per line (default: training vocabulary)")
        s.add_argument("--output", type=Path)
        s.set_defaults(func=fn)
    s = sub.add_parser("families", help="write cluster_id<TAB>word lines")
    s.add_argument("--model", required=True, type=Path)
    s.add_argument("--output", type=Path)
    s.set_defaults(func=cmd_families)

    e = sub.add_parser("eval-seg", help="boundary precision/recall")
    e.add_argument("--pred", required=True, type=Path)
    e.add_argument("--gold", required=True, type=Path)
    e.add_argument("--macro", action="store_true")
    e.add_argument("--report", type=Path)
    e.set_defaults(func=cmd_eval_seg)
    e = sub.add_parser("eval-cluster", help="family clustering C/I/D scores")
    e.add_argument("--pred", required=True, type=Path)
    e.add_argument("--gold", required=True, type=Path)
    e.add_argument("--pred-word-first", action="store_true",
                   help="pred lines are word<TAB>cluster (default cluster<TAB>word)")
    e.add_argument("--gold-cluster-first", action="store_true",
                   help="gold lines are cluster<TAB>word (default word<TAB>cluster)")
    e.add_argument("--report", type=Path)
    e.set_defaults(func=cmd_eval_cluster)
    e = sub.add_parser("eval-root", help="root accuracy")
    e.add_argument("--pred", required=True, type=Path)
    e.add_argument("--gold", required=True, type=Path)
    e.add_argument("--report", type=Path)
    e.set_defaults(func=cmd_eval_root)

    w = sub.add_parser("sweep", help="alpha x beta grid, CSV alpha,beta,P,R,F1")
    w.add_argument("--words", required=True, type=Path)
    w.add_argument("--vectors", type=Path)
    w.add_argument("--gold", required=True, type=Path)
    w.add_argument("--alphas", required=True, help="comma-separated")
    w.add_argument("--betas", required=True, help="comma-separated")
    w.add_argument("--out", default="sweep", type=Path)
    w.add_argument("--resume", action="store_true", help="skip cells already in sweep.csv")
    add_config_args(w)
    w.set_defaults(func=cmd_sweep)

    y = sub.add_parser("synth", help="generate a synthetic language and its gold files")
    y.add_argument("--spec", type=Path, help="grammar spec ('key = value')")
    y.add_argument("--seed", type=int)
    y.add_argument("--out", required=True, type=Path)
    y.set_defaults(func=cmd_synth)

    x = sub.add_parser("extract-affixes", help="rank candidate affixes by support")
    x.add_argument("--words", required=True, type=Path)
    x.add_argument("--output", type=Path)
    add_config_args(x)
    x.set_defaults(func=cmd_extract_affixes)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, EvaluationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
