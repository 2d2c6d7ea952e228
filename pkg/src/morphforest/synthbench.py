"""Synthetic languages with known derivations, for end-to-end checks.

Words are built as ``prefix* root (+transform) suffix*`` with Zipfian counts.
Decoy affixes get distributional support without ever being real: for each
decoy ``d`` a few extra roots ``r + d`` are created from existing roots ``r``,
so ``d`` shows up as a string difference between words although gold never
splits it off.
"""
from __future__ import annotations

import dataclasses
import itertools
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, parse_flat, format_flat

# Affix cost for the default 400-word fixture. The cost of an affix is
# weighed against per-word log-probability gains averaged over |V|, so the
# useful range of alpha shrinks roughly like 1/|V|; 1e-4 suits ~10K words.
FIXTURE_ALPHA = 0.05
# Without a penalty the contrastive objective drives each word's candidate
# distribution to a point mass, leaving the ILP nothing to trade off.
FIXTURE_L2 = 1.0


@dataclass(frozen=True)
class GrammarSpec:
    n_roots: int = 20
    root_len_min: int = 4
    root_len_max: int = 7
    consonants: str = "ptkmnsldvgb"
    vowels: str = "aeiou"
    suffixes: tuple[str, ...] = ("a", "ka", "lar")
    prefixes: tuple[str, ...] = ()
    max_suffixes: int = 3
    max_prefixes: int = 1
    decoys: tuple[str, ...] = ("m", "ne", "sti", "vo", "dek")
    decoy_support: int = 2
    delete_e_rate: float = 0.0
    repeat_rate: float = 0.0
    compound_rate: float = 0.0
    n_words: int = 400
    zipf: float = 1.0
    max_count: int = 5000
    vector_dim: int = 16
    vector_noise: float = 0.35
    seed: int = 0

    def validate(self) -> None:
        if set(self.decoys) & (set(self.suffixes) | set(self.prefixes)):
            raise ConfigError("decoy affixes must be disjoint from the true affixes")
        for name in ("delete_e_rate", "repeat_rate", "compound_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.n_roots < 1 or self.n_words < 1:
            raise ConfigError("n_roots and n_words must be positive")
        if not 2 <= self.root_len_min <= self.root_len_max:
            raise ConfigError("need 2 <= root_len_min <= root_len_max")
        if any(not a for a in self.suffixes + self.prefixes + self.decoys):
            raise ConfigError("empty affix string")
        if self.vector_dim < 0 or self.vector_noise < 0:
            raise ConfigError("vector_dim and vector_noise must be >= 0")
        if self.decoys and self.decoy_support > self.n_roots:
            raise ConfigError("decoy_support cannot exceed n_roots")

    @classmethod
    def from_file(cls, path) -> "GrammarSpec":
        return parse_flat(cls, Path(path).read_text())

    def to_text(self) -> str:
        return format_flat(self)


@dataclass
class Form:
    surface: str
    morphs: list[str]
    root: str


@dataclass
class SynthCorpus:
    spec: GrammarSpec
    counts: list[tuple[str, int]]
    segmentations: dict[str, list[str]]
    roots: dict[str, str]
    decoy_roots: list[str] = field(default_factory=list)
    vectors: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def words(self) -> list[str]:
        return [w for w, _ in self.counts]

    @property
    def clusters(self) -> dict[str, str]:
        return dict(self.roots)

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {name: out / f"{name}.tsv" for name in ("words", "gold_seg", "gold_clusters", "gold_roots")}
        with open(paths["words"], "w", encoding="utf-8") as f:
            for w, c in self.counts:
                f.write(f"{w}\t{c}\n")
        ordered = sorted(self.segmentations)
        with open(paths["gold_seg"], "w", encoding="utf-8") as f:
            for w in ordered:
                f.write(f"{w}\t{' '.join(self.segmentations[w])}\n")
        with open(paths["gold_clusters"], "w", encoding="utf-8") as f:
            for w in ordered:
                f.write(f"{w}\t{self.roots[w]}\n")
        with open(paths["gold_roots"], "w", encoding="utf-8") as f:
            for w in ordered:
                f.write(f"{w}\t{self.roots[w]}\n")
        if self.vectors:
            paths["vectors"] = out / "vectors.txt"
            with open(paths["vectors"], "w", encoding="utf-8") as f:
                f.write(f"{len(self.vectors)} {self.spec.vector_dim}\n")
                for w, _ in self.counts:
                    f.write(w + " " + " ".join(f"{x:.6f}" for x in self.vectors[w]) + "\n")
        (out / "spec.txt").write_text(self.spec.to_text(), encoding="utf-8")
        return paths


def _sequences(items, max_len):
    """Affix sequences up to ``max_len`` without immediate repetition."""
    out = [()]
    for n in range(1, max_len + 1):
        for seq in itertools.product(items, repeat=n):
            if all(a != b for a, b in zip(seq, seq[1:])):
                out.append(seq)
    return out


def _make_roots(spec: GrammarSpec, rng: random.Random) -> list[str]:
    bad_ends = tuple(spec.suffixes) + tuple(spec.decoys)
    bad_starts = tuple(spec.prefixes)
    roots: list[str] = []
    attempts = 0
    while len(roots) < spec.n_roots:
        attempts += 1
        if attempts > 100_000:
            raise ConfigError("could not sample enough distinct roots")
        n = rng.randint(spec.root_len_min, spec.root_len_max)
        start = rng.random() < 0.5
        chars = []
        for i in range(n):
            pool = spec.consonants if (i % 2 == 0) == start else spec.vowels
            chars.append(rng.choice(pool))
        r = "".join(chars)
        if r.endswith(bad_ends) or (bad_starts and r.startswith(bad_starts)):
            continue
        if r.endswith("e"):
            continue
        if any(r.startswith(o) or o.startswith(r) or r.endswith(o) or o.endswith(r) for o in roots):
            continue
        roots.append(r)
    return roots


def _forms(root: str, surface_root: str, base_morphs: list[str], spec: GrammarSpec,
           kind: str) -> list[Form]:
    forms = []
    for pre in _sequences(spec.prefixes, spec.max_prefixes) if spec.prefixes else [()]:
        for suf in _sequences(spec.suffixes, spec.max_suffixes):
            morphs = list(pre) + list(base_morphs)
            if suf:
                first = suf[0]
                if kind == "delete" and first[0] in spec.vowels:
                    morphs[len(pre) + len(base_morphs) - 1] = base_morphs[-1][:-1]
                    morphs.append(first)
                elif kind == "repeat" and first[0] in spec.vowels:
                    morphs.append(base_morphs[-1][-1] + first)
                else:
                    morphs.append(first)
                morphs.extend(suf[1:])
            forms.append(Form("".join(morphs), morphs, root))
    return forms


def generate(spec: GrammarSpec = GrammarSpec()) -> SynthCorpus:
    """Sample a synthetic language; gold is exactly the generating derivation."""
    spec.validate()
    rng = random.Random(spec.seed)
    roots = _make_roots(spec, rng)

    decoy_roots = []
    for d in spec.decoys:
        bases = rng.sample(roots, spec.decoy_support)
        for r in sorted(bases):
            decoy_roots.append(r + d)

    kinds: dict[str, str] = {}
    all_roots = list(roots)
    for r in roots:
        u = rng.random()
        if u < spec.delete_e_rate:
            kinds[r] = "delete"
        elif u < spec.delete_e_rate + spec.repeat_rate:
            kinds[r] = "repeat"
        else:
            kinds[r] = "plain"

    forms: list[Form] = []
    for r in all_roots:
        kind = kinds[r]
        base = r + "e" if kind == "delete" else r
        forms += _forms(base, base, [base], spec, kind)
    for r in decoy_roots:
        forms += _forms(r, r, [r], spec, "plain")

    n_comp = round(spec.compound_rate * len(roots))
    if n_comp:
        plain = [r for r in roots if kinds[r] == "plain"]
        pairs = [(a, b) for a in plain for b in plain if a != b]
        for a, b in rng.sample(pairs, min(n_comp, len(pairs))):
            for f in _forms(b, a + b, [a, b], spec, "plain"):
                forms.append(f)

    # drop surface forms with more than one derivation
    by_surface: dict[str, list[Form]] = {}
    for f in forms:
        by_surface.setdefault(f.surface, []).append(f)
    unique = [fs[0] for s, fs in by_surface.items()
              if len({(tuple(f.morphs), f.root) for f in fs}) == 1]

    bare = [f for f in unique if len(f.morphs) == 1]
    rest = [f for f in unique if len(f.morphs) > 1]
    rng.shuffle(rest)
    rest.sort(key=lambda f: len(f.morphs))
    chosen = (bare + rest)[:max(spec.n_words, 0)]
    # Zipf ranks: shallower forms tend to be more frequent
    order = sorted(range(len(chosen)), key=lambda i: (len(chosen[i].morphs), rng.random()))
    counts = []
    for rank, i in enumerate(order, 1):
        c = max(1, int(round(spec.max_count / rank ** spec.zipf)))
        counts.append((chosen[i].surface, c))
    counts.sort(key=lambda wc: (-wc[1], wc[0]))
    segs = {f.surface: f.morphs for f in chosen}
    gold_roots = {f.surface: f.root for f in chosen}
    vectors = _vectors(spec, chosen) if spec.vector_dim else {}
    return SynthCorpus(spec, counts, segs, gold_roots, sorted(decoy_roots), vectors)


def _vectors(spec: GrammarSpec, forms: list[Form]) -> dict[str, np.ndarray]:
    """Family-structured embeddings: a shared root direction plus small affix and noise terms.

    Words of one family end up close in cosine; a decoy root ``r + d`` has its
    own direction, so it looks unrelated to ``r``.
    """
    rng = np.random.default_rng(spec.seed)
    dim = spec.vector_dim
    unit = lambda: (lambda v: v / np.linalg.norm(v))(rng.standard_normal(dim))
    root_vec: dict[str, np.ndarray] = {}
    affix_vec = {a: unit() for a in sorted(set(spec.suffixes) | set(spec.prefixes))}
    out = {}
    for f in sorted(forms, key=lambda f: f.surface):
        if f.root not in root_vec:
            root_vec[f.root] = unit()
        v = root_vec[f.root].copy()
        for m in f.morphs:
            a = affix_vec.get(m) if m != f.root else None
            if a is not None:
                v += 0.2 * a
        v += spec.vector_noise * rng.standard_normal(dim) / np.sqrt(dim)
        out[f.surface] = v
    return out


def fixture_config(**kw) -> RunConfig:
    """Run configuration used with the default fixture."""
    return dataclasses.replace(RunConfig(alpha=FIXTURE_ALPHA, l2=FIXTURE_L2), **kw)


def with_overrides(spec: GrammarSpec, **kw) -> GrammarSpec:
    return dataclasses.replace(spec, **kw)
