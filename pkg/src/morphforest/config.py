"""Run configuration and the flat ``key = value`` file format."""
from __future__ import annotations

import dataclasses
import hashlib
import typing
from dataclasses import dataclass, fields
from pathlib import Path

from .candidates import LANGUAGE_PROFILES, CandidateConfig
from .features import FeatureConfig


class ConfigError(ValueError):
    pass


def _parse_value(tp, raw: str, key: str):
    raw = raw.strip()
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union or (origin is not None and type(None) in args):
        inner = [a for a in args if a is not type(None)]
        if raw.lower() == "none":
            return None
        return _parse_value(inner[0], raw, key)
    try:
        if tp is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if tp is int:
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        if tp is float:
            return float(raw)
        if tp is str:
            return raw
        if origin is tuple:
            items = [s.strip() for s in raw.split(",") if s.strip()]
            if args and args[0] == tuple[str, str]:
                pairs = []
                for it in items:
                    a, sep, b = it.partition(">")
                    if not sep:
                        raise ValueError(it)
                    pairs.append((a, b))
                return tuple(pairs)
            return tuple(items)
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None
    raise ConfigError(f"unsupported field type for {key}: {tp}")


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(f"{p[0]}>{p[1]}" if isinstance(p, tuple) else str(p) for p in v)
    return str(v)


def parse_flat(cls, text: str, base=None):
    """Build dataclass ``cls`` from ``key = value`` lines (``#`` comments allowed)."""
    hints = typing.get_type_hints(cls)
    names = {f.name for f in fields(cls)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in names:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(hints[key], raw, key)
    obj = dataclasses.replace(base, **values) if base is not None else cls(**values)
    return obj


def format_flat(obj) -> str:
    return "".join(f"{f.name} = {_format_value(getattr(obj, f.name))}\n" for f in fields(obj))


@dataclass(frozen=True)
class RunConfig:
    alpha: float = 1e-4
    beta: float = 0.5
    top_k: int = 10000
    affixes_per_side: int = 500
    affix_budget: str = "per_side"
    min_support: int = 1
    min_parent_len: int = 3
    max_affix_len: int = 6
    rounds: int = 5
    lr: float = 0.5
    iters: int = 300
    l2: float = 0.0
    warm_start: bool = True
    sibl: bool = False
    comp: bool = False
    compound_both_in_vocab: bool = True
    ilp_mode: str = "auto"
    exact_limit: int = 24
    node_budget: int = 2_000_000
    allow_negative_beta: bool = False
    seed: int = 0
    language: str = "generic"
    transforms: bool | None = None
    delete_chars: tuple[str, ...] | None = None
    modify_table: tuple[tuple[str, str], ...] | None = None
    min_stem: int = 2
    min_compound: int = 3
    max_neighbors: int = 25
    lowercase: bool = True
    filter_nonalpha: bool = True
    freq_bin_width: float = 1.0
    freq_bin_cap: int = 12
    vector_retain: str = "vocab"

    def validate(self) -> "RunConfig":
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")
        if self.beta < 0 and not self.allow_negative_beta:
            raise ConfigError("beta must be >= 0 (set allow_negative_beta to override)")
        for name in ("top_k", "affixes_per_side", "min_support", "rounds", "iters",
                     "exact_limit", "node_budget", "max_neighbors"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.lr <= 0 or self.l2 < 0 or self.freq_bin_width <= 0:
            raise ConfigError("lr and freq_bin_width must be > 0, l2 >= 0")
        if self.ilp_mode not in ("auto", "exact", "greedy", "off"):
            raise ConfigError(f"ilp_mode must be auto|exact|greedy|off, got {self.ilp_mode!r}")
        if self.affix_budget not in ("per_side", "total"):
            raise ConfigError("affix_budget must be per_side|total")
        if self.language not in LANGUAGE_PROFILES:
            raise ConfigError(f"unknown language profile {self.language!r}")
        if self.vector_retain not in ("vocab", "all"):
            raise ConfigError("vector_retain must be vocab|all")
        return self

    def candidate_config(self) -> CandidateConfig:
        prof = LANGUAGE_PROFILES[self.language]
        pick = lambda name: prof[name] if getattr(self, name) is None else getattr(self, name)
        return CandidateConfig(
            min_stem=self.min_stem, min_compound=self.min_compound, compounds=self.comp,
            compound_both_in_vocab=self.compound_both_in_vocab, transforms=pick("transforms"),
            delete_chars=tuple(pick("delete_chars")), modify_table=tuple(pick("modify_table")),
            max_affix_len=self.max_affix_len, max_neighbors=self.max_neighbors, seed=self.seed)

    def feature_config(self) -> FeatureConfig:
        return FeatureConfig(sibl=self.sibl, comp=self.comp, freq_bin_width=self.freq_bin_width,
                             freq_bin_cap=self.freq_bin_cap)

    def to_text(self) -> str:
        return format_flat(self)

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    @classmethod
    def from_text(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        return parse_flat(cls, text, base)

    @classmethod
    def from_file(cls, path, base: "RunConfig | None" = None) -> "RunConfig":
        return cls.from_text(Path(path).read_text(), base)
