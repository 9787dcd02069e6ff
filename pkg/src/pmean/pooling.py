"""Generalized-mean pooling over word vectors and its concatenations.

A sentence is summarized per embedding space by stacking its word vectors
into a matrix and reducing each column with one or more generalized means

    M_p(x_1..x_n) = ((x_1^p + ... + x_n^p) / n) ** (1/p)

with p = 1 the arithmetic mean, p = 0 the geometric mean, p = -1 the
harmonic mean, and p = +/-inf the column max/min. The per-space blocks are
concatenated in configuration order; z-normalization is a separate,
explicitly fitted step.

p is a plain float: ``math.inf`` and ``-math.inf`` are the extremes.

Real powers are not total: x**p is undefined over the reals for a negative
base with non-integer p and for a zero base with negative p, and the
geometric mean needs strictly positive entries. The SingularityPolicy
decides whether such output entries become 0 (tallied) or raise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSpace, LookupResult, OovPolicy, TokenizerConfig, lookup_sequence, tokenize
from .errors import DimensionError, FormatError, NumericalPolicyError

NAN_TO_ZERO = "nan_to_zero"
ERROR = "error"


@dataclass
class SingularityPolicy:
    """Handling of output entries whose real power mean is undefined.

    ``epsilon`` is the magnitude below which a base counts as zero.
    ``undefined_counter`` tallies replaced output entries (nan_to_zero mode).
    """

    epsilon: float = 1e-12
    on_undefined: str = NAN_TO_ZERO
    undefined_counter: int = 0

    def __post_init__(self):
        if self.on_undefined not in (NAN_TO_ZERO, ERROR):
            raise ValueError(f"unknown on_undefined mode {self.on_undefined!r}")


@dataclass
class PooledPart:
    """One embedding space with the ordered p-values applied to it."""

    space: EmbeddingSpace
    p_values: list[float]

    def __post_init__(self):
        if not self.p_values:
            raise ValueError(f"part {self.space.name!r}: p_values must be non-empty")
        for p in self.p_values:
            if math.isnan(p):
                raise ValueError(f"part {self.space.name!r}: p may not be NaN")


@dataclass
class PooledConfig:
    """Ordered list of (space, p-values) parts defining one representation."""

    parts: list[PooledPart]

    def __post_init__(self):
        if not self.parts:
            raise ValueError("PooledConfig needs at least one part")

    @property
    def output_dim(self) -> int:
        return sum(len(part.p_values) * part.space.dim for part in self.parts)

    def describe(self) -> str:
        return " + ".join(
            f"{part.space.name}[{','.join(format_p(p) for p in part.p_values)}]"
            for part in self.parts
        )


def power_mean(W: np.ndarray, p: float, policy: SingularityPolicy | None = None) -> np.ndarray:
    """Reduce each column of an n x d matrix with the generalized mean M_p.

    Columns are sorted before any arithmetic, so the result is bit-identical
    under row permutations of W.
    """
    if policy is None:
        policy = SingularityPolicy()
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] < 1:
        raise DimensionError(f"power_mean expects an n x d matrix with n >= 1, got shape {W.shape}")

    Ws = np.sort(W, axis=0)
    if p == math.inf:
        return Ws[-1].copy()
    if p == -math.inf:
        return Ws[0].copy()
    if p == 1:
        return Ws.mean(axis=0)
    if p == 0:
        return _geometric(Ws, policy)
    return _finite_power(Ws, p, policy)


def _geometric(Ws, policy):
    bad = (Ws <= policy.epsilon).any(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(np.mean(np.log(np.where(Ws > 0, Ws, 1.0)), axis=0))
    return _apply_policy(out, bad, Ws, 0.0, policy)


def _finite_power(Ws, p, policy):
    integral = float(p).is_integer()
    near_zero = np.abs(Ws) <= policy.epsilon
    if integral:
        # zero base only hurts for negative exponents
        undefined = near_zero if p < 0 else np.zeros_like(Ws, dtype=bool)
    else:
        undefined = Ws < 0
        if p < 0:
            undefined = undefined | near_zero
    bad = undefined.any(axis=0)

    with np.errstate(all="ignore"):
        inner = np.power(Ws, p).mean(axis=0)
        # sign-preserving outer root; for even/non-integer p the mean is >= 0
        # wherever defined, so the sign factor is inert there
        out = np.sign(inner) * np.abs(inner) ** (1.0 / p)
    if p < 0:
        bad = bad | (inner == 0)  # pole: mean of powers cancelled exactly
    return _apply_policy(out, bad, Ws, p, policy)


def _apply_policy(out, bad, Ws, p, policy):
    if policy.on_undefined == ERROR and bad.any():
        dim = int(np.argmax(bad))
        col = Ws[:, dim]
        offender = _first_offender(col, p, policy.epsilon)
        raise NumericalPolicyError(
            f"power mean undefined for p={format_p(p)} at dimension {dim} (value {offender!r})"
        )
    nonfinite = ~np.isfinite(out)
    replace = bad | nonfinite
    if replace.any():
        policy.undefined_counter += int(replace.sum())
        out = np.where(replace, 0.0, out)
    return out


def _first_offender(col, p, eps):
    if p == 0:
        hits = col[col <= eps]
    elif float(p).is_integer():
        hits = col[np.abs(col) <= eps]
    else:
        mask = col < 0
        if p < 0:
            mask = mask | (np.abs(col) <= eps)
        hits = col[mask]
    return float(hits[0]) if hits.size else float(col[0])


def pool_sentence(
    space: EmbeddingSpace,
    p_values: list[float],
    tokens,
    oov_policy: OovPolicy | None = None,
    sing_policy: SingularityPolicy | None = None,
) -> np.ndarray:
    """Look tokens up in one space and concatenate its per-p pooled vectors."""
    if not p_values:
        raise ValueError("p_values must be non-empty")
    looked: LookupResult = lookup_sequence(space, tokens, oov_policy or OovPolicy())
    return np.concatenate([power_mean(looked.matrix, p, sing_policy) for p in p_values])


def concat_embedding(
    cfg: PooledConfig,
    tokens,
    oov_policy: OovPolicy | None = None,
    sing_policy: SingularityPolicy | None = None,
) -> np.ndarray:
    """Concatenate the pooled blocks of every configured space, in order."""
    blocks = [
        pool_sentence(part.space, part.p_values, tokens, oov_policy, sing_policy)
        for part in cfg.parts
    ]
    out = np.concatenate(blocks)
    assert out.shape == (cfg.output_dim,)
    return out


def embed_corpus(
    cfg: PooledConfig,
    sentences,
    tokenizer: TokenizerConfig | None = None,
    oov_policy: OovPolicy | None = None,
    sing_policy: SingularityPolicy | None = None,
) -> np.ndarray:
    """Embed sentences row by row; deterministic and order-preserving."""
    tokenizer = tokenizer or TokenizerConfig()
    rows = [
        concat_embedding(cfg, tokenize(tokenizer, s), oov_policy, sing_policy)
        for s in sentences
    ]
    if not rows:
        return np.zeros((0, cfg.output_dim))
    return np.stack(rows)


# --- z-normalization ---------------------------------------------------------


@dataclass
class ZNormParams:
    """Column means and floored population standard deviations."""

    mean: np.ndarray
    std: np.ndarray
    floor: float = 1e-8


def znorm_fit(X: np.ndarray, floor: float = 1e-8) -> ZNormParams:
    """Fit per-column standardization statistics (population std, floored)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DimensionError(f"znorm_fit expects an N x D matrix with N >= 1, got shape {X.shape}")
    mean = X.mean(axis=0)
    std = np.maximum(X.std(axis=0), floor)
    return ZNormParams(mean=mean, std=std, floor=floor)


def znorm_apply(params: ZNormParams, X: np.ndarray) -> np.ndarray:
    """Standardize a matrix or single vector with fitted parameters."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != params.mean.shape[0]:
        raise DimensionError(
            f"znorm_apply: {X.shape[-1]} columns vs {params.mean.shape[0]} fitted"
        )
    return (X - params.mean) / params.std


# --- config file grammar -----------------------------------------------------
#
# One part per line:   space=<name> p=<v1,v2,...> [path=<file>] [lang=<tag>]
# p values are decimal floats; the extremes are spelled inf / -inf.
# Blank lines and lines starting with '#' are ignored.


@dataclass
class ConfigEntry:
    """One parsed config line, before spaces are resolved."""

    space: str
    p_values: list[float]
    path: str | None = None
    lang: str | None = None


def format_p(p: float) -> str:
    if p == math.inf:
        return "inf"
    if p == -math.inf:
        return "-inf"
    if float(p).is_integer():
        return str(int(p))
    return repr(float(p))


def parse_p(token: str) -> float:
    try:
        p = float(token)
    except ValueError:
        raise FormatError(f"bad p-value {token!r}") from None
    if math.isnan(p):
        raise FormatError("p may not be NaN")
    return p


def parse_config_text(text: str, source: str = "<config>") -> list[ConfigEntry]:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields: dict[str, str] = {}
        for item in line.split():
            if "=" not in item:
                raise FormatError(f"{source}:{lineno}: expected key=value, got {item!r}")
            key, _, value = item.partition("=")
            if key not in ("space", "p", "path", "lang"):
                raise FormatError(f"{source}:{lineno}: unknown key {key!r}")
            if key in fields:
                raise FormatError(f"{source}:{lineno}: duplicate key {key!r}")
            fields[key] = value
        if "space" not in fields or "p" not in fields:
            raise FormatError(f"{source}:{lineno}: both space= and p= are required")
        try:
            p_values = [parse_p(tok) for tok in fields["p"].split(",") if tok]
        except FormatError as exc:
            raise FormatError(f"{source}:{lineno}: {exc}") from None
        if not p_values:
            raise FormatError(f"{source}:{lineno}: empty p list")
        entries.append(
            ConfigEntry(fields["space"], p_values, fields.get("path"), fields.get("lang"))
        )
    if not entries:
        raise FormatError(f"{source}: no config entries found")
    return entries


def format_config(entries: list[ConfigEntry]) -> str:
    lines = []
    for e in entries:
        line = f"space={e.space} p={','.join(format_p(p) for p in e.p_values)}"
        if e.path:
            line += f" path={e.path}"
        if e.lang:
            line += f" lang={e.lang}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def resolve_config(entries: list[ConfigEntry], spaces: dict[str, EmbeddingSpace]) -> PooledConfig:
    parts = []
    for e in entries:
        if e.space not in spaces:
            raise FormatError(f"config references unknown space {e.space!r}")
        parts.append(PooledPart(spaces[e.space], list(e.p_values)))
    return PooledConfig(parts)
