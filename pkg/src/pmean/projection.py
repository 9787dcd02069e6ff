"""Bilingual projection: two tanh maps into a shared space, trained with a
cosine max-margin ranking loss over (sentence, translation, random) triples.

Training operates on sentence-average vectors; the learned maps are then
applied to individual word vectors, which live in the same space as the
averages.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingSpace
from .errors import DimensionError, FormatError, InputError
from .optim import AdamState, adam_step

MODEL_FORMAT_VERSION = 1
SIDES = ("source", "target")
_NORM_GUARD = 1e-12


@dataclass
class ProjectionModel:
    """Parameters of the two affine-tanh maps and the training margin."""

    W_l: np.ndarray  # d x e, source side
    b_l: np.ndarray
    W_k: np.ndarray  # d x f, target side
    b_k: np.ndarray
    margin: float = 0.5

    def __post_init__(self):
        for name in ("W_l", "b_l", "W_k", "b_k"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            setattr(self, name, arr)
            if not np.isfinite(arr).all():
                raise InputError(f"projection parameter {name} contains non-finite entries")
        d = self.W_l.shape[0]
        if self.W_k.shape[0] != d or self.b_l.shape != (d,) or self.b_k.shape != (d,):
            raise DimensionError("projection parameter shapes disagree on shared dim")

    @property
    def dims(self) -> tuple[int, int, int]:
        """(e, f, d): input dims of the two sides and the shared output dim."""
        return self.W_l.shape[1], self.W_k.shape[1], self.W_l.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {"W_l": self.W_l, "b_l": self.b_l, "W_k": self.W_k, "b_k": self.b_k}


@dataclass
class ProjectionTrainConfig:
    """Hyperparameters of the ranking-loss training loop."""

    shared_dim: int = 300
    margin: float = 0.5
    dropout_rate: float = 0.5
    step_size: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 16
    max_epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.dropout_rate < 1:
            raise InputError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.shared_dim <= 0 or self.batch_size <= 0 or self.max_epochs < 0:
            raise InputError("shared_dim and batch_size must be positive, max_epochs >= 0")


@dataclass
class ParallelCorpus:
    """Aligned sentence-average vectors: row i of source translates row i of target."""

    source: np.ndarray  # N x e
    target: np.ndarray  # N x f

    def __post_init__(self):
        self.source = np.atleast_2d(np.asarray(self.source, dtype=np.float64))
        self.target = np.atleast_2d(np.asarray(self.target, dtype=np.float64))
        if self.source.shape[0] != self.target.shape[0]:
            raise DimensionError("source and target pair counts differ")
        if self.source.shape[0] == 0:
            raise InputError("parallel corpus is empty")
        if not (np.isfinite(self.source).all() and np.isfinite(self.target).all()):
            raise InputError("parallel corpus contains non-finite vectors")

    @classmethod
    def from_pairs(cls, pairs) -> "ParallelCorpus":
        src, tgt = zip(*pairs)
        return cls(np.stack(src), np.stack(tgt))

    def __len__(self) -> int:
        return self.source.shape[0]


def init_projection(e: int, f: int, d: int, seed: int) -> ProjectionModel:
    """Fan-scaled uniform weights, zero biases; deterministic per seed."""
    if min(e, f, d) <= 0:
        raise InputError("projection dims must be positive")
    rng = np.random.default_rng(seed)
    a_l = np.sqrt(6.0 / (e + d))
    a_k = np.sqrt(6.0 / (f + d))
    return ProjectionModel(
        W_l=rng.uniform(-a_l, a_l, size=(d, e)),
        b_l=np.zeros(d),
        W_k=rng.uniform(-a_k, a_k, size=(d, f)),
        b_k=np.zeros(d),
    )


def project(model: ProjectionModel, side: str, x: np.ndarray) -> np.ndarray:
    """Map a vector (or row-stack of vectors) through one side's tanh map."""
    W, b = _side_params(model, side)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != W.shape[1]:
        raise DimensionError(f"{side} input dim {x.shape[-1]} != expected {W.shape[1]}")
    return np.tanh(x @ W.T + b)


def _side_params(model: ProjectionModel, side: str):
    if side == "source":
        return model.W_l, model.b_l
    if side == "target":
        return model.W_k, model.b_k
    raise InputError(f"side must be one of {SIDES}, got {side!r}")


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity with a zero-norm guard (returns 0)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu < _NORM_GUARD or nv < _NORM_GUARD:
        return 0.0
    return float(u @ v / (nu * nv))


def hinge_loss(model: ProjectionModel, x_s, x_t, x_u, margin: float | None = None) -> float:
    """max(0, m - cos(r_s, r_t) + cos(r_s, r_u)) on the projected triple."""
    m = model.margin if margin is None else margin
    r_s = project(model, "source", x_s)
    r_t = project(model, "target", x_t)
    r_u = project(model, "target", x_u)
    return max(0.0, m - cosine(r_s, r_t) + cosine(r_s, r_u))


def hinge_loss_grads(model: ProjectionModel, Xs, Xt, Xu, margin: float | None = None):
    """Mean hinge loss over a batch of triples plus analytic parameter gradients.

    Accepts single vectors or B x dim stacks. Gradients are exact except at
    the hinge kink and at guarded zero-norm projections, where the
    subgradient 0 is used.
    """
    m = model.margin if margin is None else margin
    Xs = np.atleast_2d(np.asarray(Xs, dtype=np.float64))
    Xt = np.atleast_2d(np.asarray(Xt, dtype=np.float64))
    Xu = np.atleast_2d(np.asarray(Xu, dtype=np.float64))
    B = Xs.shape[0]

    Rs = project(model, "source", Xs)
    Rt = project(model, "target", Xt)
    Ru = project(model, "target", Xu)

    cos_st, d_st_s, d_st_t = _cosine_rows_with_grads(Rs, Rt)
    cos_su, d_su_s, d_su_u = _cosine_rows_with_grads(Rs, Ru)

    losses = m - cos_st + cos_su
    active = (losses > 0).astype(np.float64)[:, None]
    loss = float(np.maximum(losses, 0.0).mean())

    # d loss / d cos_st = -active/B, d loss / d cos_su = +active/B
    dRs = (-d_st_s + d_su_s) * active / B
    dRt = -d_st_t * active / B
    dRu = d_su_u * active / B

    dZs = dRs * (1.0 - Rs**2)
    dZt = dRt * (1.0 - Rt**2)
    dZu = dRu * (1.0 - Ru**2)

    grads = {
        "W_l": dZs.T @ Xs,
        "b_l": dZs.sum(axis=0),
        "W_k": dZt.T @ Xt + dZu.T @ Xu,
        "b_k": dZt.sum(axis=0) + dZu.sum(axis=0),
    }
    return loss, grads


def _cosine_rows_with_grads(A, B):
    """Row-wise cosine of two B x d stacks and its gradients w.r.t. each row."""
    na = np.linalg.norm(A, axis=1, keepdims=True)
    nb = np.linalg.norm(B, axis=1, keepdims=True)
    guarded = (na < _NORM_GUARD) | (nb < _NORM_GUARD)
    na_safe = np.where(na < _NORM_GUARD, 1.0, na)
    nb_safe = np.where(nb < _NORM_GUARD, 1.0, nb)
    cos = (A * B).sum(axis=1, keepdims=True) / (na_safe * nb_safe)
    cos = np.where(guarded, 0.0, cos)
    dA = B / (na_safe * nb_safe) - cos * A / na_safe**2
    dB = A / (na_safe * nb_safe) - cos * B / nb_safe**2
    dA = np.where(guarded, 0.0, dA)
    dB = np.where(guarded, 0.0, dB)
    return cos[:, 0], dA, dB


def train_projection(
    corpus: ParallelCorpus, cfg: ProjectionTrainConfig
) -> tuple[ProjectionModel, list[float]]:
    """Train both maps on aligned pairs; returns the model and per-epoch mean loss.

    Each epoch reshuffles the pairs, draws one distinct negative per pair from
    the opposite side, applies inverted dropout to all inputs, and takes Adam
    steps on minibatch mean loss. The history entry for an epoch is the mean
    hinge loss over the whole corpus at epoch end, computed without dropout
    (dropout is train-time corruption only, never part of evaluation) against
    that epoch's negatives. Fully deterministic per cfg.seed.
    """
    n = len(corpus)
    if n < 2:
        raise InputError("parallel corpus needs at least 2 pairs so a distinct negative exists")
    e = corpus.source.shape[1]
    f = corpus.target.shape[1]

    model = init_projection(e, f, cfg.shared_dim, cfg.seed)
    model.margin = cfg.margin
    params = model.params()
    state = AdamState.zeros_like(params)
    rng = np.random.default_rng(cfg.seed)
    keep = 1.0 - cfg.dropout_rate

    history: list[float] = []
    t = 0
    for _ in range(cfg.max_epochs):
        order = rng.permutation(n)
        negatives = _derangement(rng, n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xs = corpus.source[idx]
            xt = corpus.target[idx]
            xu = corpus.target[negatives[idx]]
            if cfg.dropout_rate > 0:
                xs = xs * (rng.random(xs.shape) < keep) / keep
                xt = xt * (rng.random(xt.shape) < keep) / keep
                xu = xu * (rng.random(xu.shape) < keep) / keep
            batch_model = ProjectionModel(margin=cfg.margin, **params)
            _, grads = hinge_loss_grads(batch_model, xs, xt, xu)
            t += 1
            params, state = adam_step(
                params, grads, state, t,
                step_size=cfg.step_size, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps,
            )
        epoch_model = ProjectionModel(margin=cfg.margin, **params)
        epoch_loss, _ = hinge_loss_grads(
            epoch_model, corpus.source, corpus.target, corpus.target[negatives]
        )
        history.append(epoch_loss)

    return ProjectionModel(margin=cfg.margin, **params), history


def _derangement(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random permutation with no fixed points (each pair gets a distinct negative)."""
    perm = rng.permutation(n)
    fixed = np.flatnonzero(perm == np.arange(n))
    if fixed.size == 1:
        j = (fixed[0] + 1) % n
        perm[fixed[0]], perm[j] = perm[j], perm[fixed[0]]
    elif fixed.size > 1:
        perm[fixed] = perm[np.roll(fixed, 1)]
    return perm


def project_space(model: ProjectionModel, side: str, space: EmbeddingSpace) -> EmbeddingSpace:
    """Map every word vector of a space through one side; vocab is preserved."""
    W, _ = _side_params(model, side)
    if space.dim != W.shape[1]:
        raise DimensionError(
            f"space dim {space.dim} != {side} input dim {W.shape[1]}"
        )
    return EmbeddingSpace(
        name=f"{space.name}.projected",
        dim=W.shape[0],
        vocab=dict(space.vocab),
        matrix=project(model, side, space.matrix),
        language_tag=space.language_tag,
    )


# --- serialization -----------------------------------------------------------


def projection_json(model: ProjectionModel) -> str:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "dims": dict(zip(("e", "f", "d"), model.dims)),
        "margin": model.margin,
        "W_l": model.W_l.tolist(),
        "b_l": model.b_l.tolist(),
        "W_k": model.W_k.tolist(),
        "b_k": model.b_k.tolist(),
    }
    return json.dumps(doc, indent=1) + "\n"


def save_projection(model: ProjectionModel, path) -> None:
    Path(path).write_text(projection_json(model), encoding="utf-8")


def load_projection(path) -> ProjectionModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from None
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported model format_version {version!r}")
    model = ProjectionModel(
        W_l=np.array(doc["W_l"], dtype=np.float64),
        b_l=np.array(doc["b_l"], dtype=np.float64),
        W_k=np.array(doc["W_k"], dtype=np.float64),
        b_k=np.array(doc["b_k"], dtype=np.float64),
        margin=float(doc["margin"]),
    )
    dims = dict(zip(("e", "f", "d"), model.dims))
    if doc.get("dims") != dims:
        raise FormatError(f"{path}: declared dims {doc.get('dims')} do not match arrays {dims}")
    return model
