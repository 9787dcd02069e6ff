"""Synthetic spaces, tasks, and corpora for desk-scale experiments.

Real transfer corpora and pretrained vectors are multi-GB downloads, so the
test and demo pipelines run on constructed data instead. The builders here
plant known signals (a mean-detectable bit in one space, a max-detectable bit
in another, bilingual twin vocabularies, orthogonally related pair corpora)
so that expected outcomes are known by construction.
"""
from __future__ import annotations

import numpy as np

from .embeddings import EmbeddingSpace
from .evaluation import TaskDataset
from .projection import ParallelCorpus

SENT_LEN = 10
_N_SIGNAL = 7  # mean-signal tokens per sentence; the rest carry the max signal


def make_complementarity_task(
    seed: int = 0,
    n_sentences: int = 400,
    dim: int = 16,
    mean_dim: int = 0,
    max_dim: int = 3,
) -> tuple[EmbeddingSpace, EmbeddingSpace, TaskDataset]:
    """Two spaces whose signals need different pooling, plus a 4-class task.

    Space A carries a sentence bit in the *average* of column ``mean_dim``
    (tokens cluster at +1 or -1 there). Space B carries an independent bit in
    the *maximum* of column ``max_dim``: one token spikes to 3.0, while the
    other class spreads the same column mass over three tokens at 1.0, so the
    column means match and only max pooling separates the bit. The label is
    the bit pair, so no single-space mean-pooled representation can resolve
    all four classes.
    """
    rng = np.random.default_rng(seed)

    pools = {
        "pos": 40, "neg": 40,   # space-A mean signal at +/-1
        "peak": 10, "bump": 20, # space-B max signal: 3.0 spike vs 1.0 spread
        "flat": 40,             # padding alongside peaks
    }
    vocab: dict[str, int] = {}
    rows_a, rows_b = [], []
    for pool, count in pools.items():
        for i in range(count):
            a = rng.uniform(-1, 1, size=dim)
            b = rng.uniform(-1, 1, size=dim)
            if pool == "pos":
                a[mean_dim] = 1.0 + 0.1 * rng.standard_normal()
            elif pool == "neg":
                a[mean_dim] = -1.0 + 0.1 * rng.standard_normal()
            elif pool == "peak":
                b[max_dim] = 3.0 + 0.1 * rng.standard_normal()
            elif pool == "bump":
                b[max_dim] = 1.0 + 0.1 * rng.standard_normal()
            vocab[f"{pool}{i}"] = len(rows_a)
            rows_a.append(a)
            rows_b.append(b)

    def draw(pool: str, k: int) -> list[str]:
        return [f"{pool}{j}" for j in rng.integers(0, pools[pool], size=k)]

    items = []
    for idx in range(n_sentences):
        s1 = idx % 2
        s2 = (idx // 2) % 2
        tokens = draw("pos" if s1 else "neg", _N_SIGNAL)
        if s2:
            tokens += draw("peak", 1) + draw("flat", SENT_LEN - _N_SIGNAL - 1)
        else:
            tokens += draw("bump", SENT_LEN - _N_SIGNAL)
        rng.shuffle(tokens)
        items.append((f"c{s1}{s2}", " ".join(tokens)))

    space_a = EmbeddingSpace("A", dim, dict(vocab), np.stack(rows_a))
    space_b = EmbeddingSpace("B", dim, dict(vocab), np.stack(rows_b))
    task = TaskDataset(name="mixed-signals", classes=["c00", "c01", "c10", "c11"],
                       items=items, metric_kind="accuracy")
    return space_a, space_b, task


def scale_space(space: EmbeddingSpace, factor: float, name: str | None = None) -> EmbeddingSpace:
    """Copy of a space with every vector multiplied by a constant."""
    return EmbeddingSpace(
        name=name or f"{space.name}x{factor:g}",
        dim=space.dim,
        vocab=dict(space.vocab),
        matrix=space.matrix * factor,
        language_tag=space.language_tag,
    )


def make_blobs_task(
    seed: int = 0,
    n_sentences: int = 300,
    dim: int = 16,
    vocab_per_class: int = 30,
    center_scale: float = 1.0,
    noise: float = 0.3,
    language_tag: str = "en",
) -> tuple[EmbeddingSpace, TaskDataset]:
    """Binary task whose token vectors cluster around two opposite centers."""
    rng = np.random.default_rng(seed)
    center = rng.standard_normal(dim)
    center *= center_scale / np.linalg.norm(center)

    vocab: dict[str, int] = {}
    rows = []
    for label, sign in (("good", 1.0), ("bad", -1.0)):
        for i in range(vocab_per_class):
            vocab[f"{label}{i}"] = len(rows)
            rows.append(sign * center + noise * rng.standard_normal(dim))

    items = []
    for idx in range(n_sentences):
        label = "pos" if idx % 2 == 0 else "neg"
        pool = "good" if label == "pos" else "bad"
        tokens = [f"{pool}{j}" for j in rng.integers(0, vocab_per_class, size=8)]
        items.append((label, " ".join(tokens)))

    space = EmbeddingSpace("blobs", dim, vocab, np.stack(rows), language_tag=language_tag)
    task = TaskDataset(name="blobs", classes=["pos", "neg"], items=items,
                       metric_kind="accuracy", language_tag=language_tag)
    return space, task


def make_quad_blobs_task(
    seed: int = 0,
    n_sentences: int = 400,
    dim: int = 64,
    vocab_per_class: int = 30,
    separation: float = 0.7,
    noise: float = 0.65,
    language_tag: str = "en",
) -> tuple[EmbeddingSpace, TaskDataset]:
    """Four-class task: token clusters at the corners of two orthogonal axes.

    Classes encode a bit pair, so transfer through a misaligned map has to
    get two directions right at once; that keeps chance-level behavior tight
    compared to a single-direction binary task.
    """
    rng = np.random.default_rng(seed)
    u1 = rng.standard_normal(dim)
    u1 /= np.linalg.norm(u1)
    u2 = rng.standard_normal(dim)
    u2 -= (u2 @ u1) * u1
    u2 /= np.linalg.norm(u2)

    vocab: dict[str, int] = {}
    rows = []
    for b1 in (0, 1):
        for b2 in (0, 1):
            center = separation * ((1 if b1 else -1) * u1 + (1 if b2 else -1) * u2)
            for i in range(vocab_per_class):
                vocab[f"q{b1}{b2}_{i}"] = len(rows)
                rows.append(center + noise * rng.standard_normal(dim))

    items = []
    for idx in range(n_sentences):
        b1, b2 = idx % 2, (idx // 2) % 2
        tokens = [f"q{b1}{b2}_{j}" for j in rng.integers(0, vocab_per_class, size=8)]
        items.append((f"c{b1}{b2}", " ".join(tokens)))

    space = EmbeddingSpace("quad", dim, vocab, np.stack(rows), language_tag=language_tag)
    task = TaskDataset(name="quad", classes=["c00", "c01", "c10", "c11"], items=items,
                       metric_kind="accuracy", language_tag=language_tag)
    return space, task


def make_max_signal_task(
    seed: int = 0,
    n_sentences: int = 300,
    dim: int = 16,
    max_dim: int = 3,
) -> tuple[EmbeddingSpace, TaskDataset]:
    """Binary task detectable by max pooling but mean-blind by construction.

    Every sentence has 3 marker tokens and 7 fills. One class marks with a
    single 3.0 spike in column ``max_dim`` plus two 0.0 pads; the other with
    three 1.0 bumps, so the column sums match exactly. All pools are centered
    to exact zero mean in the noise dimensions, leaving arithmetic-mean
    embeddings with no systematic class difference.
    """
    rng = np.random.default_rng(seed)
    pools = {"peak": 20, "pad": 20, "bump": 20, "fill": 60}
    signal = {"peak": 3.0, "pad": 0.0, "bump": 1.0}
    vocab: dict[str, int] = {}
    rows = []
    for pool, count in pools.items():
        noise = rng.uniform(-1, 1, size=(count, dim))
        noise -= noise.mean(axis=0)
        if pool in signal:
            noise[:, max_dim] = signal[pool]
        for i in range(count):
            vocab[f"{pool}{i}"] = len(rows)
            rows.append(noise[i])

    def draw(pool: str, k: int) -> list[str]:
        return [f"{pool}{j}" for j in rng.integers(0, pools[pool], size=k)]

    items = []
    for idx in range(n_sentences):
        spiked = idx % 2 == 0
        if spiked:
            tokens = draw("peak", 1) + draw("pad", 2)
        else:
            tokens = draw("bump", 3)
        tokens += draw("fill", SENT_LEN - 3)
        rng.shuffle(tokens)
        items.append(("hi" if spiked else "lo", " ".join(tokens)))

    space = EmbeddingSpace("spikes", dim, vocab, np.stack(rows))
    task = TaskDataset(name="spikes", classes=["hi", "lo"], items=items,
                       metric_kind="accuracy")
    return space, task


def twin_space(space: EmbeddingSpace, suffix: str = "_x",
               name: str | None = None, language_tag: str | None = None) -> EmbeddingSpace:
    """A 'foreign' copy: every token renamed with a suffix, vectors unchanged."""
    return EmbeddingSpace(
        name=name or f"{space.name}{suffix}",
        dim=space.dim,
        vocab={f"{tok}{suffix}": idx for tok, idx in space.vocab.items()},
        matrix=space.matrix.copy(),
        language_tag=language_tag,
    )


def merge_spaces(a: EmbeddingSpace, b: EmbeddingSpace, name: str) -> EmbeddingSpace:
    """Union of two disjoint vocabularies into one shared (bilingual) space."""
    overlap = set(a.vocab) & set(b.vocab)
    if overlap:
        raise ValueError(f"cannot merge spaces with overlapping tokens: {sorted(overlap)[:3]}")
    if a.dim != b.dim:
        raise ValueError("cannot merge spaces of different dimensionality")
    vocab = dict(a.vocab)
    for tok, idx in b.vocab.items():
        vocab[tok] = len(a.vocab) + idx
    return EmbeddingSpace(name, a.dim, vocab, np.vstack([a.matrix, b.matrix]))


def swap_dictionary(ds: TaskDataset, suffix: str = "_x",
                    name: str | None = None, language_tag: str | None = None) -> TaskDataset:
    """Token-for-token translation of a task into the suffixed twin vocabulary."""
    items = [
        (label, " ".join(f"{tok}{suffix}" for tok in text.split()))
        for label, text in ds.items
    ]
    return TaskDataset(name=name or f"{ds.name}{suffix}", classes=list(ds.classes),
                       items=items, metric_kind=ds.metric_kind, language_tag=language_tag)


def random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-ish random orthogonal matrix via QR of a Gaussian draw."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def make_parallel_corpus(
    seed: int = 0,
    n_pairs: int = 500,
    dim: int = 16,
    noise: float = 0.05,
) -> tuple[ParallelCorpus, np.ndarray]:
    """Aligned pairs where target = (random orthogonal map of source) + noise."""
    rng = np.random.default_rng(seed)
    q = random_orthogonal(rng, dim)
    source = rng.standard_normal((n_pairs, dim))
    target = source @ q.T + noise * rng.standard_normal((n_pairs, dim))
    return ParallelCorpus(source=source, target=target), q
