"""Task loading, monolingual and train-source/test-target evaluation, p-value
sweeps, and report emission.

Task file grammar (UTF-8, one item per line after the headers):

    #name=<task name>
    #metric=accuracy|macro_f1
    #lang=<tag>            (optional)
    <label>TAB<sentence text>

Before any seeded subsampling, items are canonicalized by lexicographic sort
and label order by sorted class set, so reshuffling a task file never changes
reported scores.
"""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import (
    ACCURACY,
    METRICS,
    EvalScore,
    TrainProtocol,
    metrics,
    subsample_runs,
    subsample_validate,
)
from .embeddings import OovPolicy, TokenizerConfig
from .errors import DimensionError, FormatError, InputError
from .pooling import PooledConfig, PooledPart, SingularityPolicy, embed_corpus, znorm_apply

REPORT_FORMAT_VERSION = 1

logger = logging.getLogger(__name__)


@dataclass
class TaskDataset:
    """Labeled sentences with their class set and scoring metric."""

    name: str
    classes: list
    items: list[tuple]  # (label, sentence text)
    metric_kind: str = ACCURACY
    language_tag: str | None = None

    def __post_init__(self):
        if len(self.classes) < 2:
            raise InputError(f"task {self.name!r}: needs at least 2 classes")
        if not self.items:
            raise InputError(f"task {self.name!r}: no items")
        if self.metric_kind not in METRICS:
            raise InputError(f"task {self.name!r}: unknown metric {self.metric_kind!r}")
        class_set = set(self.classes)
        for label, _ in self.items:
            if label not in class_set:
                raise InputError(f"task {self.name!r}: item label {label!r} not in class set")

    def texts(self) -> list[str]:
        return [text for _, text in self.items]

    def labels(self) -> list:
        return [label for label, _ in self.items]


@dataclass
class TransferPair:
    """A training task and its other-language counterpart with aligned classes."""

    train: TaskDataset
    test: TaskDataset

    def __post_init__(self):
        if self.train.classes != self.test.classes:
            raise InputError(
                f"transfer pair {self.train.name!r}/{self.test.name!r}: "
                "class sets must be identical and identically ordered"
            )


def load_task(path) -> TaskDataset:
    """Parse one task file; classes are inferred in first-appearance order."""
    path = Path(path)
    name = None
    metric_kind = None
    lang = None
    classes: list = []
    items: list[tuple] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            if line.startswith("#"):
                if items:
                    raise FormatError(f"{path}:{lineno}: header after data lines")
                key, _, value = line[1:].partition("=")
                if key == "name":
                    name = value
                elif key == "metric":
                    if value not in METRICS:
                        raise FormatError(f"{path}:{lineno}: metric must be one of {METRICS}")
                    metric_kind = value
                elif key == "lang":
                    lang = value
                else:
                    raise FormatError(f"{path}:{lineno}: unknown header key {key!r}")
                continue
            if name is None or metric_kind is None:
                raise FormatError(f"{path}:{lineno}: #name= and #metric= must precede data")
            label, tab, text = line.partition("\t")
            if not tab or not label:
                raise FormatError(f"{path}:{lineno}: expected 'label<TAB>sentence'")
            if label not in classes:
                classes.append(label)
            items.append((label, text))
    if not items:
        raise FormatError(f"{path}: no data lines")
    if len(classes) < 2:
        raise FormatError(f"{path}: fewer than 2 classes")
    counts = Counter(label for label, _ in items)
    logger.info("%s: task %r, %d items, per-class counts %s", path, name, len(items),
                dict(counts))
    return TaskDataset(name=name, classes=classes, items=items,
                       metric_kind=metric_kind, language_tag=lang)


def save_task(ds: TaskDataset, path) -> None:
    lines = [f"#name={ds.name}", f"#metric={ds.metric_kind}"]
    if ds.language_tag:
        lines.append(f"#lang={ds.language_tag}")
    lines.extend(f"{label}\t{text}" for label, text in ds.items)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _canonical(ds: TaskDataset) -> tuple[list, list[str], list]:
    items = sorted(ds.items)
    labels = sorted(ds.classes)
    return [lab for lab, _ in items], [text for _, text in items], labels


def evaluate_monolingual(
    cfg: PooledConfig,
    ds: TaskDataset,
    protocol: TrainProtocol,
    znorm: bool = False,
    tokenizer: TokenizerConfig | None = None,
    oov_policy: OovPolicy | None = None,
    sing_policy: SingularityPolicy | None = None,
) -> EvalScore:
    """Embed a task and score it with repeated-subsample validation.

    Every configured space must either carry no language tag (treated as
    shared/bilingual) or match the task's language.
    """
    for part in cfg.parts:
        tag = part.space.language_tag
        if tag is not None and ds.language_tag is not None and tag != ds.language_tag:
            raise InputError(
                f"space {part.space.name!r} is tagged {tag!r} but task "
                f"{ds.name!r} is {ds.language_tag!r}"
            )
    y, texts, labels = _canonical(ds)
    X = embed_corpus(cfg, texts, tokenizer, oov_policy, sing_policy)
    return subsample_validate(X, y, protocol, ds.metric_kind, labels=labels, znorm=znorm)


def _check_aligned_configs(cfg_src: PooledConfig, cfg_tgt: PooledConfig) -> None:
    if len(cfg_src.parts) != len(cfg_tgt.parts):
        raise DimensionError("source and target configs have different part counts")
    for a, b in zip(cfg_src.parts, cfg_tgt.parts):
        if a.p_values != b.p_values or a.space.dim != b.space.dim:
            raise DimensionError(
                f"config parts {a.space.name!r} and {b.space.name!r} differ in "
                "p-values or dimensionality"
            )


def fit_transfer(
    cfg_src: PooledConfig,
    train_ds: TaskDataset,
    protocol: TrainProtocol,
    znorm: bool = False,
    tokenizer: TokenizerConfig | None = None,
    oov_policy: OovPolicy | None = None,
    sing_policy: SingularityPolicy | None = None,
) -> list[tuple]:
    """Fit per-run classifiers (and z-norm stats) from source-language data only.

    Target-language data never enters here; it is seen exclusively by
    score_transfer.
    """
    y, texts, labels = _canonical(train_ds)
    X = embed_corpus(cfg_src, texts, tokenizer, oov_policy, sing_policy)
    return [
        (model, zn)
        for model, zn, _ in subsample_runs(X, y, protocol, train_ds.metric_kind,
                                           labels=labels, znorm=znorm)
    ]


def score_transfer(
    fitted: list[tuple],
    cfg_tgt: PooledConfig,
    test_ds: TaskDataset,
    tokenizer: TokenizerConfig | None = None,
    oov_policy: OovPolicy | None = None,
    sing_policy: SingularityPolicy | None = None,
) -> EvalScore:
    """Score already-fitted run models on the full target-language test set."""
    y, texts, _ = _canonical(test_ds)
    X = embed_corpus(cfg_tgt, texts, tokenizer, oov_policy, sing_policy)
    scores = []
    for model, zn in fitted:
        X_t = znorm_apply(zn, X) if zn is not None else X
        scores.append(metrics(y, model.predict(X_t), test_ds.metric_kind,
                              labels=model.class_labels))
    return EvalScore.from_runs(test_ds.metric_kind, scores)


@dataclass
class TransferResult:
    cross: EvalScore
    in_language: EvalScore

    @property
    def drop(self) -> float:
        return self.in_language.mean - self.cross.mean


def evaluate_transfer(
    cfg_src: PooledConfig,
    cfg_tgt: PooledConfig,
    pair: TransferPair,
    protocol: TrainProtocol,
    znorm: bool = False,
    tokenizer: TokenizerConfig | None = None,
    oov_policy: OovPolicy | None = None,
    sing_policy: SingularityPolicy | None = None,
) -> TransferResult:
    """Train on the source-language task, score on the target-language one.

    Per run, the classifier is fit on a stratified subsample of the source
    task and scored on the full target test set; the in-language score is the
    standard subsample validation of the source task with identical run seeds,
    so both sides share their training splits.
    """
    _check_aligned_configs(cfg_src, cfg_tgt)
    fitted = fit_transfer(cfg_src, pair.train, protocol, znorm,
                          tokenizer, oov_policy, sing_policy)
    cross = score_transfer(fitted, cfg_tgt, pair.test, tokenizer, oov_policy, sing_policy)
    in_language = evaluate_monolingual(cfg_src, pair.train, protocol, znorm,
                                       tokenizer, oov_policy, sing_policy)
    return TransferResult(cross=cross, in_language=in_language)


# --- reports ------------------------------------------------------------------


@dataclass
class TaskResult:
    """One task cell of a report row; score is the headline number.

    For transfer cells the headline is the cross-language score and
    in_language/drop are filled; monolingual cells leave them None.
    """

    task: str
    metric: str
    score: float
    std: float
    in_language: float | None = None
    drop: float | None = None

    def __post_init__(self):
        if (self.in_language is None) != (self.drop is None):
            raise InputError("in_language and drop must be set together")
        if self.drop is not None and abs(self.drop - (self.in_language - self.score)) > 1e-12:
            raise InputError(
                f"task {self.task!r}: drop {self.drop} != in_language - score "
                f"{self.in_language - self.score}"
            )


@dataclass
class ReportRow:
    model: str
    results: list[TaskResult]
    sigma: float

    def __post_init__(self):
        if not self.results:
            raise InputError("report row has no task results")
        expected = float(np.mean([r.score for r in self.results]))
        if abs(self.sigma - expected) > 1e-12:
            raise InputError(f"row {self.model!r}: sigma {self.sigma} != mean {expected}")

    @classmethod
    def from_results(cls, model: str, results: list[TaskResult]) -> "ReportRow":
        return cls(model=model, results=results,
                   sigma=float(np.mean([r.score for r in results])))


@dataclass
class EvalReport:
    rows: list[ReportRow]
    version: int = REPORT_FORMAT_VERSION


def sweep_pmeans(
    spaces,
    p_sets: list[list[float]],
    tasks,
    protocol: TrainProtocol,
    znorm: bool = False,
    tokenizer: TokenizerConfig | None = None,
    oov_policy: OovPolicy | None = None,
    sing_policy: SingularityPolicy | None = None,
) -> EvalReport:
    """Evaluate the same spaces under different p-value sets, one row per set.

    Tasks may be TaskDatasets (monolingual cells) or TransferPairs (cells get
    cross score, in-language score, and drop). Transfer rows reuse the same
    config on both sides, so the spaces must be shared/bilingual.
    """
    spaces = list(spaces)
    tasks = list(tasks)
    if not tasks:
        raise InputError("sweep needs at least one task")
    if not p_sets:
        raise InputError("sweep needs at least one p-value set")

    rows = []
    for p_set in p_sets:
        cfg = PooledConfig([PooledPart(sp, list(p_set)) for sp in spaces])
        results = []
        for task in tasks:
            if isinstance(task, TransferPair):
                res = evaluate_transfer(cfg, cfg, task, protocol, znorm,
                                        tokenizer, oov_policy, sing_policy)
                results.append(TaskResult(
                    task=task.train.name,
                    metric=res.cross.metric,
                    score=res.cross.mean,
                    std=res.cross.std,
                    in_language=res.in_language.mean,
                    drop=res.in_language.mean - res.cross.mean,
                ))
            else:
                score = evaluate_monolingual(cfg, task, protocol, znorm,
                                             tokenizer, oov_policy, sing_policy)
                results.append(TaskResult(task=task.name, metric=score.metric,
                                          score=score.mean, std=score.std))
        rows.append(ReportRow.from_results(cfg.describe(), results))
    return EvalReport(rows=rows)


def emit_report(report: EvalReport, fmt: str) -> str:
    """Render a report as versioned JSON or a markdown table.

    Markdown shows percentages with the cross-language drop in parentheses;
    JSON keeps raw [0, 1] floats and round-trips via parse_report.
    """
    if fmt == "json":
        doc = {
            "version": report.version,
            "rows": [
                {
                    "model": row.model,
                    "sigma": row.sigma,
                    "tasks": [
                        {
                            "task": r.task,
                            "metric": r.metric,
                            "score": r.score,
                            "std": r.std,
                            "in_language": r.in_language,
                            "drop": r.drop,
                        }
                        for r in row.results
                    ],
                }
                for row in report.rows
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt != "markdown":
        raise InputError(f"unknown report format {fmt!r}")

    task_names = [r.task for r in report.rows[0].results]
    header = ["Model", "Σ", *task_names]
    lines = ["| " + " | ".join(header) + " |",
             "| " + " | ".join("---" for _ in header) + " |"]
    for row in report.rows:
        cells = [row.model, f"{100 * row.sigma:.1f}"]
        for r in row.results:
            cell = f"{100 * r.score:.1f}"
            if r.drop is not None:
                cell += f" ({100 * r.drop:.1f})"
            cells.append(cell)
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> EvalReport:
    """Inverse of emit_report(fmt="json"); rejects unknown versions."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"report is not valid JSON: {exc}") from None
    if doc.get("version") != REPORT_FORMAT_VERSION:
        raise FormatError(f"unsupported report version {doc.get('version')!r}")
    rows = []
    for row in doc["rows"]:
        results = [
            TaskResult(task=t["task"], metric=t["metric"], score=t["score"], std=t["std"],
                       in_language=t["in_language"], drop=t["drop"])
            for t in row["tasks"]
        ]
        rows.append(ReportRow(model=row["model"], results=results, sigma=row["sigma"]))
    return EvalReport(rows=rows)
