"""Command-line surface: embed, train-projection, eval, eval-transfer, sweep.

Every command resolves its options into a RunManifest, computes all outputs
in memory, and only then writes files (atomically), so a failing run never
leaves partial outputs behind. Exit codes: 0 ok, 2 input/format error,
3 numerical-policy error (--strict), 64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import TrainProtocol
from .embeddings import OovPolicy, TokenizerConfig, load_text_embeddings
from .errors import InputError, NumericalPolicyError
from .evaluation import (
    TransferPair,
    emit_report,
    evaluate_monolingual,
    evaluate_transfer,
    load_task,
    sweep_pmeans,
    EvalReport,
    ReportRow,
    TaskResult,
)
from .manifest import RunManifest, write_atomic
from .pooling import (
    SingularityPolicy,
    embed_corpus,
    format_p,
    parse_config_text,
    parse_p,
    pool_sentence,
    resolve_config,
    znorm_apply,
    znorm_fit,
)
from .embeddings import tokenize
from .projection import (
    ParallelCorpus,
    ProjectionTrainConfig,
    projection_json,
    train_projection,
)

USAGE_EXIT = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _default_seed() -> int:
    return int(os.environ.get("PMEAN_SEED", "0"))


def _add_common(p: _Parser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="global seed (default: $PMEAN_SEED or 0)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker budget; results are identical for any value")
    p.add_argument("--no-lowercase", action="store_true",
                   help="keep token case when tokenizing")
    p.add_argument("--oov", choices=("skip", "zero"), default="skip",
                   help="out-of-vocabulary handling")
    p.add_argument("--strict", action="store_true",
                   help="error out on undefined power means instead of zeroing")


def _add_protocol(p: _Parser) -> None:
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--epochs", type=int, default=25)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr-grid", default="0.1,0.01,0.001,0.0001",
                   help="comma-separated learning rates to grid-search")
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--znorm", action="store_true",
                   help="standardize embeddings (fit on training data only)")


def build_parser() -> _Parser:
    parser = _Parser(prog="pmean", description=__doc__)
    parser.add_argument("--version", action="version", version=f"pmean {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("embed", help="embed sentences with a pooled config")
    p.add_argument("--config", required=True, help="pooled-space config file")
    p.add_argument("--input", required=True, help="sentences, one per line")
    p.add_argument("--output", required=True, help="TSV matrix output path")
    p.add_argument("--znorm", action="store_true",
                   help="standardize over the whole input; params go in the manifest")
    _add_common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train-projection", help="train the bilingual tanh maps")
    p.add_argument("--source-embeddings", required=True)
    p.add_argument("--target-embeddings", required=True)
    p.add_argument("--pairs", required=True,
                   help="parallel sentences: source TAB target per line")
    p.add_argument("--model-out", required=True)
    p.add_argument("--history-out", required=True, help="per-epoch loss CSV")
    p.add_argument("--shared-dim", type=int, default=300)
    p.add_argument("--margin", type=float, default=0.5)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--step-size", type=float, default=1e-3)
    _add_common(p)
    p.set_defaults(func=cmd_train_projection)

    p = sub.add_parser("eval", help="score one task with one pooled config")
    p.add_argument("--config", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--out", required=True, help="report base path (.json/.md appended)")
    _add_protocol(p)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eval-transfer", help="train on one language, test on another")
    p.add_argument("--source-config", required=True)
    p.add_argument("--target-config", required=True)
    p.add_argument("--train-task", required=True)
    p.add_argument("--test-task", required=True)
    p.add_argument("--out", required=True)
    _add_protocol(p)
    _add_common(p)
    p.set_defaults(func=cmd_eval_transfer)

    p = sub.add_parser("sweep", help="evaluate several p-value sets over fixed spaces")
    p.add_argument("--config", required=True,
                   help="config file naming the spaces (its p values are ignored)")
    p.add_argument("--p-set", action="append", required=True,
                   help="comma-separated p values; repeat for more rows")
    p.add_argument("--task", action="append", required=True,
                   help="task file; repeat for more columns")
    p.add_argument("--out", required=True)
    _add_protocol(p)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def _seed_of(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _policies(args):
    tokenizer = TokenizerConfig(lowercase=not args.no_lowercase)
    oov = OovPolicy(mode=args.oov)
    sing = SingularityPolicy(on_undefined="error" if args.strict else "nan_to_zero")
    return tokenizer, oov, sing


def _load_spaces(config_path, manifest: RunManifest):
    """Load every space a config file references through its path= fields."""
    text = Path(config_path).read_text(encoding="utf-8")
    manifest.add_input(config_path)
    entries = parse_config_text(text, source=str(config_path))
    spaces = {}
    base = Path(config_path).parent
    for e in entries:
        if e.space in spaces:
            continue
        if not e.path:
            raise InputError(f"config entry {e.space!r} needs a path= to load from")
        path = Path(e.path)
        if not path.is_absolute():
            path = base / path
        spaces[e.space] = load_text_embeddings(path, name=e.space, language_tag=e.lang)
        manifest.add_input(path)
    return entries, spaces


def _protocol_of(args) -> TrainProtocol:
    try:
        lr_grid = tuple(float(v) for v in args.lr_grid.split(",") if v)
    except ValueError:
        raise InputError(f"--lr-grid must be comma-separated floats, got {args.lr_grid!r}") from None
    return TrainProtocol(
        lr_grid=lr_grid,
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        runs=args.runs,
        val_fraction=args.val_fraction,
        test_fraction=args.test_fraction,
        seed=_seed_of(args),
    )


def _protocol_config(args) -> dict:
    return {
        "runs": args.runs, "epochs": args.epochs, "batch_size": args.batch_size,
        "lr_grid": args.lr_grid, "val_fraction": args.val_fraction,
        "test_fraction": args.test_fraction, "znorm": args.znorm,
        "oov": args.oov, "strict": args.strict, "lowercase": not args.no_lowercase,
    }


def _write_report(base, report: EvalReport, manifest: RunManifest) -> None:
    base = Path(base)
    write_atomic(base.with_suffix(".json"), emit_report(report, "json"))
    write_atomic(base.with_suffix(".md"), emit_report(report, "markdown"))
    write_atomic(base.with_suffix(".manifest.json"), manifest.to_json())


# --- commands -----------------------------------------------------------------


def cmd_embed(args) -> int:
    seed = _seed_of(args)
    manifest = RunManifest(
        command="embed",
        config={"znorm": args.znorm, "oov": args.oov, "strict": args.strict,
                "lowercase": not args.no_lowercase},
        seeds={"seed": seed},
        tool_version=__version__,
    )
    entries, spaces = _load_spaces(args.config, manifest)
    cfg = resolve_config(entries, spaces)
    manifest.config["pooling"] = [
        {"space": e.space, "p": [format_p(p) for p in e.p_values]} for e in entries
    ]

    sentences = Path(args.input).read_text(encoding="utf-8").splitlines()
    manifest.add_input(args.input)

    tokenizer, oov, sing = _policies(args)
    X = embed_corpus(cfg, sentences, tokenizer, oov, sing)
    if args.znorm and X.shape[0] > 0:
        params = znorm_fit(X)
        X = znorm_apply(params, X)
        manifest.extra["znorm_params"] = {
            "mean": params.mean.tolist(), "std": params.std.tolist(),
        }
    manifest.extra["undefined_pool_entries"] = sing.undefined_counter

    lines = ["\t".join(repr(float(v)) for v in row) for row in X]
    write_atomic(args.output, "\n".join(lines) + ("\n" if lines else ""))
    write_atomic(str(args.output) + ".manifest.json", manifest.to_json())
    return 0


def cmd_train_projection(args) -> int:
    seed = _seed_of(args)
    cfg = ProjectionTrainConfig(
        shared_dim=args.shared_dim, margin=args.margin, dropout_rate=args.dropout,
        step_size=args.step_size, batch_size=args.batch_size,
        max_epochs=args.epochs, seed=seed,
    )
    manifest = RunManifest(
        command="train-projection",
        config={"shared_dim": cfg.shared_dim, "margin": cfg.margin,
                "dropout": cfg.dropout_rate, "epochs": cfg.max_epochs,
                "batch_size": cfg.batch_size, "step_size": cfg.step_size,
                "oov": args.oov, "lowercase": not args.no_lowercase},
        seeds={"seed": seed},
        tool_version=__version__,
    )
    src_space = load_text_embeddings(args.source_embeddings)
    tgt_space = load_text_embeddings(args.target_embeddings)
    manifest.add_input(args.source_embeddings)
    manifest.add_input(args.target_embeddings)

    tokenizer, oov, sing = _policies(args)
    src_rows, tgt_rows = [], []
    with open(args.pairs, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            src, tab, tgt = line.partition("\t")
            if not tab:
                raise InputError(f"{args.pairs}:{lineno}: expected 'source TAB target'")
            src_rows.append(pool_sentence(src_space, [1.0], tokenize(tokenizer, src), oov, sing))
            tgt_rows.append(pool_sentence(tgt_space, [1.0], tokenize(tokenizer, tgt), oov, sing))
    manifest.add_input(args.pairs)
    if not src_rows:
        raise InputError(f"{args.pairs}: no sentence pairs")

    corpus = ParallelCorpus(np.stack(src_rows), np.stack(tgt_rows))
    model, history = train_projection(corpus, cfg)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epoch", "mean_loss"])
    for epoch, loss in enumerate(history, start=1):
        writer.writerow([epoch, repr(loss)])

    write_atomic(args.model_out, projection_json(model))
    write_atomic(args.history_out, buf.getvalue())
    write_atomic(str(args.model_out) + ".manifest.json", manifest.to_json())
    return 0


def cmd_eval(args) -> int:
    manifest = RunManifest(
        command="eval", config=_protocol_config(args),
        seeds={"seed": _seed_of(args)}, tool_version=__version__,
    )
    entries, spaces = _load_spaces(args.config, manifest)
    cfg = resolve_config(entries, spaces)
    ds = load_task(args.task)
    manifest.add_input(args.task)

    tokenizer, oov, sing = _policies(args)
    score = evaluate_monolingual(cfg, ds, _protocol_of(args), args.znorm,
                                 tokenizer, oov, sing)
    report = EvalReport(rows=[ReportRow.from_results(cfg.describe(), [
        TaskResult(task=ds.name, metric=score.metric, score=score.mean, std=score.std)
    ])])
    _write_report(args.out, report, manifest)
    return 0


def cmd_eval_transfer(args) -> int:
    manifest = RunManifest(
        command="eval-transfer", config=_protocol_config(args),
        seeds={"seed": _seed_of(args)}, tool_version=__version__,
    )
    src_entries, src_spaces = _load_spaces(args.source_config, manifest)
    tgt_entries, tgt_spaces = _load_spaces(args.target_config, manifest)
    cfg_src = resolve_config(src_entries, src_spaces)
    cfg_tgt = resolve_config(tgt_entries, tgt_spaces)
    pair = TransferPair(train=load_task(args.train_task), test=load_task(args.test_task))
    manifest.add_input(args.train_task)
    manifest.add_input(args.test_task)

    tokenizer, oov, sing = _policies(args)
    res = evaluate_transfer(cfg_src, cfg_tgt, pair, _protocol_of(args), args.znorm,
                            tokenizer, oov, sing)
    report = EvalReport(rows=[ReportRow.from_results(cfg_src.describe(), [
        TaskResult(task=pair.train.name, metric=res.cross.metric,
                   score=res.cross.mean, std=res.cross.std,
                   in_language=res.in_language.mean, drop=res.drop)
    ])])
    _write_report(args.out, report, manifest)
    return 0


def cmd_sweep(args) -> int:
    manifest = RunManifest(
        command="sweep", config=_protocol_config(args),
        seeds={"seed": _seed_of(args)}, tool_version=__version__,
    )
    manifest.config["p_sets"] = args.p_set
    entries, spaces = _load_spaces(args.config, manifest)
    seen = []
    for e in entries:
        if e.space not in seen:
            seen.append(e.space)
    ordered = [spaces[name] for name in seen]
    p_sets = [[parse_p(tok) for tok in ps.split(",") if tok] for ps in args.p_set]

    tasks = []
    for task_path in args.task:
        tasks.append(load_task(task_path))
        manifest.add_input(task_path)

    tokenizer, oov, sing = _policies(args)
    report = sweep_pmeans(ordered, p_sets, tasks, _protocol_of(args), args.znorm,
                          tokenizer, oov, sing)
    _write_report(args.out, report, manifest)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit:
        raise
    except NumericalPolicyError as exc:
        print(f"pmean: numerical policy error: {exc}", file=sys.stderr)
        return 3
    except (InputError, OSError) as exc:
        print(f"pmean: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
