"""Command-line entry point: ``arsent <command> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import classifiers, cnn, embedding, lexicon, pipeline
from .errors import ArsentError
from .features import FEATURE_MODES, read_tagged
from .normalizer import corpus_stats, iter_stripped_lines, normalize

log = logging.getLogger("arsent")


def _choices(value: str, allowed, what: str) -> list[str]:
    if value == "all":
        return list(allowed)
    out = [v.strip() for v in value.split(",") if v.strip()]
    for v in out:
        if v in classifiers.EXCLUDED and what == "classifier":
            raise ArsentError(f"--clf {v} is not available: {classifiers.EXCLUDED[v]}")
        if v not in allowed:
            raise ArsentError(f"unknown {what} {v!r}; choose from {', '.join(allowed)} or all")
    return out


def cmd_normalize(args) -> int:
    before = after = 0
    with open(args.input, encoding="utf-8") as src, \
            open(args.output, "w", encoding="utf-8", newline="\n") as dst:
        for line in iter_stripped_lines(src, args.format):
            before += len(line.split())
            clean = normalize(line)
            after += len(clean.split())
            if clean:
                dst.write(clean + "\n")
    stats = corpus_stats(before, after).as_tsv()
    if args.stats:
        Path(args.stats).write_text(stats, encoding="utf-8")
    else:
        sys.stdout.write(stats)
    return 0


def cmd_w2v_train(args) -> int:
    cfg = embedding.TrainingConfig(
        architecture=args.arch, dim=args.dim, window=args.window, negatives=args.negative,
        min_count=args.min_count, epochs=args.epochs, seed=args.seed, workers=args.workers)
    model = embedding.train(embedding.LineCorpus(args.corpus), cfg)
    embedding.save(model, args.out)
    log.info("saved %d x %d vectors to %s", len(model.vocab), model.dim, args.out)
    return 0


def cmd_w2v_query(args) -> int:
    model = embedding.load(args.model)
    word = normalize(args.word) or args.word
    for rank, hit in enumerate(model.most_similar(word, args.topn), start=1):
        print(f"{rank}\t{hit.word}\t{hit.score:.6f}")
    return 0


def cmd_lex_expand(args) -> int:
    model = embedding.load(args.model)
    seeds = lexicon.SeedSet(args.pos_seed, args.neg_seed, args.fanout1, args.fanout2)
    lex = lexicon.expand_auto_lexicon(model, seeds)
    lexicon.save_lexicon(lex, args.out)
    log.info("wrote %d entries (%d positive, %d negative)", len(lex), len(lex.positive()), len(lex.negative()))
    return 0


def cmd_audit(args) -> int:
    model = embedding.load(args.model)
    seeds = lexicon.load_seeds(args.seeds)
    report = lexicon.audit_model(model, seeds, lexicon.load_annotations(args.annotations))
    Path(args.out).write_text(report.as_tsv(), encoding="utf-8")
    print(report.verdict)
    return 0


def cmd_classify_cv(args) -> int:
    names = _choices(args.clf, classifiers.CLASSIFIERS, "classifier")
    modes = _choices(args.features, FEATURE_MODES, "feature mode")
    dataset = pipeline.load_dataset(args.dataset, args.expected)
    lexicons = {}
    if args.lexicon:
        lexicons["lex"] = lexicon.load_lexicon(args.lexicon, normalize_words=normalize)
    if args.auto_lexicon:
        lexicons["autolex"] = lexicon.load_lexicon(args.auto_lexicon, normalize_words=normalize)
    tagged = read_tagged(args.tagged, normalizer=normalize) if args.tagged else None
    folds = pipeline.stratified_kfold(dataset.labels, args.folds, args.seed)
    report = pipeline.run_grid(dataset, names, modes, folds, lexicons, tagged)
    Path(args.out).write_text(pipeline.emit_report(report, "tsv"), encoding="utf-8")
    sys.stdout.write(pipeline.emit_report(report, "markdown"))
    return 0


def cmd_report(args) -> int:
    report = pipeline.parse_report(Path(args.input).read_text(encoding="utf-8"))
    sys.stdout.write(pipeline.emit_report(report, args.format))
    return 0


def cmd_cnn_train(args) -> int:
    dataset = pipeline.load_dataset(args.dataset, args.expected)
    emb = embedding.load(args.model) if args.model else None
    lexicons = [lexicon.load_lexicon(p, normalize_words=normalize)
                for p in (args.lexicons.split(",") if args.lexicons else [])]
    dim = emb.dim if emb is not None else args.dim
    cfg = cnn.CnnConfig(embed_dim=dim, epochs=args.epochs, train_fraction=args.split, seed=args.seed)
    train_set, test_set = pipeline.train_test_split(dataset, args.split, args.seed)
    encoder = cnn.Encoder(emb, lexicons, dim=None if emb is not None else dim, seed=args.seed)
    docs = train_set.tokens + test_set.tokens
    max_len = max(max((len(d) for d in docs), default=1), max(cfg.filter_widths))
    data = encoder.index(docs, max_len)
    n_train = len(train_set)
    model = cnn.init_model(cfg, encoder.n_lexicons, dim, np.random.default_rng(args.seed))
    result = cnn.train(model, data.subset(np.arange(n_train)), train_set.labels,
                       data.subset(np.arange(n_train, len(docs))), test_set.labels, cfg)
    if args.metrics:
        cnn.write_metrics(result.metrics, args.metrics)
    last = result.metrics[-1]
    print(f"epoch {last.epoch}\ttrain_acc {last.train_acc:.4f}\ttest_acc {last.test_acc:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="arsent", description="Arabic tweet sentiment pipeline")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("normalize", help="strip markup and normalize a corpus")
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--format", choices=("plain", "xml", "abu-el-khair-xml"), default="plain")
    s.add_argument("--stats")
    s.set_defaults(func=cmd_normalize)

    s = sub.add_parser("w2v-train", help="train word embeddings")
    s.add_argument("--corpus", required=True)
    s.add_argument("--arch", choices=("cbow", "sg"), default="cbow")
    s.add_argument("--dim", type=int, default=100)
    s.add_argument("--window", type=int, default=5)
    s.add_argument("--negative", type=int, default=5)
    s.add_argument("--min-count", type=int, default=5)
    s.add_argument("--epochs", type=int, default=5)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_w2v_train)

    s = sub.add_parser("w2v-query", help="nearest neighbours of a word")
    s.add_argument("--model", required=True)
    s.add_argument("--word", required=True)
    s.add_argument("--topn", type=int, default=10)
    s.set_defaults(func=cmd_w2v_query)

    s = sub.add_parser("lex-expand", help="grow a lexicon from two seed words")
    s.add_argument("--model", required=True)
    s.add_argument("--pos-seed", default="جيد")
    s.add_argument("--neg-seed", default="سيئ")
    s.add_argument("--fanout1", type=int, default=10)
    s.add_argument("--fanout2", type=int, default=5)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_lex_expand)

    s = sub.add_parser("audit", help="screen an embedding model against annotations")
    s.add_argument("--model", required=True)
    s.add_argument("--seeds", required=True)
    s.add_argument("--annotations", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("classify-cv", help="cross-validate classifiers over feature modes")
    s.add_argument("--dataset", required=True)
    s.add_argument("--expected", choices=("main", "sub"))
    s.add_argument("--features", default="all")
    s.add_argument("--clf", default="all")
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--lexicon", help="manual lexicon for the lex mode")
    s.add_argument("--auto-lexicon", help="expanded lexicon for the autolex mode")
    s.add_argument("--tagged", help="token/TAG file aligned with the dataset")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_classify_cv)

    s = sub.add_parser("report", help="render a report TSV")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--format", choices=("tsv", "markdown"), default="markdown")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("cnn-train", help="train the lexicon-channel CNN on a split")
    s.add_argument("--dataset", required=True)
    s.add_argument("--expected", choices=("main", "sub"))
    s.add_argument("--model", help="embedding file; random vectors when omitted")
    s.add_argument("--dim", type=int, default=200, help="vector size without --model")
    s.add_argument("--lexicons", help="comma-separated lexicon files")
    s.add_argument("--epochs", type=int, default=100)
    s.add_argument("--split", type=float, default=0.8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--metrics")
    s.set_defaults(func=cmd_cnn_train)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ArsentError, OSError) as exc:
        print(f"arsent {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
