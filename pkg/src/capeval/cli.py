"""Command-line front end: eval, correlate, train-projector, report."""

from __future__ import annotations

import argparse
import logging
import sys

from .core import MetricKind, TokenizerPolicy
from .errors import CapevalError
from .io import read_score_table, write_report
from .pipeline import (
    RunConfig,
    correlate_scores,
    evaluate,
    load_stopwords,
    train_projector_files,
)
from .visual import save_projector

logger = logging.getLogger(__name__)


def _add_tokenizer_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--tokenizer",
        choices=("auto", "whitespace", "cjk-char"),
        default="auto",
        help="token splitting mode (default: auto)",
    )
    parser.add_argument(
        "--no-lowercase",
        action="store_true",
        help="keep the case of non-CJK tokens",
    )
    parser.add_argument(
        "--keep-punctuation",
        action="store_true",
        help="keep punctuation characters inside tokens",
    )


def _policy(args: argparse.Namespace) -> TokenizerPolicy:
    return TokenizerPolicy(
        mode=args.tokenizer,
        lowercase=not args.no_lowercase,
        strip_punctuation=not args.keep_punctuation,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capeval",
        description="Score cross-lingual image-captioning models without target-language references.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="score caption files and write a score table")
    p_eval.add_argument("--captions", required=True, help="JSON-lines candidate captions")
    p_eval.add_argument("--references", help="JSON-lines reference sets")
    p_eval.add_argument("--embeddings-source", help="source-language word vectors")
    p_eval.add_argument("--embeddings-target", help="target-language word vectors")
    p_eval.add_argument("--features", help="visual feature vectors by image id")
    p_eval.add_argument("--projector-source", help="persisted source-language projector")
    p_eval.add_argument("--projector-target", help="persisted target-language projector")
    p_eval.add_argument("--scenario", choices=("I", "II"), default="I")
    p_eval.add_argument("--z-mode", choices=("fixed", "batch-max"), default="batch-max")
    p_eval.add_argument("--z", type=float, default=None, help="fixed transport normalizer")
    p_eval.add_argument(
        "--metrics",
        help="comma-separated metric names (default: everything the inputs allow)",
    )
    p_eval.add_argument("--ref-mode", choices=("first", "average"), default="first")
    p_eval.add_argument("--stopwords", help="file with one stopword per line, dropped before transport")
    p_eval.add_argument("--format", choices=("csv", "json"), default="csv")
    p_eval.add_argument("--out", required=True, help="report path")
    p_eval.add_argument("--jobs", type=int, default=1, help="worker threads for per-pair scoring")
    p_eval.add_argument("--seed", type=int, default=0)
    _add_tokenizer_flags(p_eval)

    p_corr = sub.add_parser("correlate", help="rank-consistency matrix from a score table")
    p_corr.add_argument("--scores", required=True, help="score table (csv or json)")
    p_corr.add_argument("--format", choices=("csv", "json"), default="csv")
    p_corr.add_argument("--out", required=True, help="report path")

    p_train = sub.add_parser("train-projector", help="fit and persist a visual-space projector")
    p_train.add_argument("--pairs", required=True, help="JSON-lines {image_id, caption, weight?, origin?}")
    p_train.add_argument("--embeddings", required=True, help="word vectors for the pair language")
    p_train.add_argument("--features", required=True, help="visual feature vectors by image id")
    p_train.add_argument("--language", choices=("source", "target"), required=True)
    p_train.add_argument("--lambda", dest="ridge_lambda", type=float, default=1.0)
    p_train.add_argument("--cv", action="store_true", help="pick lambda by 5-fold cross-validation")
    p_train.add_argument("--human-weight", type=float, default=5.0)
    p_train.add_argument("--out", required=True, help="projector path")
    p_train.add_argument("--seed", type=int, default=0)
    _add_tokenizer_flags(p_train)

    p_report = sub.add_parser("report", help="re-write a score table rounded for reading")
    p_report.add_argument("--scores", required=True, help="score table (csv or json)")
    p_report.add_argument("--format", choices=("csv", "json"), default="csv")
    p_report.add_argument("--decimals", type=int, default=1)
    p_report.add_argument("--out", required=True, help="report path")

    return parser


def _cmd_eval(args: argparse.Namespace) -> int:
    metrics = None
    if args.metrics:
        metrics = tuple(MetricKind.parse(name) for name in args.metrics.split(","))
    cfg = RunConfig(
        captions=args.captions,
        references=args.references,
        embeddings_source=args.embeddings_source,
        embeddings_target=args.embeddings_target,
        features=args.features,
        projector_source=args.projector_source,
        projector_target=args.projector_target,
        tokenizer=_policy(args),
        scenario=args.scenario,
        z_mode=args.z_mode,
        z_value=args.z,
        metrics=metrics,
        ref_mode=args.ref_mode,
        stopwords=load_stopwords(args.stopwords) if args.stopwords else frozenset(),
        jobs=args.jobs,
        seed=args.seed,
    )
    table = evaluate(cfg)
    write_report(table, args.out, args.format)
    logger.info("wrote %s scores for %d models to %s", args.format, len(table.rows), args.out)
    return 0


def _cmd_correlate(args: argparse.Namespace) -> int:
    matrix = correlate_scores(args.scores)
    write_report(matrix, args.out, args.format)
    logger.info("wrote correlation matrix to %s", args.out)
    return 0


def _cmd_train_projector(args: argparse.Namespace) -> int:
    projector = train_projector_files(
        pairs_path=args.pairs,
        embeddings_path=args.embeddings,
        features_path=args.features,
        language=args.language,
        ridge_lambda=args.ridge_lambda,
        cv=args.cv,
        human_weight=args.human_weight,
        policy=_policy(args),
        seed=args.seed,
    )
    save_projector(projector, args.out)
    logger.info(
        "trained %s projector (%d -> %d) with lambda=%g, saved to %s",
        projector.language,
        projector.n_features_in_,
        projector.visual_dim,
        projector.ridge_lambda,
        args.out,
    )
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    table = read_score_table(args.scores)
    write_report(table, args.out, args.format, decimals=args.decimals)
    logger.info("wrote rounded report to %s", args.out)
    return 0


_COMMANDS = {
    "eval": _cmd_eval,
    "correlate": _cmd_correlate,
    "train-projector": _cmd_train_projector,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CapevalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
