"""``chunkorder`` command line.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 service error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__, tables
from .annotate import agreement, annotate_corpus, load_few_shot, write_tagged
from .corpus import Corpus, fc_distribution, load_corpus, normalize_language
from .errors import ChunkorderError, ConfigError, CorpusLoadError, DataError, IoFailure, ServiceError
from .report import load_config, run_report
from .semantics import load_embeddings, pca_project, similarity_table
from .sequences import transition_matrix
from .svg import heatmap_svg

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SERVICE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _language(value: str) -> str:
    try:
        return normalize_language(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _load(args, mode="strict"):
    corpus, diags = load_corpus(args.infile, args.language, mode, args.name)
    for d in diags:
        print(d, file=sys.stderr)
    return corpus, diags


def _print_diagnostics(exc: CorpusLoadError):
    for d in exc.diagnostics:
        print(d, file=sys.stderr)


# -- subcommands ---------------------------------------------------------------


def cmd_parse(args):
    corpus, _ = _load(args, "lenient" if args.lenient else "strict")
    lines = []
    for s in corpus.sentences:
        rec = {
            "id": s.id,
            "chunks": [{"label": c.label.value, "text": c.text, "start": c.char_start, "end": c.char_end} for c in s.chunks],
            "gaps": [g.text for g in s.gaps],
        }
        lines.append(json.dumps(rec, ensure_ascii=False, sort_keys=True))
    _emit("".join(line + "\n" for line in lines), args.out)
    return EXIT_OK


def cmd_validate(args):
    mode = "lenient" if args.lenient else "strict"
    try:
        corpus, diags = _load(args, mode)
    except CorpusLoadError as exc:
        _print_diagnostics(exc)
        print(f"{args.infile}: {len(exc.diagnostics)} line(s) rejected", file=sys.stderr)
        return EXIT_DATA
    rejected = [d for d in diags if d.rejected]
    chunks = sum(len(s.chunks) for s in corpus.sentences)
    print(f"{args.infile}: {len(corpus)} sentences, {chunks} chunks, {len(rejected)} rejected, {len(diags) - len(rejected)} warnings")
    return EXIT_DATA if rejected else EXIT_OK


def cmd_stats(args):
    corpus, _ = _load(args)
    r = tables.DEFAULT_ROUNDING
    data = json.loads(tables.stats_json(corpus, tokenizer=args.tokenizer))
    data["fc_distribution"] = [
        {"label": row.label.value, "frequency": row.frequency, "proportion": float(tables.round_half_up(row.proportion, r["proportion"]))}
        for row in fc_distribution(corpus)
    ]
    _emit(tables.dump_json(data), args.out)
    return EXIT_OK


def cmd_positions(args):
    corpus, _ = _load(args)
    _emit(tables.positions_csv(corpus), args.out)
    return EXIT_OK


def cmd_tests(args):
    corpus, _ = _load(args)
    if args.against:
        other, _ = load_corpus(args.against, args.against_language or args.language, "strict")
        _emit(tables.cross_tests_csv(corpus, other), args.out)
    else:
        _emit(tables.tests_csv(corpus), args.out)
    return EXIT_OK


def cmd_condprob(args):
    corpus, _ = _load(args)
    _emit(tables.condprob_csv(corpus), args.out)
    return EXIT_OK


def cmd_patterns(args):
    corpus, _ = _load(args)
    _emit(tables.patterns_csv(corpus, args.top_k), args.out)
    return EXIT_OK


def cmd_combos(args):
    corpus, _ = _load(args)
    _emit(tables.combos_csv(corpus, args.top_k, args.min_len), args.out)
    return EXIT_OK


def cmd_transitions(args):
    corpus, _ = _load(args)
    text = tables.transitions_matrix_csv(corpus) if args.matrix else tables.transitions_csv(corpus)
    _emit(text, args.out)
    if args.svg:
        Path(args.svg).write_text(heatmap_svg(transition_matrix(corpus), f"FC transition probabilities: {corpus.name}"), encoding="utf-8")
    return EXIT_OK


def cmd_semantics(args):
    es = load_embeddings(args.embeddings)
    subsets = args.subset or es.tags()
    _emit(tables.similarity_csv(similarity_table(es, subsets)), args.out)
    if args.projection_out:
        proj = pca_project(es, 2)
        Path(args.projection_out).write_text(tables.projection_csv(es, proj), encoding="utf-8")
        if proj.rank_deficient:
            print("warning: embeddings span fewer than 2 dimensions; missing axes are zero", file=sys.stderr)
    return EXIT_OK


def cmd_annotate(args):
    cfg = load_config(args.config)
    if cfg.annotation is None:
        raise ConfigError(f"{args.config} has no [annotation] section")
    if not cfg.annotation.few_shot_path:
        raise ConfigError("[annotation] needs few_shot_path")
    fs = load_few_shot(cfg.annotation.few_shot_path)
    try:
        raw_lines = Path(args.infile).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {args.infile}: {exc.strerror or exc}") from exc
    name = args.name or Path(args.infile).stem
    run_a, failures = annotate_corpus(raw_lines, cfg.annotation, fs, name, args.language)
    for f in failures:
        print(f"line {f.line}: {f.kind}: {f.message}", file=sys.stderr)
    write_tagged(run_a, args.out)
    if args.dual:
        run_b, failures_b = annotate_corpus(raw_lines, cfg.annotation, fs, name, args.language)
        common = {s.id for s in run_a.sentences} & {s.id for s in run_b.sentences}
        a = Corpus(run_a.language, "run_a", tuple(s for s in run_a.sentences if s.id in common))
        b = Corpus(run_b.language, "run_b", tuple(s for s in run_b.sentences if s.id in common))
        report = agreement(a, b).as_dict()
        report["excluded_lines"] = sorted({f.line for f in failures} | {f.line for f in failures_b})
        text = tables.dump_json(report)
        if args.agreement_out:
            Path(args.agreement_out).write_text(text, encoding="utf-8")
        else:
            sys.stderr.write(text)
    return EXIT_SERVICE if failures else EXIT_OK


def cmd_report(args):
    cfg = load_config(args.config)
    if args.output_dir:
        cfg = dataclasses.replace(cfg, output_dir=Path(args.output_dir))
    out = run_report(cfg)
    print(f"report written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chunkorder", description="Constituent-order statistics for functional-chunk corpora.")
    p.add_argument("--version", action="version", version=f"chunkorder {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    def corpus_cmd(name, func, help_text, lenient=False):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--in", dest="infile", required=True, help="annotated corpus, one sentence per line")
        sp.add_argument("--language", type=_language, default="english", help="english or chinese (default: english)")
        sp.add_argument("--name", help="corpus name used in sentence ids (default: file stem)")
        sp.add_argument("--out", help="output file (default: stdout)")
        if lenient:
            sp.add_argument("--lenient", action="store_true", help="keep malformed tags as text instead of rejecting the line")
        sp.set_defaults(func=func)
        return sp

    corpus_cmd("parse", cmd_parse, "parse a corpus and print its chunks as JSON lines", lenient=True)
    corpus_cmd("validate", cmd_validate, "check a corpus against the tag grammar", lenient=True)
    sp = corpus_cmd("stats", cmd_stats, "corpus size, tag counts and FC distribution")
    sp.add_argument("--tokenizer", choices=("whitespace", "cjk_char"), help="override the per-language tokenizer")
    corpus_cmd("positions", cmd_positions, "relative position of every functional chunk")
    sp = corpus_cmd("tests", cmd_tests, "chi-square per label, or Welch t-tests against a second corpus")
    sp.add_argument("--against", help="second corpus for cross-corpus t-tests")
    sp.add_argument("--against-language", type=_language, help="language of the second corpus")
    corpus_cmd("condprob", cmd_condprob, "probability of each FC before/after S, V, O")
    sp = corpus_cmd("patterns", cmd_patterns, "most frequent full tag sequences")
    sp.add_argument("--top-k", type=int, default=20)
    sp = corpus_cmd("combos", cmd_combos, "most frequent multi-FC combinations")
    sp.add_argument("--top-k", type=int, default=50)
    sp.add_argument("--min-len", type=int, default=2)
    sp = corpus_cmd("transitions", cmd_transitions, "FC-to-FC transition counts and probabilities")
    sp.add_argument("--matrix", action="store_true", help="print the 8x8 probability grid instead of the long table")
    sp.add_argument("--svg", help="also write a heatmap to this path")

    sp = sub.add_parser("semantics", help="centroid cosine similarity between embedding subsets")
    sp.add_argument("--embeddings", required=True, help="JSON-lines file of {id, tags, vec}")
    sp.add_argument("--subset", action="append", help="tag (or tag+tag) selecting a subset; repeatable")
    sp.add_argument("--out", help="similarity CSV (default: stdout)")
    sp.add_argument("--projection-out", help="write a 2-D PCA projection CSV here")
    sp.set_defaults(func=cmd_semantics)

    sp = sub.add_parser("annotate", help="annotate raw sentences through a chat-completion endpoint")
    sp.add_argument("--in", dest="infile", required=True, help="raw sentences, one per line")
    sp.add_argument("--out", required=True, help="tagged output file")
    sp.add_argument("--config", required=True, help="chunkorder.toml with an [annotation] section")
    sp.add_argument("--language", type=_language, default="english")
    sp.add_argument("--name", help="corpus name used in sentence ids")
    sp.add_argument("--dual", action="store_true", help="annotate twice and score agreement")
    sp.add_argument("--agreement-out", help="where to write the agreement report (JSON)")
    sp.set_defaults(func=cmd_annotate)

    sp = sub.add_parser("report", help="write the full table/figure bundle for the configured corpora")
    sp.add_argument("--config", required=True, help="chunkorder.toml")
    sp.add_argument("--output-dir", help="override output_dir from the config")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CorpusLoadError as exc:
        _print_diagnostics(exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SERVICE
    except ChunkorderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
