"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .annotator import AnnotationConfig, annotate_split
from .corpus import LemmaTable, load_lemmas, load_parallel, read_lemma_file, read_tokenized, write_tokenized
from .dictionary import (
    FilterThresholds,
    compute_all_stats,
    filter_entries,
    load_dictionary,
    read_stats,
    write_dictionary,
    write_stats,
)
from .errors import DataError, PipelineError
from .evaluator import aggregate, read_items
from .matcher import find_matches
from .oracles import OracleKind, oracle_translate
from .pipeline import PipelineConfig, run_pipeline
from .segmenter import SCHEMES, BpeModel, MixConfig, Segmenter, learn_bpe
from .splitter import SplitManifest, assign_sentences, export_split, partition_entries

log = logging.getLogger("dictmt")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _corpus_args(p, lemmas=True):
    p.add_argument("--src", required=True, help="source text, one tokenized sentence per line")
    p.add_argument("--tgt", required=True, help="target text, aligned with --src")
    if lemmas:
        p.add_argument("--src-lemmas", help="source lemma file")
        p.add_argument("--tgt-lemmas", help="target lemma file")


def _threshold_args(p):
    d = FilterThresholds()
    p.add_argument("--min-occ", type=int, default=d.min_occ)
    p.add_argument("--max-occ", type=int, default=d.max_occ)
    p.add_argument("--min-variants", type=int, default=d.min_tgt_variants)
    p.add_argument("--max-conflicts", type=int, default=d.max_conflicts)


def _thresholds(args) -> FilterThresholds:
    return FilterThresholds(args.min_occ, args.max_occ, args.min_variants, args.max_conflicts)


def _check_files(*paths):
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise UsageError(f"no such file: {p}")


def _load_corpus(args):
    _check_files(args.src, args.tgt, args.src_lemmas, args.tgt_lemmas)
    corpus = load_parallel(args.src, args.tgt)
    if args.src_lemmas:
        corpus = load_lemmas(corpus, "source", args.src_lemmas)
    if args.tgt_lemmas:
        corpus = load_lemmas(corpus, "target", args.tgt_lemmas)
    return corpus


def _load_dictionary(path):
    _check_files(path)
    return load_dictionary(path)


def _write_jsonl(path, rows):
    out = open(path, "w", encoding="utf-8", newline="\n") if path else sys.stdout
    try:
        for row in rows:
            out.write(json.dumps(row, ensure_ascii=False))
            out.write("\n")
    finally:
        if path:
            out.close()


def cmd_stats(args):
    corpus = _load_corpus(args)
    entries = _load_dictionary(args.dictionary)
    write_stats(args.out, entries, compute_all_stats(entries, corpus))


def cmd_filter(args):
    if args.stats:
        _check_files(args.stats)
        entries, stats = read_stats(args.stats)
    else:
        if not (args.src and args.tgt and args.dictionary):
            raise UsageError("filter needs --stats or --src/--tgt/--dictionary")
        corpus = _load_corpus(args)
        entries = _load_dictionary(args.dictionary)
        stats = compute_all_stats(entries, corpus)
    write_dictionary(args.out, filter_entries(entries, stats, _thresholds(args)))


def cmd_match(args):
    corpus = _load_corpus(args)
    entries = _load_dictionary(args.dictionary)
    _write_jsonl(args.out, (r.to_json() for r in find_matches(corpus, entries)))


def cmd_split(args):
    corpus = _load_corpus(args)
    entries = _load_dictionary(args.dictionary)
    matches = find_matches(corpus, entries)
    partition = partition_entries(entries, args.seed)
    manifest = assign_sentences(corpus, matches, partition, args.seed, not args.no_drop_valid)
    export_split(corpus, manifest, args.out_dir)
    print(json.dumps(manifest.counts()))


def cmd_annotate(args):
    corpus = _load_corpus(args)
    entries = _load_dictionary(args.dictionary)
    split_dir = Path(args.split_dir)
    _check_files(split_dir / "manifest.json")
    manifest = SplitManifest.read(split_dir / "manifest.json")
    partitioned = [e for e in entries if e.id in manifest.partition.assignment]
    if len(partitioned) != len(manifest.partition.assignment):
        raise DataError("dictionary does not contain every partitioned entry")
    matches = find_matches(corpus, partitioned)
    cfg = AnnotationConfig(args.delimiter, False, args.escape)
    annotated, counts = annotate_split(corpus, manifest, matches, {e.id: e for e in entries}, cfg)
    out_dir = Path(args.out_dir or split_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, sents in annotated.items():
        write_tokenized(out_dir / f"{name}.annot.src", sents)
    print(json.dumps(counts))


def cmd_segment(args):
    _check_files(args.input, args.train, args.codes)
    if args.scheme == "bpe":
        if args.codes:
            model = BpeModel.read(args.codes)
        elif args.train:
            model = learn_bpe(read_tokenized(args.train), args.merges)
            if args.save_codes:
                model.write(args.save_codes)
        else:
            raise UsageError("bpe needs --codes or --train")
    else:
        model = None
    freq = {}
    if args.scheme in ("mix", "mix_annot"):
        if not args.train:
            raise UsageError("mixed schemes need --train for word frequencies")
        train = read_tokenized(args.train)
        for toks in train:
            for t in toks:
                freq[t] = freq.get(t, 0) + 1
    seg = Segmenter(args.scheme, bpe=model, mix=MixConfig(args.k, freq, delimiter=args.delimiter))
    with open(args.input, encoding="utf-8") as f:
        lines = [line.split() for line in f]
    if args.desegment:
        result = [seg.invert(l, strict=not args.tolerant) for l in lines]
    else:
        result = [seg(l) for l in lines]
    write_tokenized(args.output, result)


def _read_lines(path):
    with open(path, encoding="utf-8") as f:
        return [line.split() for line in f]


def cmd_oracle(args):
    _check_files(args.src, args.ref)
    src = _read_lines(args.src)
    if args.kind == OracleKind.REFERENCE_LEAK.value:
        if not args.ref:
            raise UsageError("--kind refleak needs --ref")
        refs = _read_lines(args.ref)
        if len(refs) != len(src):
            raise DataError(f"{len(src)} source lines but {len(refs)} references")
    else:
        refs = [None] * len(src)
    cfg = AnnotationConfig(args.delimiter, False, args.escape)
    write_tokenized(args.out, (oracle_translate(s, r, args.kind, cfg) for s, r in zip(src, refs)))


def cmd_evaluate(args):
    run_dir = Path(args.run_dir) if args.run_dir else Path(args.manifest).parent
    manifest_path = Path(args.manifest) if args.manifest else run_dir / "manifest.json"
    _check_files(args.hyp, manifest_path, run_dir / "eval_items.jsonl", run_dir / "test.tgt", args.hyp_lemmas)
    SplitManifest.read(manifest_path)  # validates the manifest
    items = read_items(run_dir / "eval_items.jsonl")
    hyps = _read_lines(args.hyp)
    refs = _read_lines(run_dir / "test.tgt")
    hyp_lemmas = read_lemma_file(args.hyp_lemmas) if args.hyp_lemmas else None
    table_path = Path(args.lemma_table) if args.lemma_table else run_dir / "tgt_lemma_table.tsv"
    table = LemmaTable.from_file(table_path) if table_path.is_file() else LemmaTable()
    report = aggregate(items, hyps, refs, lemma_table=table, hyp_lemmas=hyp_lemmas)
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    sys.stdout.write(report.table())


_CONFIG_FIELDS = list(dataclasses.fields(PipelineConfig))


def _add_config_flags(p):
    p.add_argument("--config", help="JSON config; flags override its fields")
    for f in _CONFIG_FIELDS:
        flag = "--" + f.name.replace("_", "-")
        if f.type in ("bool", bool):
            p.add_argument(flag, dest=f.name, default=None, action=argparse.BooleanOptionalAction)
        elif f.name == "schemes":
            p.add_argument(flag, dest=f.name, default=None, nargs="+", choices=SCHEMES)
        elif f.type in ("int", int):
            p.add_argument(flag, dest=f.name, default=None, type=int)
        else:
            p.add_argument(flag, dest=f.name, default=None)


def config_from_args(args) -> PipelineConfig:
    obj = {}
    if args.config:
        _check_files(args.config)
        obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
    for f in _CONFIG_FIELDS:
        v = getattr(args, f.name, None)
        if v is not None:
            obj[f.name] = v
    try:
        return PipelineConfig.from_json(obj)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def cmd_pipeline(args):
    cfg = config_from_args(args)
    for name in ("src", "tgt", "dictionary"):
        if not getattr(cfg, name):
            raise UsageError(f"pipeline needs --{name}")
    _check_files(cfg.src, cfg.tgt, cfg.dictionary, cfg.src_lemmas, cfg.tgt_lemmas)
    info = run_pipeline(cfg)
    print(json.dumps(info["counts"], sort_keys=True))


def cmd_synth(args):
    from .synthetic import generate_corpus

    syn = generate_corpus(args.sentences, args.seed, n_good=args.good, n_frequent=args.frequent)
    paths = syn.write(args.out_dir)
    print(json.dumps({k: str(v) for k, v in paths.items()}))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dictmt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("stats", help="per-entry corpus match statistics")
    _corpus_args(p)
    p.add_argument("--dictionary", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("filter", help="select rare, unambiguous entries")
    p.add_argument("--stats", help="statistics from the stats command")
    p.add_argument("--src")
    p.add_argument("--tgt")
    p.add_argument("--src-lemmas")
    p.add_argument("--tgt-lemmas")
    p.add_argument("--dictionary")
    p.add_argument("--out", required=True)
    _threshold_args(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("match", help="find dictionary matches as JSONL")
    _corpus_args(p)
    p.add_argument("--dictionary", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("split", help="dictionary-driven train/valid/test split")
    _corpus_args(p)
    p.add_argument("--dictionary", required=True, help="filtered dictionary")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-drop-valid", action="store_true", help="apply the drop rule to train only")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("annotate", help="annotate split sources with dictionary suggestions")
    _corpus_args(p)
    p.add_argument("--dictionary", required=True)
    p.add_argument("--split-dir", required=True)
    p.add_argument("--out-dir")
    p.add_argument("--delimiter", default="#")
    p.add_argument("--escape", action="store_true")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("segment", help="apply or invert a word representation")
    p.add_argument("--scheme", required=True, choices=SCHEMES)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--train", help="training text (BPE learning, mixed frequencies)")
    p.add_argument("--codes", help="BPE merges file")
    p.add_argument("--save-codes")
    p.add_argument("--merges", type=int, default=20000)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--delimiter", default="#")
    p.add_argument("--desegment", action="store_true")
    p.add_argument("--tolerant", action="store_true")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("oracle", help="rule-based pseudo translations")
    p.add_argument("--kind", required=True, choices=[k.value for k in OracleKind])
    p.add_argument("--src", required=True, help="annotated test source")
    p.add_argument("--ref", help="reference (refleak only)")
    p.add_argument("--out", required=True)
    p.add_argument("--delimiter", default="#")
    p.add_argument("--escape", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("evaluate", help="rare-word accuracy and BLEU of a hypothesis")
    p.add_argument("--hyp", required=True)
    p.add_argument("--run-dir")
    p.add_argument("--manifest")
    p.add_argument("--hyp-lemmas")
    p.add_argument("--lemma-table")
    p.add_argument("--json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="run all stages from one config")
    _add_config_flags(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("synth", help="write a synthetic corpus and dictionary")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--sentences", type=int, default=198_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--good", type=int, default=636)
    p.add_argument("--frequent", type=int, default=10)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "evaluate" and not (args.run_dir or args.manifest):
        parser.error("evaluate needs --run-dir or --manifest")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"dictmt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineError as exc:
        print(f"dictmt: {exc}", file=sys.stderr)
        if isinstance(exc.cause, (FileNotFoundError, UsageError)):
            return EXIT_USAGE
        return EXIT_DATA if isinstance(exc.cause, DataError) else EXIT_INTERNAL
    except DataError as exc:
        print(f"dictmt: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"dictmt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"dictmt: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
