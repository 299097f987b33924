"""End-to-end run: statistics, filtering, split, annotation and segmentation."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .annotator import AnnotationConfig, annotate_split, build_extra_annotations
from .corpus import LemmaTable, load_lemmas, load_parallel, word_frequencies, write_tokenized
from .dictionary import FilterThresholds, filter_entries, load_dictionary, stats_from_matches, write_dictionary, write_stats
from .errors import PipelineError
from .evaluator import build_eval_items, write_items
from .matcher import find_matches
from .segmenter import SCHEMES, MixConfig, Segmenter, learn_bpe
from .splitter import Fate, assign_sentences, export_split, partition_entries

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    src: str = ""
    tgt: str = ""
    dictionary: str = ""
    out_dir: str = "run"
    src_lemmas: str | None = None
    tgt_lemmas: str | None = None
    min_occ: int = 3
    max_occ: int = 80
    min_variants: int = 2
    max_conflicts: int = 10
    seed: int = 1
    schemes: list[str] = field(default_factory=lambda: list(SCHEMES))
    bpe_merges: int = 20000
    joint_bpe: bool = False
    mix_k: int = 50
    delimiter: str = "#"
    escape: bool = False
    add_annot: bool = False
    drop_valid: bool = True

    def __post_init__(self):
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}")

    @property
    def thresholds(self) -> FilterThresholds:
        return FilterThresholds(self.min_occ, self.max_occ, self.min_variants, self.max_conflicts)

    @property
    def annotation(self) -> AnnotationConfig:
        return AnnotationConfig(self.delimiter, self.add_annot, self.escape)

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ValueError(f"unknown config fields {sorted(unknown)}")
        return cls(**obj)

    def write(self, path):
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path) -> "PipelineConfig":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class _Run:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = Path(config.out_dir)
        self.counts: dict = {}
        self.stages: list[str] = []

    def stage(self, name, fn):
        log.info("stage %s", name)
        try:
            result = fn()
        except Exception as exc:
            self.write_run_json(status="incomplete", failed_stage=name)
            raise PipelineError(name, exc) from exc
        self.stages.append(name)
        return result

    def write_run_json(self, status, failed_stage=None):
        self.out.mkdir(parents=True, exist_ok=True)
        digests = {}
        for path in sorted(self.out.rglob("*")):
            if path.is_file() and path.name != "run.json":
                digests[path.relative_to(self.out).as_posix()] = file_digest(path)
        info = {
            "status": status,
            "config": self.config.to_json(),
            "seed": self.config.seed,
            "stages": self.stages,
            "counts": self.counts,
            "digests": digests,
        }
        if failed_stage:
            info["failed_stage"] = failed_stage
        (self.out / "run.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_pipeline(config: PipelineConfig) -> dict:
    """Run every stage in order and return the ``run.json`` contents."""
    run = _Run(config)
    out = run.out
    out.mkdir(parents=True, exist_ok=True)
    cfg = config

    def load():
        corpus = load_parallel(cfg.src, cfg.tgt)
        if cfg.src_lemmas:
            corpus = load_lemmas(corpus, "source", cfg.src_lemmas)
        if cfg.tgt_lemmas:
            corpus = load_lemmas(corpus, "target", cfg.tgt_lemmas)
        return corpus, load_dictionary(cfg.dictionary)

    corpus, entries = run.stage("load", load)
    run.counts["sentences"] = len(corpus)
    run.counts["dictionary_entries"] = len(entries)
    by_id = {e.id: e for e in entries}

    def stats():
        all_matches = find_matches(corpus, entries)
        st = stats_from_matches(entries, all_matches)
        write_stats(out / "entry_stats.jsonl", entries, st)
        return all_matches, st

    all_matches, st = run.stage("stats", stats)

    def filt():
        accepted = filter_entries(entries, st, cfg.thresholds)
        write_dictionary(out / "filtered_dictionary.jsonl", accepted)
        return accepted

    accepted = run.stage("filter", filt)
    run.counts["filtered_entries"] = len(accepted)
    accepted_ids = {e.id for e in accepted}

    def match():
        recs = [r for r in all_matches if r.entry_id in accepted_ids]
        with open(out / "matches.jsonl", "w", encoding="utf-8", newline="\n") as f:
            for r in recs:
                f.write(json.dumps(r.to_json(), ensure_ascii=False))
                f.write("\n")
        return recs

    matches = run.stage("match", match)
    run.counts["matches"] = len(matches)

    partition = run.stage("partition", lambda: partition_entries(accepted, cfg.seed))
    run.counts["partition"] = {k.value: v for k, v in partition.sizes().items()}

    manifest = run.stage("assign", lambda: assign_sentences(corpus, matches, partition, cfg.seed, cfg.drop_valid))
    run.counts["split"] = manifest.counts()

    def export():
        export_split(corpus, manifest, out)
        LemmaTable.from_corpus(corpus, "target").write(out / "tgt_lemma_table.tsv")
        write_items(out / "eval_items.jsonl", build_eval_items(manifest, matches, by_id))

    run.stage("export", export)

    def annotate():
        extra = []
        if cfg.add_annot:
            extra = build_extra_annotations(corpus, entries, cfg.thresholds, manifest, st, exclude=accepted_ids)
        annotated, n_annot = annotate_split(corpus, manifest, matches, by_id, cfg.annotation, extra)
        for name, sents in annotated.items():
            write_tokenized(out / f"{name}.annot.src", sents)
        return annotated, n_annot

    annotated, n_annot = run.stage("annotate", annotate)
    run.counts["annotated_sentences"] = n_annot

    def segment():
        train_ids = manifest.ids_with(Fate.TRAIN)
        train_src = [corpus[i].src_tokens for i in train_ids]
        train_tgt = [corpus[i].tgt_tokens for i in train_ids]
        train = corpus.subset(train_ids)
        freq = {"src": word_frequencies(train, "source"), "tgt": word_frequencies(train, "target")}
        targets = {name: [corpus[i].tgt_tokens for i in manifest.ids_with(f)]
                   for f, name in ((Fate.TRAIN, "train"), (Fate.VALID, "valid"), (Fate.TEST, "test"))}
        models = {}
        if "bpe" in cfg.schemes:
            bpe_dir = out / "seg" / "bpe"
            bpe_dir.mkdir(parents=True, exist_ok=True)
            if cfg.joint_bpe:
                joint = learn_bpe(train_src + train_tgt, cfg.bpe_merges)
                models = {"src": joint, "tgt": joint}
                joint.write(bpe_dir / "codes.joint")
            else:
                models = {"src": learn_bpe(train_src, cfg.bpe_merges), "tgt": learn_bpe(train_tgt, cfg.bpe_merges)}
                models["src"].write(bpe_dir / "codes.src")
                models["tgt"].write(bpe_dir / "codes.tgt")
        lengths = {}
        for scheme in cfg.schemes:
            seg_dir = out / "seg" / scheme
            seg_dir.mkdir(parents=True, exist_ok=True)
            for side, data in (("src", annotated), ("tgt", targets)):
                seg = Segmenter(
                    scheme,
                    bpe=models.get(side),
                    mix=MixConfig(cfg.mix_k, freq[side], delimiter=cfg.delimiter),
                )
                total = 0
                for name, sents in data.items():
                    lines = [seg(s) for s in sents]
                    total += sum(map(len, lines))
                    write_tokenized(seg_dir / f"{name}.{side}", lines)
                lengths[f"{scheme}.{side}"] = total
        return lengths

    run.counts["segmented_symbols"] = run.stage("segment", segment)
    run.write_run_json(status="complete")
    return json.loads((out / "run.json").read_text(encoding="utf-8"))
