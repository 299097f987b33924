"""Dictionary-driven train/valid/test split.

Filtered entries are shuffled and dealt round-robin into three sets. Every
sentence with a both-side match of a test-set entry becomes test data; the
sentences of each mix-set entry are split half/quarter/quarter over
test/valid/train; sentences of train-set entries alternate between train
and valid; everything else is training data. Train- or valid-bound sentences
in which an entry's source phrase occurs without its target phrase are
dropped.

All randomness comes from :func:`make_rng`, one named stream per operation.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .corpus import Corpus, load_lemmas, load_parallel, write_tokenized
from .errors import DataError


class EntrySet(str, Enum):
    TEST = "TestSet"
    MIX = "MixSet"
    TRAIN = "TrainSet"


class Fate(str, Enum):
    TRAIN = "Train"
    VALID = "Valid"
    TEST = "Test"
    DROPPED = "Dropped"


class ShotClass(str, Enum):
    ONE_SHOT = "OneShot"
    FEW_SHOT = "FewShot"
    TRAIN_ONLY = "TrainOnly"


_SET_ORDER = (EntrySet.TEST, EntrySet.MIX, EntrySet.TRAIN)
_SHOT = {EntrySet.TEST: ShotClass.ONE_SHOT, EntrySet.MIX: ShotClass.FEW_SHOT, EntrySet.TRAIN: ShotClass.TRAIN_ONLY}
SPLIT_FILES = {Fate.TRAIN: "train", Fate.VALID: "valid", Fate.TEST: "test", Fate.DROPPED: "dropped"}


def make_rng(seed: int, stream: str) -> random.Random:
    """Deterministic generator for a named stream derived from ``seed``."""
    digest = hashlib.sha256(f"{int(seed)}:{stream}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


@dataclass(frozen=True)
class EntryPartition:
    assignment: dict[int, EntrySet]
    seed: int

    def members(self, which: EntrySet) -> list[int]:
        return sorted(eid for eid, s in self.assignment.items() if s == which)

    def sizes(self) -> dict[EntrySet, int]:
        c = Counter(self.assignment.values())
        return {s: c.get(s, 0) for s in _SET_ORDER}


def partition_entries(entries, seed: int) -> EntryPartition:
    """Shuffle entries (by sorted id) and deal them into Test, Mix, Train."""
    ids = sorted(e if isinstance(e, int) else e.id for e in entries)
    if not ids:
        raise DataError("cannot partition an empty entry list")
    make_rng(seed, "partition").shuffle(ids)
    return EntryPartition({eid: _SET_ORDER[i % 3] for i, eid in enumerate(ids)}, seed)


def mix_split_sizes(n: int) -> tuple[int, int, int]:
    """(test, valid, train) counts for a mix-set entry with ``n`` sentences."""
    test = math.ceil(n / 2)
    valid = math.ceil((n - test) / 2)
    return test, valid, n - test - valid


@dataclass
class SplitManifest:
    sentence_fate: dict[int, Fate]
    shot_class: dict[int, ShotClass]
    seed: int
    partition: EntryPartition
    # partitioned entries with a both-side match in each sentence
    sentence_entries: dict[int, tuple[int, ...]] = field(default_factory=dict)
    # entry whose rule decided the sentence's fate (None for unmatched)
    assigned_by: dict[int, int | None] = field(default_factory=dict)

    def ids_with(self, fate: Fate) -> list[int]:
        return sorted(i for i, f in self.sentence_fate.items() if f == fate)

    def counts(self) -> dict[str, int]:
        c = Counter(self.sentence_fate.values())
        return {f.value: c.get(f, 0) for f in Fate}

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "entry_partition": [
                {"entry_id": eid, "set": self.partition.assignment[eid].value}
                for eid in sorted(self.partition.assignment)
            ],
            "sentence_fates": [
                {
                    "id": sid,
                    "fate": self.sentence_fate[sid].value,
                    "entry_ids": list(self.sentence_entries.get(sid, ())),
                    "assigned_by": self.assigned_by.get(sid),
                }
                for sid in sorted(self.sentence_fate)
            ],
            "counts": self.counts(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SplitManifest":
        try:
            seed = obj["seed"]
            assignment = {row["entry_id"]: EntrySet(row["set"]) for row in obj["entry_partition"]}
            fates, entries, by = {}, {}, {}
            for row in obj["sentence_fates"]:
                fates[row["id"]] = Fate(row["fate"])
                entries[row["id"]] = tuple(row.get("entry_ids", ()))
                by[row["id"]] = row.get("assigned_by")
        except (KeyError, ValueError, TypeError) as exc:
            raise DataError(f"malformed manifest ({exc})") from None
        partition = EntryPartition(assignment, seed)
        return cls(fates, {e: _SHOT[s] for e, s in assignment.items()}, seed, partition, entries, by)

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_json(), f, indent=1)
            f.write("\n")

    @classmethod
    def read(cls, path) -> "SplitManifest":
        with open(path, encoding="utf-8") as f:
            try:
                obj = json.load(f)
            except ValueError as exc:
                raise DataError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_json(obj)


def assign_sentences(corpus, matches, partition: EntryPartition, seed: int, drop_valid: bool = True) -> SplitManifest:
    n_sent = len(corpus)
    both: dict[int, set] = {}
    src_only: dict[int, set] = {}
    for rec in matches:
        if not 0 <= rec.sentence_id < n_sent:
            raise DataError(f"match references unknown sentence {rec.sentence_id}")
        if rec.entry_id not in partition.assignment:
            raise DataError(f"match references unpartitioned entry {rec.entry_id}")
        if rec.both:
            both.setdefault(rec.sentence_id, set()).add(rec.entry_id)
        elif rec.src_span is not None:
            src_only.setdefault(rec.sentence_id, set()).add(rec.entry_id)

    assignment = partition.assignment
    fate: dict[int, Fate] = {}
    assigned_by: dict[int, int | None] = {}

    by_set: dict[EntrySet, dict[int, list[int]]] = {s: {} for s in _SET_ORDER}
    for sid in sorted(both):
        for eid in sorted(both[sid]):
            by_set[assignment[eid]].setdefault(eid, []).append(sid)

    for sid in sorted(both):
        tests = sorted(e for e in both[sid] if assignment[e] == EntrySet.TEST)
        if tests:
            fate[sid] = Fate.TEST
            assigned_by[sid] = tests[0]

    rng = make_rng(seed, "assign")
    for eid in sorted(by_set[EntrySet.MIX]):
        sents = [s for s in by_set[EntrySet.MIX][eid] if s not in fate]
        rng.shuffle(sents)
        n_test, n_valid, _ = mix_split_sizes(len(sents))
        for i, sid in enumerate(sents):
            fate[sid] = Fate.TEST if i < n_test else Fate.VALID if i < n_test + n_valid else Fate.TRAIN
            assigned_by[sid] = eid

    pool = sorted({s for sents in by_set[EntrySet.TRAIN].values() for s in sents if s not in fate})
    rng.shuffle(pool)
    for i, sid in enumerate(pool):
        fate[sid] = Fate.TRAIN if i % 2 == 0 else Fate.VALID
        assigned_by[sid] = min(e for e in both[sid] if assignment[e] == EntrySet.TRAIN)

    for sid in range(n_sent):
        if sid not in fate:
            fate[sid] = Fate.TRAIN
            assigned_by[sid] = None
        droppable = fate[sid] == Fate.TRAIN or (drop_valid and fate[sid] == Fate.VALID)
        if droppable and src_only.get(sid):
            fate[sid] = Fate.DROPPED

    return SplitManifest(
        fate,
        {e: _SHOT[s] for e, s in assignment.items()},
        seed,
        partition,
        {sid: tuple(sorted(es)) for sid, es in both.items()},
        assigned_by,
    )


def export_split(corpus, manifest: SplitManifest, out_dir) -> dict[str, Path]:
    """Write every split as ``.src``/``.tgt`` text, ``.lem`` lemma and ``.ids`` files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if len(manifest.sentence_fate) != len(corpus):
        raise DataError(f"manifest covers {len(manifest.sentence_fate)} of {len(corpus)} sentences")
    written = {}
    for fate, name in SPLIT_FILES.items():
        ids = manifest.ids_with(fate)
        pairs = [corpus[i] for i in ids]
        files = {
            f"{name}.src": [p.src_tokens for p in pairs],
            f"{name}.tgt": [p.tgt_tokens for p in pairs],
            f"{name}.src.lem": [p.src_lemmas for p in pairs],
            f"{name}.tgt.lem": [p.tgt_lemmas for p in pairs],
        }
        for fname, lines in files.items():
            write_tokenized(out / fname, lines)
            written[fname] = out / fname
        (out / f"{name}.ids").write_text("".join(f"{i}\n" for i in ids), encoding="utf-8")
        written[f"{name}.ids"] = out / f"{name}.ids"
    manifest.write(out / "manifest.json")
    written["manifest.json"] = out / "manifest.json"
    return written


def load_split(out_dir, name: str):
    """Reload an exported split (text plus lemmas) as a corpus."""
    out = Path(out_dir)
    src, tgt = out / f"{name}.src", out / f"{name}.tgt"
    if src.stat().st_size == 0:
        return Corpus(())
    corpus = load_parallel(src, tgt)
    corpus = load_lemmas(corpus, "source", out / f"{name}.src.lem")
    return load_lemmas(corpus, "target", out / f"{name}.tgt.lem")
