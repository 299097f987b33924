"""Bilingual dictionary entries, their corpus statistics, and rarity filtering."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from .errors import DictionaryError
from .matcher import EntryIndex, match_side


@dataclass(frozen=True)
class DictEntry:
    id: int
    src_lemma_phrase: tuple[str, ...]
    tgt_lemma_phrase: tuple[str, ...]

    def __post_init__(self):
        for name in ("src_lemma_phrase", "tgt_lemma_phrase"):
            phrase = getattr(self, name)
            if not phrase:
                raise DictionaryError(f"entry {self.id}: empty {name}")
            if any(not lem or any(c.isspace() for c in lem) for lem in phrase):
                raise DictionaryError(f"entry {self.id}: bad lemma in {name}")

    def to_json(self) -> dict:
        return {"id": self.id, "src": " ".join(self.src_lemma_phrase), "tgt": " ".join(self.tgt_lemma_phrase)}


@dataclass(frozen=True)
class EntryStats:
    occurrences: int = 0
    tgt_variant_count: int = 0
    src_only_count: int = 0
    tgt_only_count: int = 0


@dataclass(frozen=True)
class FilterThresholds:
    """Defaults are the rarity/variant/ambiguity bounds used for the split."""

    min_occ: int = 3
    max_occ: int = 80
    min_tgt_variants: int = 2
    max_conflicts: int = 10  # exclusive

    def __post_init__(self):
        vals = (self.min_occ, self.max_occ, self.min_tgt_variants, self.max_conflicts)
        if any(v < 0 for v in vals):
            raise ValueError("thresholds must be non-negative")
        if self.min_occ > self.max_occ:
            raise ValueError("min_occ must not exceed max_occ")

    def accepts(self, stats: EntryStats) -> bool:
        return (
            self.min_occ <= stats.occurrences <= self.max_occ
            and stats.tgt_variant_count >= self.min_tgt_variants
            and stats.src_only_count < self.max_conflicts
            and stats.tgt_only_count < self.max_conflicts
        )

    def accepts_frequent(self, stats: EntryStats) -> bool:
        """Variant and conflict bounds only, with no upper occurrence limit."""
        return (
            stats.occurrences >= self.min_occ
            and stats.tgt_variant_count >= self.min_tgt_variants
            and stats.src_only_count < self.max_conflicts
            and stats.tgt_only_count < self.max_conflicts
        )


def make_entries(pairs: Iterable[tuple]) -> list[DictEntry]:
    """Dense-id entries from (src, tgt) phrases, dropping duplicates."""
    seen = set()
    entries = []
    for src, tgt in pairs:
        src = tuple(src.split()) if isinstance(src, str) else tuple(src)
        tgt = tuple(tgt.split()) if isinstance(tgt, str) else tuple(tgt)
        if (src, tgt) in seen:
            continue
        seen.add((src, tgt))
        entries.append(DictEntry(len(entries), src, tgt))
    return entries


def load_dictionary(path) -> list[DictEntry]:
    """Read a JSONL (``{"src": ..., "tgt": ...}``) or two-column TSV dictionary.

    JSONL records may carry an ``id``; when every record does, those ids are
    kept (files written by :func:`write_dictionary` round-trip), otherwise
    ids are assigned densely.
    """
    pairs, ids = [], []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            if line.lstrip().startswith("{"):
                try:
                    obj = json.loads(line)
                    src, tgt = obj["src"], obj["tgt"]
                except (ValueError, KeyError, TypeError) as exc:
                    raise DictionaryError(f"{path}:{lineno}: malformed record ({exc})") from None
                if not isinstance(src, str) or not isinstance(tgt, str):
                    raise DictionaryError(f"{path}:{lineno}: src/tgt must be strings")
                ids.append(obj.get("id"))
            else:
                ids.append(None)
                cols = line.split("\t")
                if len(cols) != 2:
                    raise DictionaryError(f"{path}:{lineno}: expected 2 tab-separated columns")
                src, tgt = cols
            if not src.split() or not tgt.split():
                raise DictionaryError(f"{path}:{lineno}: empty phrase")
            pairs.append((src, tgt))
    if pairs and all(isinstance(i, int) for i in ids):
        if len(set(ids)) != len(ids):
            raise DictionaryError(f"{path}: duplicate entry ids")
        entries, seen = [], set()
        for i, (s, t) in zip(ids, pairs):
            key = (tuple(s.split()), tuple(t.split()))
            if key not in seen:
                seen.add(key)
                entries.append(DictEntry(i, *key))
        return entries
    return make_entries(pairs)


def write_dictionary(path, entries: Iterable[DictEntry]):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for e in entries:
            f.write(json.dumps(e.to_json(), ensure_ascii=False))
            f.write("\n")


def compute_entry_stats(entry: DictEntry, corpus) -> EntryStats:
    """Statistics of a single entry by direct per-sentence scanning.

    Counting is per sentence pair. The target variant of a both-side match is
    the surface phrase at the leftmost target occurrence.
    """
    occ = src_only = tgt_only = 0
    variants = set()
    for pair in corpus:
        s = match_side(pair.src_lemmas, entry.src_lemma_phrase)
        t = match_side(pair.tgt_lemmas, entry.tgt_lemma_phrase)
        if s and t:
            occ += 1
            start, n = t[0]
            variants.add(pair.tgt_tokens[start:start + n])
        elif s:
            src_only += 1
        elif t:
            tgt_only += 1
    return EntryStats(occ, len(variants), src_only, tgt_only)


def stats_from_matches(entries: Sequence[DictEntry], matches) -> dict[int, EntryStats]:
    occ, src_only, tgt_only = {}, {}, {}
    variants: dict[int, set] = {}
    for rec in matches:
        eid = rec.entry_id
        if rec.both:
            occ[eid] = occ.get(eid, 0) + 1
            variants.setdefault(eid, set()).add(rec.tgt_surface)
        elif rec.src_span is not None:
            src_only[eid] = src_only.get(eid, 0) + 1
        else:
            tgt_only[eid] = tgt_only.get(eid, 0) + 1
    return {
        e.id: EntryStats(occ.get(e.id, 0), len(variants.get(e.id, ())), src_only.get(e.id, 0), tgt_only.get(e.id, 0))
        for e in entries
    }


def compute_all_stats(entries: Sequence[DictEntry], corpus) -> dict[int, EntryStats]:
    """Statistics for every entry in one automaton pass over the corpus."""
    index = EntryIndex(entries)
    matches = []
    for pair in corpus:
        matches.extend(index.match_pair(pair))
    return stats_from_matches(entries, matches)


def filter_entries(entries: Sequence[DictEntry], stats, thresholds: FilterThresholds | None = None) -> list[DictEntry]:
    thresholds = thresholds or FilterThresholds()
    return [e for e in entries if thresholds.accepts(stats[e.id])]


def write_stats(path, entries: Iterable[DictEntry], stats):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for e in entries:
            row = e.to_json()
            row.update(asdict(stats[e.id]))
            f.write(json.dumps(row, ensure_ascii=False))
            f.write("\n")


def read_stats(path) -> tuple[list[DictEntry], dict[int, EntryStats]]:
    entries, stats = [], {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                entry = DictEntry(row["id"], tuple(row["src"].split()), tuple(row["tgt"].split()))
                stats[entry.id] = EntryStats(
                    row["occurrences"], row["tgt_variant_count"], row["src_only_count"], row["tgt_only_count"]
                )
            except (ValueError, KeyError, AttributeError) as exc:
                raise DictionaryError(f"{path}:{lineno}: malformed stats row ({exc})") from None
            entries.append(entry)
    return entries, stats
