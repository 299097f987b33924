"""Synthetic parallel corpora with planted dictionary entries.

The generators build corpora whose per-entry statistics are known by
construction, so that filtering, splitting and evaluation can be checked
at realistic scale without real data. Words are pseudo-words drawn from a
syllable alphabet; filler words follow a Zipf distribution and planted
entries use disjoint, collision-checked forms.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus, SentencePair, write_tokenized
from .dictionary import DictEntry, EntryStats, write_dictionary

_CONS = "bdfgklmnprstvz"
_VOWELS = "aeiou"
SRC_SUFFIXES = ("", "s")
TGT_SUFFIXES = ("", "en", "e", "es")


class _WordFactory:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.used: set[str] = set()

    def new(self, syllables=(2, 4), capital=False, suffixes=("",)) -> str:
        rng = self.rng
        while True:
            n = rng.randint(*syllables)
            w = "".join(rng.choice(_CONS) + rng.choice(_VOWELS) for _ in range(n))
            if rng.random() < 0.4:
                w += rng.choice(_CONS)
            if capital:
                w = w.capitalize()
            forms = {(w + s).casefold() for s in suffixes}
            if not forms & self.used:
                self.used |= forms
                return w


def _zipf_cum_weights(n: int, s: float = 1.1) -> list[float]:
    return list(itertools.accumulate(1.0 / (r ** s) for r in range(1, n + 1)))


@dataclass
class PlantedEntry:
    entry: DictEntry
    kind: str
    src_surfaces: list[tuple[str, ...]]  # per source variant
    tgt_surfaces: list[tuple[str, ...]]  # per target variant
    expected: EntryStats = field(default_factory=EntryStats)


@dataclass
class SyntheticCorpus:
    corpus: Corpus
    entries: list[DictEntry]
    planted: dict[int, PlantedEntry]

    def write(self, out_dir, prefix: str = "corpus") -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "src": out / f"{prefix}.src",
            "tgt": out / f"{prefix}.tgt",
            "src_lemmas": out / f"{prefix}.src.lem",
            "tgt_lemmas": out / f"{prefix}.tgt.lem",
            "dictionary": out / "dictionary.jsonl",
        }
        pairs = self.corpus.pairs
        write_tokenized(paths["src"], (p.src_tokens for p in pairs))
        write_tokenized(paths["tgt"], (p.tgt_tokens for p in pairs))
        write_tokenized(paths["src_lemmas"], (p.src_lemmas for p in pairs))
        write_tokenized(paths["tgt_lemmas"], (p.tgt_lemmas for p in pairs))
        write_dictionary(paths["dictionary"], self.entries)
        return paths


def _make_phrase(words: _WordFactory, rng, multi_prob: float):
    n = 2 if rng.random() < multi_prob else 1
    src = tuple(words.new(suffixes=SRC_SUFFIXES) for _ in range(n))
    if n == 1:
        tgt = (words.new(capital=True, suffixes=TGT_SUFFIXES),)
    else:
        tgt = (words.new(suffixes=TGT_SUFFIXES), words.new(capital=True, suffixes=TGT_SUFFIXES))
    src_forms = [src[:-1] + (src[-1] + s,) for s in SRC_SUFFIXES]
    tgt_forms = [tgt[:-1] + (tgt[-1] + s,) for s in TGT_SUFFIXES]
    return src, tgt, src_forms, tgt_forms


def _variant_plan(rng, occurrences: int, variants: int, n_forms: int, include_lemma: bool) -> list[int]:
    """Variant index per occurrence using exactly ``variants`` distinct forms."""
    if occurrences == 0:
        return []
    pool = list(range(n_forms))
    if include_lemma:
        chosen = [0] + rng.sample(pool[1:], variants - 1)
    else:
        chosen = rng.sample(pool[1:], variants) if variants < n_forms else pool
    plan = chosen + [rng.choice(chosen) for _ in range(occurrences - variants)]
    rng.shuffle(plan)
    return plan


# kind -> (count, occurrence sampler, variants sampler, src_only sampler, tgt_only sampler)
def _ted_kinds(n_good, n_frequent, frequent_occ):
    def good_occ(rng):
        return min(80, 3 + int(rng.expovariate(1 / 6.5)))

    def small_conflict(rng):
        return rng.choice((0, 0, 0, 0, 0, 0, 1, 1, 2, 3))

    return {
        "good": (n_good, good_occ, lambda r, o: r.randint(2, min(3, o)), small_conflict, small_conflict),
        "rare": (max(1, n_good // 2), lambda r: r.randint(1, 2), lambda r, o: r.randint(1, o), small_conflict, small_conflict),
        "single_variant": (max(1, n_good // 4), lambda r: r.randint(3, 20), lambda r, o: 1, small_conflict, small_conflict),
        "conflict": (max(1, n_good // 6), lambda r: r.randint(3, 20), lambda r, o: 2, lambda r: r.randint(10, 16), small_conflict),
        "frequent": (n_frequent, lambda r: r.randint(*frequent_occ), lambda r, o: 3, lambda r: 0, lambda r: 0),
        "absent": (n_good, lambda r: 0, lambda r, o: 0, lambda r: 0, lambda r: 0),
    }


def generate_corpus(
    n_sentences: int = 198_000,
    seed: int = 1,
    n_good: int = 636,
    n_frequent: int = 10,
    frequent_occ: tuple[int, int] = (100, 300),
    filler_vocab: int = 25_000,
    length_range: tuple[int, int] = (5, 25),
    multi_word_prob: float = 0.2,
) -> SyntheticCorpus:
    """Corpus with planted entries of several kinds.

    ``good`` entries pass the default filter; ``rare``, ``single_variant``,
    ``conflict`` and ``frequent`` entries each fail one bound; ``absent``
    entries never occur. Each planted occurrence gets its own sentence, so
    expected statistics are exact. The defaults are sized so that the split
    of 198K sentences gives roughly 3.2K test and 1.6K validation sentences.
    """
    rng = random.Random(seed)
    words = _WordFactory(rng)

    planted: dict[int, PlantedEntry] = {}
    placements = []  # (entry_id, side, src_variant, tgt_variant)
    entries = []
    for kind, (count, occ_f, var_f, so_f, to_f) in _ted_kinds(n_good, n_frequent, frequent_occ).items():
        for _ in range(count):
            src, tgt, src_forms, tgt_forms = _make_phrase(words, rng, multi_word_prob)
            entry = DictEntry(len(entries), src, tgt)
            entries.append(entry)
            occ = occ_f(rng)
            variants = var_f(rng, occ) if occ else 0
            src_only, tgt_only = so_f(rng), to_f(rng)
            plan = _variant_plan(rng, occ, variants, len(TGT_SUFFIXES), rng.random() < 0.5)
            for v in plan:
                placements.append((entry.id, "both", rng.randrange(len(SRC_SUFFIXES)), v))
            for _ in range(src_only):
                placements.append((entry.id, "src", rng.randrange(len(SRC_SUFFIXES)), None))
            for _ in range(tgt_only):
                placements.append((entry.id, "tgt", None, rng.randrange(len(TGT_SUFFIXES))))
            planted[entry.id] = PlantedEntry(entry, kind, src_forms, tgt_forms, EntryStats(occ, variants, src_only, tgt_only))
    if len(placements) > n_sentences:
        raise ValueError(f"{len(placements)} planted occurrences do not fit into {n_sentences} sentences")

    src_vocab = [words.new(syllables=(1, 3)) for _ in range(filler_vocab)]
    tgt_vocab = [words.new(syllables=(1, 3)) for _ in range(filler_vocab)]
    cum = _zipf_cum_weights(filler_vocab)

    host = rng.sample(range(n_sentences), len(placements))
    by_sentence = dict(zip(host, placements))
    lo, hi = length_range
    pairs = []
    for sid in range(n_sentences):
        src = rng.choices(src_vocab, cum_weights=cum, k=rng.randint(lo, hi))
        tgt = rng.choices(tgt_vocab, cum_weights=cum, k=rng.randint(lo, hi))
        src_lem, tgt_lem = list(src), list(tgt)
        place = by_sentence.get(sid)
        if place is not None:
            eid, side, sv, tv = place
            p = planted[eid]
            if sv is not None:
                i = rng.randint(0, len(src))
                src[i:i] = p.src_surfaces[sv]
                src_lem[i:i] = p.entry.src_lemma_phrase
            if tv is not None:
                i = rng.randint(0, len(tgt))
                tgt[i:i] = p.tgt_surfaces[tv]
                tgt_lem[i:i] = p.entry.tgt_lemma_phrase
        pairs.append(SentencePair(sid, tuple(src), tuple(tgt), tuple(src_lem), tuple(tgt_lem)))

    order = list(range(len(entries)))
    rng.shuffle(order)
    remap = {old: new for new, old in enumerate(order)}
    new_entries = [DictEntry(remap[e.id], e.src_lemma_phrase, e.tgt_lemma_phrase) for e in entries]
    new_entries.sort(key=lambda e: e.id)
    new_planted = {}
    for old, p in planted.items():
        p.entry = new_entries[remap[old]]
        new_planted[remap[old]] = p
    return SyntheticCorpus(Corpus(tuple(pairs)), new_entries, new_planted)


def planted_stats_corpus(n_entries: int = 1000, seed: int = 0, per_sentence: int = 4) -> SyntheticCorpus:
    """Compact corpus whose entry statistics cluster around the filter bounds.

    Several planted phrases share each sentence (never the same entry twice).
    """
    rng = random.Random(seed)
    words = _WordFactory(rng)

    def occ_sample():
        r = rng.random()
        if r < 0.35:
            return rng.randint(0, 6)
        if r < 0.55:
            return rng.randint(76, 84)
        return rng.randint(0, 90)

    def conflict_sample():
        r = rng.random()
        if r < 0.5:
            return 0
        if r < 0.8:
            return rng.randint(8, 11)
        return rng.randint(0, 12)

    entries, planted, placements = [], {}, []
    for eid in range(n_entries):
        src, tgt, src_forms, tgt_forms = _make_phrase(words, rng, 0.3)
        entry = DictEntry(eid, src, tgt)
        entries.append(entry)
        occ = occ_sample()
        variants = rng.choice((1, 2, 2, 3)) if occ else 0
        variants = min(variants, occ)
        so, to = conflict_sample(), conflict_sample()
        for v in _variant_plan(rng, occ, variants, len(TGT_SUFFIXES), rng.random() < 0.5):
            placements.append((eid, "both", rng.randrange(2), v))
        placements += [(eid, "src", rng.randrange(2), None)] * so
        placements += [(eid, "tgt", None, rng.randrange(4))] * to
        planted[eid] = PlantedEntry(entry, "planted", src_forms, tgt_forms, EntryStats(occ, variants, so, to))

    rng.shuffle(placements)
    sentences: list[list] = []
    pending = placements
    while pending:
        leftover = []
        for start in range(0, len(pending), per_sentence):
            chunk, seen = [], set()
            for pl in pending[start:start + per_sentence]:
                if pl[0] in seen:
                    leftover.append(pl)
                else:
                    seen.add(pl[0])
                    chunk.append(pl)
            sentences.append(chunk)
        pending = leftover

    filler = [words.new(syllables=(1, 2)) for _ in range(300)]
    pairs = []
    for sid, chunk in enumerate(sentences):
        src, tgt, src_lem, tgt_lem = [], [], [], []
        for eid, side, sv, tv in chunk:
            p = planted[eid]
            for toks, lems in ((src, src_lem), (tgt, tgt_lem)):
                w = rng.choice(filler)
                toks.append(w)
                lems.append(w)
            if sv is not None:
                src.extend(p.src_surfaces[sv])
                src_lem.extend(p.entry.src_lemma_phrase)
            if tv is not None:
                tgt.extend(p.tgt_surfaces[tv])
                tgt_lem.extend(p.entry.tgt_lemma_phrase)
        pairs.append(SentencePair(sid, tuple(src), tuple(tgt), tuple(src_lem), tuple(tgt_lem)))
    return SyntheticCorpus(Corpus(tuple(pairs)), entries, planted)


def random_fixture(seed: int, max_sentences: int = 1000, n_entries: int = 40) -> SyntheticCorpus:
    """Small, deliberately messy corpus over a tiny vocabulary.

    Entries overlap, repeat within sentences, share words and appear with
    mixed casing; useful for property tests against brute-force oracles.
    """
    rng = random.Random(seed)
    words = _WordFactory(rng)
    n_sent = rng.randint(max(1, max_sentences // 4), max_sentences)

    def vocab(n, capital_prob):
        out = []
        for _ in range(n):
            lemma = words.new(syllables=(1, 2), suffixes=("", "x"))
            if rng.random() < capital_prob:
                lemma = lemma.capitalize()
            forms = [lemma, lemma + "x"] if rng.random() < 0.5 else [lemma]
            out.append((lemma, forms))
        return out

    src_vocab, tgt_vocab = vocab(25, 0.0), vocab(25, 0.4)

    def sample(voc):
        lemma, forms = rng.choice(voc)
        surface = rng.choice(forms)
        if rng.random() < 0.1:
            surface = surface.upper() if rng.random() < 0.5 else surface.capitalize()
        if rng.random() < 0.1:
            lemma = lemma.swapcase()
        return surface, lemma

    def phrase(voc):
        return tuple(rng.choice(voc)[0] for _ in range(rng.choice((1, 1, 2, 3))))

    raw = []
    seen = set()
    while len(raw) < n_entries:
        pair = (phrase(src_vocab), phrase(tgt_vocab))
        if pair not in seen:
            seen.add(pair)
            raw.append(pair)
    entries = [DictEntry(i, s, t) for i, (s, t) in enumerate(raw)]
    lemma_forms = {lem: forms for lem, forms in src_vocab + tgt_vocab}

    pairs = []
    for sid in range(n_sent):
        side_data = []
        for voc in (src_vocab, tgt_vocab):
            toks = [sample(voc) for _ in range(rng.randint(2, 10))]
            side_data.append(toks)
        for _ in range(rng.choice((0, 0, 1, 1, 2))):
            e = rng.choice(entries)
            mode = rng.random()
            if mode < 0.7 or mode >= 0.85:
                i = rng.randint(0, len(side_data[0]))
                side_data[0][i:i] = [(rng.choice(lemma_forms[l]), l) for l in e.src_lemma_phrase]
            if mode < 0.85:
                i = rng.randint(0, len(side_data[1]))
                side_data[1][i:i] = [(rng.choice(lemma_forms[l]), l) for l in e.tgt_lemma_phrase]
        (s, t) = side_data
        pairs.append(SentencePair(
            sid,
            tuple(x for x, _ in s),
            tuple(x for x, _ in t),
            tuple(y for _, y in s),
            tuple(y for _, y in t),
        ))
    return SyntheticCorpus(Corpus(tuple(pairs)), entries, {})
