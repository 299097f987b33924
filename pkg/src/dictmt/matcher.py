"""Contiguous lemma-sequence matching of dictionary entries.

Entries are matched on case-folded lemmas with an Aho-Corasick automaton
whose alphabet is lemma tokens, then mapped back to surface spans.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

_NO_SPAN = 1 << 62


@dataclass(frozen=True)
class MatchRecord:
    sentence_id: int
    entry_id: int
    src_span: tuple[int, int] | None
    tgt_span: tuple[int, int] | None
    src_surface: tuple[str, ...] | None
    tgt_surface: tuple[str, ...] | None

    def __post_init__(self):
        if self.src_span is None and self.tgt_span is None:
            raise ValueError("match record needs a source or target span")

    @property
    def both(self) -> bool:
        return self.src_span is not None and self.tgt_span is not None

    def sort_key(self):
        return (
            self.sentence_id,
            self.src_span[0] if self.src_span else _NO_SPAN,
            self.tgt_span[0] if self.tgt_span else _NO_SPAN,
            self.entry_id,
        )

    def to_json(self) -> dict:
        return {
            "sentence_id": self.sentence_id,
            "entry_id": self.entry_id,
            "src_span": list(self.src_span) if self.src_span else None,
            "tgt_span": list(self.tgt_span) if self.tgt_span else None,
            "src_surface": list(self.src_surface) if self.src_surface else None,
            "tgt_surface": list(self.tgt_surface) if self.tgt_surface else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MatchRecord":
        def tup(v):
            return tuple(v) if v is not None else None

        return cls(
            obj["sentence_id"],
            obj["entry_id"],
            tup(obj["src_span"]),
            tup(obj["tgt_span"]),
            tup(obj["src_surface"]),
            tup(obj["tgt_surface"]),
        )


class PhraseAutomaton:
    """Aho-Corasick automaton over token sequences.

    ``search`` yields ``(start, pattern_index)`` for every occurrence of every
    pattern, including overlapping ones, ordered by end position (then
    longest first).
    """

    def __init__(self, patterns: Iterable[Sequence[str]]):
        self.patterns = [tuple(p) for p in patterns]
        goto: list[dict] = [{}]
        own_out: list[list[int]] = [[]]
        for idx, pat in enumerate(self.patterns):
            if not pat:
                raise ValueError("empty pattern")
            state = 0
            for tok in pat:
                nxt = goto[state].get(tok)
                if nxt is None:
                    nxt = len(goto)
                    goto[state][tok] = nxt
                    goto.append({})
                    own_out.append([])
                state = nxt
            own_out[state].append(idx)

        fail = [0] * len(goto)
        out: list[tuple] = [()] * len(goto)
        queue = deque()
        for child in goto[0].values():
            queue.append(child)
        order = []
        while queue:
            state = queue.popleft()
            order.append(state)
            for tok, child in goto[state].items():
                f = fail[state]
                while f and tok not in goto[f]:
                    f = fail[f]
                cand = goto[f].get(tok, 0)
                fail[child] = cand if cand != child else 0
                queue.append(child)
        lengths = [len(p) for p in self.patterns]
        for state in order:
            merged = own_out[state] + list(out[fail[state]])
            merged.sort(key=lambda i: (-lengths[i], i))
            out[state] = tuple(merged)
        self._goto = goto
        self._fail = fail
        self._out = out
        self._lengths = lengths

    def search(self, tokens: Sequence[str]) -> Iterator[tuple[int, int]]:
        goto, fail, out, lengths = self._goto, self._fail, self._out, self._lengths
        state = 0
        for pos, tok in enumerate(tokens):
            while state and tok not in goto[state]:
                state = fail[state]
            state = goto[state].get(tok, 0)
            if out[state]:
                for idx in out[state]:
                    yield pos - lengths[idx] + 1, idx


def fold(seq: Sequence[str]) -> tuple[str, ...]:
    return tuple(tok.casefold() for tok in seq)


def match_side(lemmas: Sequence[str], phrase: Sequence[str]) -> list[tuple[int, int]]:
    """All contiguous case-folded occurrences of ``phrase``, overlapping included."""
    lemmas, phrase = fold(lemmas), fold(phrase)
    n = len(phrase)
    if n == 0:
        return []
    return [(i, n) for i in range(len(lemmas) - n + 1) if lemmas[i:i + n] == phrase]


class EntryIndex:
    """Automata over the source and target phrases of a set of entries."""

    def __init__(self, entries):
        self.entries = list(entries)
        self._src, self._src_ids = self._build(e.src_lemma_phrase for e in self.entries)
        self._tgt, self._tgt_ids = self._build(e.tgt_lemma_phrase for e in self.entries)

    def _build(self, phrases):
        by_phrase: dict[tuple, list[int]] = {}
        for entry, phrase in zip(self.entries, phrases):
            by_phrase.setdefault(fold(phrase), []).append(entry.id)
        keys = list(by_phrase)
        return PhraseAutomaton(keys), [by_phrase[k] for k in keys]

    @staticmethod
    def _leftmost(automaton, ids, lemmas) -> dict[int, tuple[int, int]]:
        found: dict[int, tuple[int, int]] = {}
        lengths = automaton._lengths
        for start, idx in automaton.search(fold(lemmas)):
            for entry_id in ids[idx]:
                prev = found.get(entry_id)
                if prev is None or start < prev[0]:
                    found[entry_id] = (start, lengths[idx])
        return found

    def match_pair(self, pair) -> list[MatchRecord]:
        src = self._leftmost(self._src, self._src_ids, pair.src_lemmas)
        tgt = self._leftmost(self._tgt, self._tgt_ids, pair.tgt_lemmas)
        records = []
        for entry_id in src.keys() | tgt.keys():
            s, t = src.get(entry_id), tgt.get(entry_id)
            records.append(MatchRecord(
                pair.id,
                entry_id,
                s,
                t,
                pair.src_tokens[s[0]:s[0] + s[1]] if s else None,
                pair.tgt_tokens[t[0]:t[0] + t[1]] if t else None,
            ))
        records.sort(key=MatchRecord.sort_key)
        return records


def find_matches(corpus, entries) -> list[MatchRecord]:
    """One record per (sentence, entry) matching on either side, sorted."""
    index = EntryIndex(entries)
    records = []
    for pair in corpus:
        records.extend(index.match_pair(pair))
    return records


def select_non_overlapping(records: Iterable[MatchRecord]) -> list[MatchRecord]:
    """Resolve overlapping source spans within each sentence.

    Longer spans win, ties go to the lower entry id. Records without a source
    span are discarded. The result is sorted.
    """
    by_sentence: dict[int, list[MatchRecord]] = {}
    for rec in records:
        if rec.src_span is not None:
            by_sentence.setdefault(rec.sentence_id, []).append(rec)
    chosen = []
    for recs in by_sentence.values():
        recs.sort(key=lambda r: (-r.src_span[1], r.entry_id, r.src_span[0]))
        taken: list[tuple[int, int]] = []
        for rec in recs:
            a, n = rec.src_span
            if all(a + n <= b or b + m <= a for b, m in taken):
                taken.append(rec.src_span)
                chosen.append(rec)
    chosen.sort(key=MatchRecord.sort_key)
    return chosen
