"""Parallel corpora with per-token lemmas.

A corpus is loaded from two aligned, pre-tokenized text files. Lemmas start
out as copies of the surface forms and are replaced by :func:`load_lemmas`
with the output of an external lemmatizer.
"""

from __future__ import annotations

import dataclasses
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import CorpusError

SIDES = ("source", "target")


def validate_token(token: str) -> str:
    if not token or any(ch.isspace() for ch in token):
        raise CorpusError(f"invalid token {token!r}")
    return token


@dataclass(frozen=True)
class SentencePair:
    id: int
    src_tokens: tuple[str, ...]
    tgt_tokens: tuple[str, ...]
    src_lemmas: tuple[str, ...]
    tgt_lemmas: tuple[str, ...]

    def __post_init__(self):
        if not self.src_tokens or not self.tgt_tokens:
            raise CorpusError(f"sentence {self.id}: empty side")
        if len(self.src_lemmas) != len(self.src_tokens):
            raise CorpusError(f"sentence {self.id}: source lemma/token count mismatch")
        if len(self.tgt_lemmas) != len(self.tgt_tokens):
            raise CorpusError(f"sentence {self.id}: target lemma/token count mismatch")

    @classmethod
    def from_tokens(cls, id, src_tokens, tgt_tokens, src_lemmas=None, tgt_lemmas=None):
        src_tokens = tuple(src_tokens)
        tgt_tokens = tuple(tgt_tokens)
        return cls(
            id,
            src_tokens,
            tgt_tokens,
            tuple(src_lemmas) if src_lemmas is not None else src_tokens,
            tuple(tgt_lemmas) if tgt_lemmas is not None else tgt_tokens,
        )

    def tokens(self, side: str) -> tuple[str, ...]:
        return self.src_tokens if _side(side) == "source" else self.tgt_tokens

    def lemmas(self, side: str) -> tuple[str, ...]:
        return self.src_lemmas if _side(side) == "source" else self.tgt_lemmas


@dataclass(frozen=True)
class Corpus:
    pairs: tuple[SentencePair, ...]
    src_freq: Mapping[str, int] = field(default=None, compare=False)
    tgt_freq: Mapping[str, int] = field(default=None, compare=False)

    def __post_init__(self):
        for i, pair in enumerate(self.pairs):
            if pair.id != i:
                raise CorpusError(f"sentence ids must be dense: position {i} has id {pair.id}")
        if self.src_freq is None:
            object.__setattr__(self, "src_freq", _count(p.src_tokens for p in self.pairs))
        if self.tgt_freq is None:
            object.__setattr__(self, "tgt_freq", _count(p.tgt_tokens for p in self.pairs))

    @classmethod
    def from_pairs(cls, pairs: Iterable) -> "Corpus":
        """Build a corpus from ``(src_tokens, tgt_tokens[, src_lemmas, tgt_lemmas])`` tuples."""
        return cls(tuple(SentencePair.from_tokens(i, *p) for i, p in enumerate(pairs)))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    def subset(self, ids: Iterable[int]) -> "Corpus":
        """Re-indexed corpus holding the given sentences in the given order."""
        return Corpus(tuple(dataclasses.replace(self.pairs[old], id=new) for new, old in enumerate(ids)))


class LemmaTable:
    """Surface form to lemma lookup with identity fallback.

    Keys are case-folded; stored lemmas keep their casing.
    """

    def __init__(self, entries: Mapping[str, str] | None = None):
        self.entries = {k.casefold(): v for k, v in (entries or {}).items()}

    def __len__(self):
        return len(self.entries)

    def lookup(self, surface: str) -> str:
        return self.entries.get(surface.casefold(), surface)

    @classmethod
    def from_file(cls, path) -> "LemmaTable":
        entries = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                cols = line.split("\t")
                if len(cols) != 2 or not cols[0] or not cols[1]:
                    raise CorpusError(f"{path}:{lineno}: expected 'surface<TAB>lemma'")
                entries[cols[0]] = cols[1]
        return cls(entries)

    @classmethod
    def from_corpus(cls, corpus: Corpus, side: str) -> "LemmaTable":
        """Majority lemma per case-folded surface, ties broken by the smaller lemma."""
        votes: dict[str, Counter] = {}
        for pair in corpus:
            for tok, lem in zip(pair.tokens(side), pair.lemmas(side)):
                votes.setdefault(tok.casefold(), Counter())[lem] += 1
        table = cls()
        table.entries = {
            key: min(c.items(), key=lambda kv: (-kv[1], kv[0]))[0] for key, c in votes.items()
        }
        return table

    def write(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for key in sorted(self.entries):
                f.write(f"{key}\t{self.entries[key]}\n")


def _side(side: str) -> str:
    if side in ("source", "src"):
        return "source"
    if side in ("target", "tgt"):
        return "target"
    raise ValueError(f"side must be 'source' or 'target', got {side!r}")


def _count(sentences) -> dict[str, int]:
    freq = Counter()
    for toks in sentences:
        freq.update(toks)
    return dict(freq)


def read_tokenized(path) -> list[tuple[str, ...]]:
    """Read one whitespace-tokenized sentence per line; empty lines are errors."""
    sentences = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            toks = tuple(line.split())
            if not toks:
                raise CorpusError(f"{path}:{lineno}: empty line")
            sentences.append(toks)
    return sentences


def write_tokenized(path, sentences: Iterable[Sequence[str]]):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for toks in sentences:
            f.write(" ".join(toks))
            f.write("\n")


def load_parallel(src_path, tgt_path) -> Corpus:
    src = read_tokenized(src_path)
    tgt = read_tokenized(tgt_path)
    if len(src) != len(tgt):
        raise CorpusError(
            f"line count mismatch: {src_path} has {len(src)} lines, {tgt_path} has {len(tgt)}"
        )
    return Corpus(tuple(SentencePair(i, s, t, s, t) for i, (s, t) in enumerate(zip(src, tgt))))


def read_lemma_file(path) -> list[tuple[str, ...]]:
    """Parse a lemma file into one lemma tuple per sentence.

    Accepts plain text (one sentence per line), a token/lemma TSV with blank
    lines between sentences, or CoNLL-U (FORM and LEMMA columns are used).
    """
    with open(path, encoding="utf-8") as f:
        lines = [line.rstrip("\n").rstrip("\r") for line in f]
    if not any("\t" in line for line in lines):
        return [tuple(line.split()) for line in lines]

    sentences, current = [], []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            if current:
                sentences.append(tuple(current))
                current = []
            continue
        if "\t" not in line and line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) >= 10:
            # CoNLL-U: skip multiword ranges and empty nodes
            if "-" in cols[0] or "." in cols[0]:
                continue
            form, lemma = cols[1], cols[2]
        elif len(cols) == 2:
            form, lemma = cols
        else:
            raise CorpusError(f"{path}:{lineno}: expected 2 or 10 tab-separated columns")
        if lemma == "_" and form != "_":
            lemma = form
        lemma = "_".join(lemma.split())
        if not lemma:
            raise CorpusError(f"{path}:{lineno}: empty lemma")
        current.append(lemma)
    if current:
        sentences.append(tuple(current))
    return sentences


def load_lemmas(corpus: Corpus, side: str, lemma_path) -> Corpus:
    side = _side(side)
    records = read_lemma_file(lemma_path)
    if len(records) != len(corpus):
        raise CorpusError(
            f"{lemma_path}: {len(records)} lemma records for {len(corpus)} sentences"
        )
    pairs = []
    for pair, lemmas in zip(corpus.pairs, records):
        if len(lemmas) != len(pair.tokens(side)):
            raise CorpusError(
                f"{lemma_path}: sentence {pair.id} has {len(pair.tokens(side))} tokens "
                f"but {len(lemmas)} lemmas"
            )
        if side == "source":
            pairs.append(dataclasses.replace(pair, src_lemmas=lemmas))
        else:
            pairs.append(dataclasses.replace(pair, tgt_lemmas=lemmas))
    return Corpus(tuple(pairs), corpus.src_freq, corpus.tgt_freq)


def lemmatize_fallback(tokens: Sequence[str], table: LemmaTable) -> list[str]:
    return [table.lookup(tok) for tok in tokens]


def word_frequencies(corpus: Corpus, side: str) -> dict[str, int]:
    return dict(corpus.src_freq if _side(side) == "source" else corpus.tgt_freq)
