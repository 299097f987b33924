"""Word representations: BPE, characters, and the mixed word/character scheme.

Character-level schemes separate words with a reserved boundary token so
that every segmentation can be inverted exactly by :func:`desegment`.
"""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .annotator import AnnotationConfig, annotation_mask
from .errors import SegmentationError

CONTINUATION = "@@"
END_OF_WORD = "</w>"
WORD_BOUNDARY = "<w>"
SCHEMES = ("bpe", "char", "mix", "mix_annot")


@dataclass
class BpeModel:
    merges: list[tuple[str, str]]
    continuation_marker: str = CONTINUATION
    _ranks: dict = field(default=None, init=False, repr=False, compare=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.merges = [tuple(m) for m in self.merges]
        self._ranks = {}
        for i, pair in enumerate(self.merges):
            if pair in self._ranks:
                raise SegmentationError(f"duplicate merge {pair}")
            self._ranks[pair] = i

    @property
    def num_merges(self) -> int:
        return len(self.merges)

    def symbols(self) -> set[str]:
        """Symbols created by merges (single characters are always valid)."""
        return {a + b for a, b in self.merges}

    def encode_word(self, word: str) -> tuple[str, ...]:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        syms = list(word[:-1]) + [word[-1] + END_OF_WORD]
        ranks = self._ranks
        while len(syms) > 1:
            best, best_rank = None, None
            for pair in zip(syms, syms[1:]):
                r = ranks.get(pair)
                if r is not None and (best_rank is None or r < best_rank):
                    best, best_rank = pair, r
            if best is None:
                break
            syms = _merge_pair(syms, best)
        syms[-1] = syms[-1][: -len(END_OF_WORD)]
        marker = self.continuation_marker
        pieces = tuple(s + marker for s in syms[:-1]) + (syms[-1],)
        self._cache[word] = pieces
        return pieces

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("#version: 0.2\n")
            for a, b in self.merges:
                f.write(f"{a} {b}\n")

    @classmethod
    def read(cls, path) -> "BpeModel":
        merges = []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if lineno == 1 and line.startswith("#version"):
                    continue
                parts = line.split(" ")
                if len(parts) != 2 or not all(parts):
                    raise SegmentationError(f"{path}:{lineno}: expected 'left right'")
                merges.append((parts[0], parts[1]))
        return cls(merges)


def _merge_pair(syms: list[str], pair: tuple[str, str]) -> list[str]:
    a, b = pair
    out = []
    i, n = 0, len(syms)
    while i < n:
        if i < n - 1 and syms[i] == a and syms[i + 1] == b:
            out.append(a + b)
            i += 2
        else:
            out.append(syms[i])
            i += 1
    return out


def _pairs(syms):
    return Counter(zip(syms, syms[1:]))


def learn_bpe(sentences: Iterable[Sequence[str]], num_merges: int = 20000) -> BpeModel:
    """Learn merges from tokenized sentences.

    Each step merges the most frequent adjacent symbol pair (ties go to the
    lexicographically smallest pair). Learning stops after ``num_merges``
    merges or once no pair occurs at least twice.
    """
    vocab = Counter()
    for toks in sentences:
        vocab.update(toks)
    words = sorted(vocab)
    freqs = [vocab[w] for w in words]
    syms = [list(w[:-1]) + [w[-1] + END_OF_WORD] for w in words]

    counts: dict[tuple[str, str], int] = Counter()
    where: dict[tuple[str, str], set[int]] = {}
    for i, s in enumerate(syms):
        for pair, c in _pairs(s).items():
            counts[pair] += c * freqs[i]
            where.setdefault(pair, set()).add(i)
    heap = [(-c, p) for p, c in counts.items()]
    heapq.heapify(heap)

    merges, merged = [], set()
    while len(merges) < num_merges and heap:
        neg, pair = heapq.heappop(heap)
        if counts.get(pair, 0) != -neg:
            continue
        if -neg < 2:
            break
        # a pair can re-form after later merges; its earlier rank already
        # covers it at apply time, so only the word state is updated
        if pair not in merged:
            merges.append(pair)
            merged.add(pair)
        changed = set()
        for i in sorted(where.pop(pair, ())):
            old = syms[i]
            new = _merge_pair(old, pair)
            if len(new) == len(old):
                continue
            f = freqs[i]
            old_pairs, new_pairs = _pairs(old), _pairs(new)
            for p, c in old_pairs.items():
                counts[p] -= c * f
                changed.add(p)
                if p not in new_pairs and p in where:
                    where[p].discard(i)
            for p, c in new_pairs.items():
                counts[p] = counts.get(p, 0) + c * f
                changed.add(p)
                where.setdefault(p, set()).add(i)
            syms[i] = new
        counts.pop(pair, None)
        for p in changed:
            c = counts.get(p, 0)
            if c > 0:
                heapq.heappush(heap, (-c, p))
            elif p in counts:
                del counts[p]
    return BpeModel(merges)


def apply_bpe(tokens: Sequence[str], model: BpeModel) -> list[str]:
    out = []
    for tok in tokens:
        out.extend(model.encode_word(tok))
    return out


def segment_chars(tokens: Sequence[str], marker: str = WORD_BOUNDARY) -> list[str]:
    out = []
    for i, tok in enumerate(tokens):
        if i:
            out.append(marker)
        out.extend(tok)
    return out


@dataclass
class MixConfig:
    k: int = 50
    freq_table: Mapping[str, int] = field(default_factory=dict)
    word_boundary_marker: str = WORD_BOUNDARY
    annot_all_chars: bool = False
    delimiter: str = "#"

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.word_boundary_marker in self.freq_table:
            raise SegmentationError(f"boundary marker {self.word_boundary_marker!r} occurs in the corpus")


def segment_mixed(tokens: Sequence[str], cfg: MixConfig) -> list[str]:
    """Keep words seen at least ``k`` times whole; spell out the rest.

    With ``annot_all_chars`` every word inside an annotation region is spelled
    out regardless of frequency. Annotation delimiters are never split.
    """
    marker = cfg.word_boundary_marker
    if cfg.annot_all_chars:
        inside = annotation_mask(tokens, AnnotationConfig(delimiter=cfg.delimiter))
    else:
        inside = None
    freq, k = cfg.freq_table, cfg.k
    out = []
    for i, tok in enumerate(tokens):
        if tok == marker:
            raise SegmentationError(f"token {i} equals the boundary marker {marker!r}")
        if i:
            out.append(marker)
        if tok == cfg.delimiter:
            out.append(tok)
        elif inside is not None and inside[i]:
            out.extend(tok)
        elif freq.get(tok, 0) >= k:
            out.append(tok)
        else:
            out.extend(tok)
    return out


def desegment(symbols: Sequence[str], scheme: str, strict: bool = True, marker: str = WORD_BOUNDARY) -> list[str]:
    """Invert a segmentation.

    In tolerant mode a trailing BPE continuation piece is closed off and empty
    character groups are skipped instead of raising.
    """
    if scheme == "bpe":
        out, buf = [], []
        for sym in symbols:
            if sym.endswith(CONTINUATION):
                buf.append(sym[: -len(CONTINUATION)])
            else:
                buf.append(sym)
                out.append("".join(buf))
                buf = []
        if buf:
            if strict:
                raise SegmentationError("dangling continuation marker at end of sequence")
            out.append("".join(buf))
        return out
    if scheme in ("char", "mix", "mix_annot"):
        if not symbols:
            return []
        out, buf = [], []
        for pos, sym in enumerate(list(symbols) + [marker]):
            if sym == marker:
                if buf:
                    out.append("".join(buf))
                elif strict:
                    raise SegmentationError(f"empty word before symbol {pos}")
                buf = []
            else:
                buf.append(sym)
        return out
    raise ValueError(f"unknown scheme {scheme!r}")


class Segmenter:
    """One configured scheme for one language side."""

    def __init__(self, scheme: str, bpe: BpeModel | None = None, mix: MixConfig | None = None):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        if scheme == "bpe" and bpe is None:
            raise ValueError("bpe scheme needs a model")
        self.scheme = scheme
        self.bpe = bpe
        self.mix = mix or MixConfig()
        if scheme == "mix_annot" and not self.mix.annot_all_chars:
            self.mix = MixConfig(self.mix.k, self.mix.freq_table, self.mix.word_boundary_marker, True, self.mix.delimiter)

    def __call__(self, tokens: Sequence[str]) -> list[str]:
        if self.scheme == "bpe":
            return apply_bpe(tokens, self.bpe)
        if self.scheme == "char":
            return segment_chars(tokens, self.mix.word_boundary_marker)
        return segment_mixed(tokens, self.mix)

    def invert(self, symbols: Sequence[str], strict: bool = True) -> list[str]:
        return desegment(symbols, self.scheme, strict, self.mix.word_boundary_marker)
