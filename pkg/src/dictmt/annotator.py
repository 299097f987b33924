"""Inline source annotation with dictionary suggestions.

A matched source span ``w1 .. wn`` whose entry translates to the target
lemmas ``t1 .. tm`` is rewritten as ``# w1 .. wn # t1 .. tm #``. Source words
stay inflected; the suggestion is always the lemma phrase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .dictionary import FilterThresholds, compute_all_stats
from .errors import AnnotationError
from .matcher import MatchRecord, find_matches, select_non_overlapping
from .splitter import EntrySet, Fate, SplitManifest


@dataclass(frozen=True)
class AnnotationConfig:
    delimiter: str = "#"
    annotate_extra: bool = False
    escape: bool = False
    escape_token: str = "<hash>"

    def __post_init__(self):
        for tok in (self.delimiter, self.escape_token):
            if not tok or any(c.isspace() for c in tok):
                raise ValueError(f"annotation token {tok!r} must be non-empty without whitespace")
        if self.delimiter == self.escape_token:
            raise ValueError("escape token must differ from the delimiter")


@dataclass(frozen=True)
class Annotation:
    """One annotated region recovered from an annotated sentence."""

    src_span: tuple[int, int]
    src_surface: tuple[str, ...]
    tgt_lemma: tuple[str, ...]


def _escape(tokens: Sequence[str], cfg: AnnotationConfig) -> list[str]:
    if cfg.escape:
        if cfg.escape_token in tokens:
            raise AnnotationError(f"escape token {cfg.escape_token!r} occurs in the sentence")
        return [cfg.escape_token if t == cfg.delimiter else t for t in tokens]
    if cfg.delimiter in tokens:
        raise AnnotationError(
            f"delimiter {cfg.delimiter!r} occurs in the sentence at token {list(tokens).index(cfg.delimiter)}"
        )
    return list(tokens)


def annotate_tokens(tokens: Sequence[str], spans: Iterable[tuple[tuple[int, int], Sequence[str]]], cfg: AnnotationConfig | None = None) -> list[str]:
    """Annotate ``tokens`` with ``((start, length), target_lemmas)`` suggestions."""
    cfg = cfg or AnnotationConfig()
    tokens = _escape(tokens, cfg)
    spans = sorted(spans, key=lambda s: s[0])
    out: list[str] = []
    pos = 0
    for (start, length), tgt in spans:
        if start < pos:
            raise AnnotationError(f"overlapping annotation spans at token {start}")
        if length < 1 or start + length > len(tokens):
            raise AnnotationError(f"span ({start}, {length}) out of bounds")
        if not tgt or cfg.delimiter in tgt:
            raise AnnotationError(f"invalid target phrase {list(tgt)!r}")
        out.extend(tokens[pos:start])
        out.append(cfg.delimiter)
        out.extend(tokens[start:start + length])
        out.append(cfg.delimiter)
        out.extend(tgt)
        out.append(cfg.delimiter)
        pos = start + length
    out.extend(tokens[pos:])
    return out


def annotate_sentence(pair, matches: Sequence[MatchRecord], entries: Mapping, cfg: AnnotationConfig | None = None) -> list[str]:
    """Annotate a sentence pair's source side with non-overlapping matches.

    ``entries`` maps entry id to :class:`~dictmt.dictionary.DictEntry`.
    """
    spans = []
    for rec in matches:
        if rec.sentence_id != pair.id:
            raise AnnotationError(f"match for sentence {rec.sentence_id} given for sentence {pair.id}")
        if rec.src_span is None:
            raise AnnotationError(f"match of entry {rec.entry_id} has no source span")
        spans.append((rec.src_span, entries[rec.entry_id].tgt_lemma_phrase))
    return annotate_tokens(pair.src_tokens, spans, cfg)


def strip_annotation(tokens: Sequence[str], cfg: AnnotationConfig | None = None) -> tuple[list[str], list[Annotation]]:
    cfg = cfg or AnnotationConfig()
    delim = cfg.delimiter
    out: list[str] = []
    found: list[Annotation] = []
    i, n = 0, len(tokens)
    while i < n:
        if tokens[i] != delim:
            out.append(tokens[i])
            i += 1
            continue
        try:
            j = tokens.index(delim, i + 1)
            k = tokens.index(delim, j + 1)
        except ValueError:
            raise AnnotationError(f"unbalanced annotation delimiter at token {i}") from None
        src, tgt = tuple(tokens[i + 1:j]), tuple(tokens[j + 1:k])
        if not src or not tgt:
            raise AnnotationError(f"empty annotation region at token {i}")
        found.append(Annotation((len(out), len(src)), src, tgt))
        out.extend(src)
        i = k + 1
    if cfg.escape:
        out = [delim if t == cfg.escape_token else t for t in out]
        found = [
            Annotation(a.src_span, tuple(delim if t == cfg.escape_token else t for t in a.src_surface), a.tgt_lemma)
            for a in found
        ]
    return out, found


def annotation_mask(tokens: Sequence[str], cfg: AnnotationConfig | None = None) -> list[bool]:
    """True for tokens strictly inside an annotation region (delimiters excluded)."""
    cfg = cfg or AnnotationConfig()
    mask = []
    inside = 0  # delimiters seen in the current region, 0..2
    for tok in tokens:
        if tok == cfg.delimiter:
            inside = (inside + 1) % 3
            mask.append(False)
        else:
            mask.append(inside > 0)
    return mask


def build_extra_annotations(corpus, entries, thresholds: FilterThresholds | None = None, manifest: SplitManifest | None = None, stats=None, exclude=()) -> list[MatchRecord]:
    """Both-side matches of frequent entries for additional training annotation.

    An entry qualifies when it passes the variant and conflict bounds, with no
    upper occurrence limit, and is not in ``exclude`` (typically the entries
    that went into the split). With a manifest, only Train sentences are used.
    """
    thresholds = thresholds or FilterThresholds()
    if stats is None:
        stats = compute_all_stats(entries, corpus)
    exclude = set(exclude)
    chosen = [e for e in entries if e.id not in exclude and thresholds.accepts_frequent(stats[e.id])]
    if not chosen:
        return []
    if manifest is not None:
        train_ids = set(manifest.ids_with(Fate.TRAIN))
        pairs = [p for p in corpus if p.id in train_ids]
    else:
        pairs = list(corpus)
    return [r for r in find_matches(pairs, chosen) if r.both]


def annotate_split(corpus, manifest: SplitManifest, matches: Iterable[MatchRecord], entries: Mapping, cfg: AnnotationConfig | None = None, extra: Iterable[MatchRecord] = ()) -> tuple[dict[str, list[list[str]]], dict[str, int]]:
    """Annotated source sides of the train, valid and test splits.

    Train and valid sentences carry their both-side matches of mix- and
    train-set entries (plus ``extra`` records on train sentences when
    ``cfg.annotate_extra``). Test sentences carry every source-side match of a
    test- or mix-set entry, as no reference is available at test time.
    Returns the annotated sentences per split and the number of annotated
    sentences per split.
    """
    cfg = cfg or AnnotationConfig()
    assignment = manifest.partition.assignment
    per_sentence: dict[int, list[MatchRecord]] = {}
    for rec in matches:
        fate = manifest.sentence_fate[rec.sentence_id]
        kind = assignment.get(rec.entry_id)
        if fate in (Fate.TRAIN, Fate.VALID):
            keep = rec.both and kind in (EntrySet.MIX, EntrySet.TRAIN)
        elif fate == Fate.TEST:
            keep = rec.src_span is not None and kind in (EntrySet.TEST, EntrySet.MIX)
        else:
            keep = False
        if keep:
            per_sentence.setdefault(rec.sentence_id, []).append(rec)
    if cfg.annotate_extra:
        for rec in extra:
            if manifest.sentence_fate[rec.sentence_id] == Fate.TRAIN:
                per_sentence.setdefault(rec.sentence_id, []).append(rec)

    out, counts = {}, {}
    for fate, name in ((Fate.TRAIN, "train"), (Fate.VALID, "valid"), (Fate.TEST, "test")):
        sents, annotated = [], 0
        for sid in manifest.ids_with(fate):
            recs = select_non_overlapping(per_sentence.get(sid, ()))
            annotated += bool(recs)
            sents.append(annotate_sentence(corpus[sid], recs, entries, cfg))
        out[name] = sents
        counts[name] = annotated
    return out, counts
