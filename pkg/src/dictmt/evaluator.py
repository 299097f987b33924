"""Rare-word accuracy (exact, lemma, morphological adjustment) and corpus BLEU."""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import LemmaTable, lemmatize_fallback
from .errors import DataError
from .matcher import fold
from .splitter import Fate, ShotClass, SplitManifest

log = logging.getLogger(__name__)

SUBSETS = ("all", "one_shot", "few_shot")
METRICS = ("exact", "lemma", "morph_adj")
_SUBSET_OF = {ShotClass.ONE_SHOT: "one_shot", ShotClass.FEW_SHOT: "few_shot"}


@dataclass(frozen=True)
class EvalItem:
    sentence_id: int
    entry_id: int
    ref_tgt_surface: tuple[str, ...]
    dict_tgt_lemma: tuple[str, ...]
    shot_class: ShotClass
    test_index: int  # line of the sentence in the exported test files

    def to_json(self) -> dict:
        return {
            "sentence_id": self.sentence_id,
            "entry_id": self.entry_id,
            "ref_tgt_surface": list(self.ref_tgt_surface),
            "dict_tgt_lemma": list(self.dict_tgt_lemma),
            "shot_class": self.shot_class.value,
            "test_index": self.test_index,
        }

    @classmethod
    def from_json(cls, obj) -> "EvalItem":
        return cls(
            obj["sentence_id"],
            obj["entry_id"],
            tuple(obj["ref_tgt_surface"]),
            tuple(obj["dict_tgt_lemma"]),
            ShotClass(obj["shot_class"]),
            obj["test_index"],
        )


def build_eval_items(manifest: SplitManifest, matches, entries: Mapping) -> list[EvalItem]:
    """One item per (test sentence, both-side matched test- or mix-set entry)."""
    test_ids = manifest.ids_with(Fate.TEST)
    index = {sid: i for i, sid in enumerate(test_ids)}
    items = []
    for rec in matches:
        if rec.sentence_id not in index or not rec.both:
            continue
        shot = manifest.shot_class.get(rec.entry_id)
        if shot not in _SUBSET_OF:
            continue
        items.append(EvalItem(
            rec.sentence_id,
            rec.entry_id,
            tuple(rec.tgt_surface),
            tuple(entries[rec.entry_id].tgt_lemma_phrase),
            shot,
            index[rec.sentence_id],
        ))
    items.sort(key=lambda it: (it.test_index, it.entry_id))
    covered = {it.sentence_id for it in items}
    missing = [sid for sid in test_ids if sid not in covered]
    if missing:
        log.warning("%d test sentences have no evaluable dictionary match", len(missing))
    return items


def write_items(path, items: Iterable[EvalItem]):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for it in items:
            f.write(json.dumps(it.to_json(), ensure_ascii=False))
            f.write("\n")


def read_items(path) -> list[EvalItem]:
    items = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if line.strip():
                try:
                    items.append(EvalItem.from_json(json.loads(line)))
                except (ValueError, KeyError) as exc:
                    raise DataError(f"{path}:{lineno}: malformed eval item ({exc})") from None
    return items


def contains(haystack: Sequence[str], needle: Sequence[str]) -> bool:
    n = len(needle)
    if n == 0:
        return False
    needle = tuple(needle)
    first = needle[0]
    for i in range(len(haystack) - n + 1):
        if haystack[i] == first and tuple(haystack[i:i + n]) == needle:
            return True
    return False


def exact_match(hyp_tokens: Sequence[str], item: EvalItem) -> bool:
    return contains(hyp_tokens, item.ref_tgt_surface)


def lemma_match(hyp_tokens: Sequence[str], item: EvalItem, lemmas: LemmaTable | Sequence[str] | None = None) -> bool:
    """Case-folded containment of the dictionary lemmas in the lemmatized hypothesis.

    ``lemmas`` is either a :class:`LemmaTable` or the hypothesis' precomputed
    lemma sequence; without it the surface forms are used.
    """
    if isinstance(lemmas, LemmaTable):
        hyp_lemmas = lemmatize_fallback(hyp_tokens, lemmas)
    elif lemmas is not None:
        if len(lemmas) != len(hyp_tokens):
            raise DataError("hypothesis lemmas do not align with its tokens")
        hyp_lemmas = lemmas
    else:
        hyp_lemmas = hyp_tokens
    return contains(fold(hyp_lemmas), fold(item.dict_tgt_lemma))


def in_morph_subset(item: EvalItem) -> bool:
    return " ".join(item.dict_tgt_lemma) != " ".join(item.ref_tgt_surface)


@dataclass
class Score:
    hits: int = 0
    total: int = 0

    @property
    def accuracy(self) -> float | None:
        return 100.0 * self.hits / self.total if self.total else None

    def to_json(self) -> dict:
        return {"hits": self.hits, "total": self.total, "accuracy": self.accuracy}


@dataclass
class EvalReport:
    exact: dict[str, Score] = field(default_factory=lambda: {s: Score() for s in SUBSETS})
    lemma: dict[str, Score] = field(default_factory=lambda: {s: Score() for s in SUBSETS})
    morph_adj: dict[str, Score] = field(default_factory=lambda: {s: Score() for s in SUBSETS})
    bleu: float | None = None
    counts: dict[str, int] = field(default_factory=dict)
    lemma_source: str = "table"
    character: float | None = None  # filled externally if at all

    def to_json(self) -> dict:
        out = {m: {s: getattr(self, m)[s].to_json() for s in SUBSETS} for m in METRICS}
        out.update(bleu=self.bleu, counts=self.counts, lemma_source=self.lemma_source, characTER=self.character)
        return out

    def table(self) -> str:
        header1 = f"{'':6}| {'Exact match':^17}| {'Lemma match':^17}| {'Morph. Adjustment':^17}"
        header2 = f"{'':6}|" + "|".join(f" {'All':>4} {'OneS':>5} {'FewS':>5} " for _ in METRICS)
        row = f"{'acc':6}|" + "|".join(
            " " + " ".join(_fmt(getattr(self, m)[s].accuracy, w) for s, w in zip(SUBSETS, (4, 5, 5))) + " "
            for m in METRICS
        )
        counts = f"{'n':6}|" + "|".join(
            " " + " ".join(f"{getattr(self, m)[s].total:>{w}d}" for s, w in zip(SUBSETS, (4, 5, 5))) + " "
            for m in METRICS
        )
        lines = [header1, header2, row, counts]
        if self.bleu is not None:
            lines.append(f"BLEU {self.bleu:.2f}")
        return "\n".join(lines) + "\n"


def _fmt(v, width):
    return f"{'-':>{width}}" if v is None else f"{v:>{width}.0f}"


def aggregate(
    items: Sequence[EvalItem],
    hyps: Sequence[Sequence[str]],
    refs: Sequence[Sequence[str]] | None = None,
    lemma_table: LemmaTable | None = None,
    hyp_lemmas: Sequence[Sequence[str]] | None = None,
) -> EvalReport:
    """Score hypotheses aligned line by line with the exported test set.

    Hypothesis lemmas come from ``hyp_lemmas`` when given, otherwise from
    ``lemma_table`` (identity lookup if neither is given).
    """
    if refs is not None and len(refs) != len(hyps):
        raise DataError(f"{len(hyps)} hypotheses for {len(refs)} test sentences")
    n_lines = max((it.test_index for it in items), default=-1) + 1
    if len(hyps) < n_lines:
        raise DataError(f"{len(hyps)} hypotheses but items reference line {n_lines - 1}")
    if hyp_lemmas is not None:
        if len(hyp_lemmas) != len(hyps):
            raise DataError("hypothesis lemma file does not align with hypotheses")
        source = "file"
    else:
        table = lemma_table or LemmaTable()
        hyp_lemmas = [None] * len(hyps)
        for it in items:
            if hyp_lemmas[it.test_index] is None:
                hyp_lemmas[it.test_index] = lemmatize_fallback(hyps[it.test_index], table)
        source = "table"

    report = EvalReport(lemma_source=source)
    for it in items:
        subsets = ("all", _SUBSET_OF[it.shot_class])
        hyp = hyps[it.test_index]
        ex = exact_match(hyp, it)
        lm = lemma_match(hyp, it, hyp_lemmas[it.test_index])
        morph = in_morph_subset(it)
        for s in subsets:
            report.exact[s].total += 1
            report.exact[s].hits += ex
            report.lemma[s].total += 1
            report.lemma[s].hits += lm
            if morph:
                report.morph_adj[s].total += 1
                report.morph_adj[s].hits += ex
    report.counts = {
        "items": len(items),
        "one_shot": report.exact["one_shot"].total,
        "few_shot": report.exact["few_shot"].total,
        "morph_subset": report.morph_adj["all"].total,
        "sentences": len(hyps),
    }
    if refs is not None:
        report.bleu = bleu(hyps, refs)
    return report


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_stats(hyps, refs, max_n: int = 4):
    if len(hyps) != len(refs):
        raise DataError(f"{len(hyps)} hypotheses for {len(refs)} references")
    matches, totals = [0] * max_n, [0] * max_n
    hyp_len = ref_len = 0
    for hyp, ref in zip(hyps, refs):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            h, r = _ngrams(hyp, n), _ngrams(ref, n)
            totals[n - 1] += sum(h.values())
            matches[n - 1] += sum(min(c, r[g]) for g, c in h.items())
    return matches, totals, hyp_len, ref_len


def bleu(hyps: Sequence[Sequence[str]], refs: Sequence[Sequence[str]], max_n: int = 4) -> float:
    """Unsmoothed corpus BLEU on tokenized, case-sensitive input, in [0, 100]."""
    matches, totals, hyp_len, ref_len = bleu_stats(hyps, refs, max_n)
    if hyp_len == 0 or any(m == 0 for m in matches):
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matches, totals)) / max_n
    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_p)
