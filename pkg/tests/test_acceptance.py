"""End-to-end acceptance checks, one marker per criterion."""

import json
import os
import random
import subprocess
import sys
import time
from collections import Counter

import pytest

import brute
from dictmt.annotator import AnnotationConfig, annotate_split, annotate_tokens, strip_annotation
from dictmt.cli import main
from dictmt.corpus import Corpus, SentencePair, word_frequencies
from dictmt.dictionary import DictEntry, FilterThresholds, filter_entries, load_dictionary
from dictmt.evaluator import in_morph_subset, read_items
from dictmt.matcher import find_matches
from dictmt.segmenter import WORD_BOUNDARY, MixConfig, Segmenter, learn_bpe
from dictmt.splitter import EntrySet, Fate, assign_sentences, export_split, load_split, partition_entries
from dictmt.synthetic import generate_corpus, planted_stats_corpus, random_fixture

TED_SENTENCES = 198_000
TED_TARGETS = {"test": 3181, "valid": 1610, "train_annot": 1600}


def _criterion(n, text):
    return pytest.mark.criterion(n, text)


# -- 1 ------------------------------------------------------------------------

@_criterion(1, "filter agrees with a brute-force checker on >= 1000 entries in < 1 min")
def test_filter_matches_bruteforce(tmp_path):
    syn = planted_stats_corpus(n_entries=1200, seed=11)
    paths = syn.write(tmp_path / "data")
    start = time.perf_counter()
    common = ["--src", str(paths["src"]), "--tgt", str(paths["tgt"]),
              "--src-lemmas", str(paths["src_lemmas"]), "--tgt-lemmas", str(paths["tgt_lemmas"])]
    assert main(["stats", *common, "--dictionary", str(paths["dictionary"]), "--out", str(tmp_path / "stats.jsonl")]) == 0
    assert main(["filter", "--stats", str(tmp_path / "stats.jsonl"), "--out", str(tmp_path / "kept.jsonl")]) == 0
    elapsed = time.perf_counter() - start
    accepted = {e.id for e in load_dictionary(tmp_path / "kept.jsonl")}

    # brute force: nested loops over entries and sentences
    sentences = [(p.src_lemmas, p.tgt_tokens, p.tgt_lemmas, {x.casefold() for x in p.src_lemmas + p.tgt_lemmas})
                 for p in syn.corpus]
    expected, stats = set(), {}
    for e in syn.entries:
        first = {e.src_lemma_phrase[0].casefold(), e.tgt_lemma_phrase[0].casefold()}
        rel = [(s, tt, tl) for s, tt, tl, vocab in sentences if first & vocab]
        stats[e.id] = brute.entry_stats(e.src_lemma_phrase, e.tgt_lemma_phrase, rel)
        if brute.accepts(stats[e.id]):
            expected.add(e.id)

    disagreements = accepted ^ expected
    print(f"entries={len(syn.entries)} accepted={len(accepted)} disagreements={len(disagreements)} time={elapsed:.1f}s")
    assert len(syn.entries) >= 1000
    assert not disagreements
    assert elapsed < 60
    # the planted design really hits every bound from both sides
    occ = Counter(s[0] for s in stats.values())
    assert all(occ[k] for k in (2, 3, 80, 81))
    conf = Counter(max(s[2], s[3]) for s in stats.values())
    assert conf[9] and conf[10]
    assert any(s[1] == 1 and 3 <= s[0] <= 80 for s in stats.values())
    # and the generator's bookkeeping agrees with the scan
    for eid, p in syn.planted.items():
        exp = p.expected
        assert stats[eid] == (exp.occurrences, exp.tgt_variant_count, exp.src_only_count, exp.tgt_only_count)


# -- 2 ------------------------------------------------------------------------

@_criterion(2, "no TestSet entry matches both sides of exported training data (100 fixtures)")
def test_leak_freedom(tmp_path):
    leaks = 0
    test_entries_seen = 0
    for seed in range(100):
        syn = random_fixture(seed, max_sentences=1000)
        matches = find_matches(syn.corpus, syn.entries)
        partition = partition_entries(syn.entries, seed)
        manifest = assign_sentences(syn.corpus, matches, partition, seed)
        out = tmp_path / f"f{seed}"
        export_split(syn.corpus, manifest, out)
        test_set = [e for e in syn.entries if partition.assignment[e.id] == EntrySet.TEST]
        test_entries_seen += len(test_set)
        for name in ("train", "valid"):
            for pair in load_split(out, name):
                for e in test_set:
                    if brute.occurrences(pair.src_lemmas, e.src_lemma_phrase) and \
                       brute.occurrences(pair.tgt_lemmas, e.tgt_lemma_phrase):
                        leaks += 1
    print(f"fixtures=100 test_entries={test_entries_seen} leaks={leaks}")
    assert test_entries_seen > 0
    assert leaks == 0


# -- 3 ------------------------------------------------------------------------

def _mix_fixture(n_max=12, per_n=9):
    """Entries with exactly n both-side sentences each, no overlaps or conflicts."""
    entries, pairs = [], []
    for n in range(1, n_max + 1):
        for _ in range(per_n):
            eid = len(entries)
            entries.append(DictEntry(eid, (f"s{eid}",), (f"T{eid}",)))
            for k in range(n):
                pairs.append((("w", f"s{eid}", "x"), ("y", f"T{eid}e" if k % 2 else f"T{eid}", "z"),
                              ("w", f"s{eid}", "x"), ("y", f"T{eid}", "z")))
    for k in range(50):
        pairs.append((("w", "x"), ("y", "z"), ("w", "x"), ("y", "z")))
    corpus = Corpus(tuple(SentencePair(i, *p) for i, p in enumerate(pairs)))
    return corpus, entries


@_criterion(3, "per-entry MixSet counts follow the ceil rule; set sizes differ by <= 1")
def test_mix_split_counts_clean():
    corpus, entries = _mix_fixture()
    matches = find_matches(corpus, entries)
    n_of = Counter(r.entry_id for r in matches if r.both)
    covered, checked = set(), 0
    for seed in range(6):
        partition = partition_entries(entries, seed)
        sizes = list(partition.sizes().values())
        assert max(sizes) - min(sizes) <= 1
        manifest = assign_sentences(corpus, matches, partition, seed)
        per_entry = {}
        for sid, eid in manifest.assigned_by.items():
            if eid is not None and partition.assignment[eid] == EntrySet.MIX:
                per_entry.setdefault(eid, Counter())[manifest.sentence_fate[sid]] += 1
        for eid in partition.members(EntrySet.MIX):
            n = n_of[eid]
            got = per_entry[eid]
            assert (got[Fate.TEST], got[Fate.VALID], got[Fate.TRAIN]) == brute.mix_sizes(n), (eid, n, got)
            covered.add(n)
            checked += 1
    print(f"mix entries checked={checked} n covered={sorted(covered)}")
    assert covered == set(range(1, 13))


@_criterion(3, "per-entry MixSet counts follow the ceil rule; set sizes differ by <= 1")
def test_mix_split_counts_messy():
    checked = 0
    for seed in range(30):
        syn = random_fixture(seed, max_sentences=600)
        matches = find_matches(syn.corpus, syn.entries)
        partition = partition_entries(syn.entries, seed)
        manifest = assign_sentences(syn.corpus, matches, partition, seed)
        set_of = partition.assignment
        both = {}
        for r in matches:
            if r.both:
                both.setdefault(r.sentence_id, set()).add(r.entry_id)
        claimed = {sid for sid, es in both.items() if any(set_of[e] == EntrySet.TEST for e in es)}
        for eid in sorted(partition.members(EntrySet.MIX)):
            mine = [sid for sid, es in both.items() if eid in es and sid not in claimed]
            claimed.update(mine)
            fates = Counter(manifest.sentence_fate[s] for s in mine)
            test, valid, train = brute.mix_sizes(len(mine))
            assert fates[Fate.TEST] == test
            # the drop rule may still remove valid/train sentences
            assert fates[Fate.VALID] + fates[Fate.TRAIN] + fates[Fate.DROPPED] == valid + train
            assert fates[Fate.VALID] <= valid and fates[Fate.TRAIN] <= train
            checked += 1
    assert checked > 100


@_criterion(3, "per-entry MixSet counts follow the ceil rule; set sizes differ by <= 1")
def test_partition_sizes_balanced():
    for n in range(3, 200, 7):
        for seed in (0, 1, 2):
            sizes = partition_entries(list(range(n)), seed).sizes().values()
            assert max(sizes) - min(sizes) <= 1


# -- 4 ------------------------------------------------------------------------

@_criterion(4, "golden giraffe annotation; strip round trip on 10,000 random sentences")
def test_annotation_golden():
    src = "Tell us , what have you got against giraffes ?".split()
    lem = "tell us , what have you get against giraffe ?".split()
    pair = SentencePair(0, tuple(src), ("Sagen", "Sie", "uns", ",", "was", "haben", "Sie", "gegen", "Giraffen", "?"),
                        tuple(lem), ("sagen", "Sie", "uns", ",", "was", "haben", "Sie", "gegen", "Giraffe", "?"))
    entry = DictEntry(0, ("giraffe",), ("Giraffe",))
    corpus = Corpus((pair,))
    (rec,) = find_matches(corpus, [entry])
    assert rec.src_span == (8, 1) and rec.src_surface == ("giraffes",)
    out = annotate_tokens(src, [(rec.src_span, entry.tgt_lemma_phrase)])
    assert " ".join(out) == "Tell us , what have you got against # giraffes # Giraffe # ?"
    plain, ann = strip_annotation(out)
    assert plain == src
    assert [(a.src_surface, a.tgt_lemma) for a in ann] == [(("giraffes",), ("Giraffe",))]


@_criterion(4, "golden giraffe annotation; strip round trip on 10,000 random sentences")
def test_annotation_roundtrip_random():
    rng = random.Random(4)
    vocab = ["a", "bb", "Ccc", "d-d", "é", "##", "x#", ",", "?"]
    failures = 0
    for i in range(10_000):
        escape = i % 5 == 0
        cfg = AnnotationConfig(escape=escape)
        toks = [rng.choice(vocab + (["#"] if escape else [])) for _ in range(rng.randint(1, 15))]
        spans, pos = [], 0
        while pos < len(toks) and rng.random() < 0.6:
            start = rng.randint(pos, len(toks) - 1)
            length = rng.randint(1, min(3, len(toks) - start))
            tgt = tuple(rng.choice(vocab) for _ in range(rng.randint(1, 3)))
            spans.append(((start, length), tgt))
            pos = start + length
        annotated = annotate_tokens(toks, spans, cfg)
        plain, ann = strip_annotation(annotated, cfg)
        expected = [((s, n), tuple(toks[s:s + n]), tgt) for (s, n), tgt in spans]
        if plain != toks or [(a.src_span, a.src_surface, a.tgt_lemma) for a in ann] != expected:
            failures += 1
    print(f"sentences=10000 failures={failures}")
    assert failures == 0


# -- 5 ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def seg_corpus():
    syn = generate_corpus(n_sentences=10_000, seed=5, n_good=60, n_frequent=2, frequent_occ=(60, 80), filler_vocab=6000)
    entries = syn.entries
    matches = find_matches(syn.corpus, entries)
    kept = filter_entries(entries, {e.id: syn.planted[e.id].expected for e in entries}, FilterThresholds())
    kept_ids = {e.id for e in kept}
    partition = partition_entries(kept, 5)
    manifest = assign_sentences(syn.corpus, [m for m in matches if m.entry_id in kept_ids], partition, 5)
    annotated, _ = annotate_split(syn.corpus, manifest, [m for m in matches if m.entry_id in kept_ids],
                                  {e.id: e for e in entries})
    src = [s for name in ("train", "valid", "test") for s in annotated[name]]
    tgt = [p.tgt_tokens for p in syn.corpus]
    return syn.corpus, src, tgt


def _groups(symbols):
    out, cur = [], []
    for s in symbols:
        if s == WORD_BOUNDARY:
            out.append(cur)
            cur = []
        else:
            cur.append(s)
    out.append(cur)
    return out


@_criterion(5, "desegment(segment(x)) == x for bpe/char/mix/mix_annot; mixed keeps no rare word whole")
def test_segmentation_roundtrips(seg_corpus):
    corpus, src, tgt = seg_corpus
    assert len(corpus) == 10_000
    assert sum("#" in s for s in src) > 100
    violations = 0
    for side, data, freq in (("src", src, word_frequencies(corpus, "source")),
                             ("tgt", tgt, word_frequencies(corpus, "target"))):
        bpe = learn_bpe(data, 20_000)
        mix = MixConfig(50, freq)
        for scheme in ("bpe", "char", "mix", "mix_annot"):
            seg = Segmenter(scheme, bpe=bpe, mix=mix)
            for toks in data:
                out = seg(toks)
                if seg.invert(out) != list(toks):
                    violations += 1
                if scheme in ("mix", "mix_annot"):
                    inside = _inside(toks)
                    for tok, group, ins in zip(toks, _groups(out), inside):
                        if tok == "#" or len(tok) == 1:
                            continue
                        whole = group == [tok]
                        if whole and (freq.get(tok, 0) < 50 or (scheme == "mix_annot" and ins)):
                            violations += 1
                        if not whole and freq.get(tok, 0) >= 50 and not (scheme == "mix_annot" and ins):
                            violations += 1
    print(f"violations={violations}")
    assert violations == 0


def _inside(tokens):
    mask, state = [], 0
    for t in tokens:
        if t == "#":
            state = (state + 1) % 3
            mask.append(False)
        else:
            mask.append(state > 0)
    return mask


# -- 6 ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_run(tmp_path_factory, small_synth):
    base = tmp_path_factory.mktemp("small")
    paths = small_synth.write(base / "data")
    rc = main(["pipeline", "--src", str(paths["src"]), "--tgt", str(paths["tgt"]),
               "--src-lemmas", str(paths["src_lemmas"]), "--tgt-lemmas", str(paths["tgt_lemmas"]),
               "--dictionary", str(paths["dictionary"]), "--out-dir", str(base / "run"),
               "--schemes", "char", "--seed", "3"])
    assert rc == 0
    return base / "run"


def _oracle_report(run, kind, tmp_path):
    hyp = tmp_path / f"{kind}.hyp"
    assert main(["oracle", "--kind", kind, "--src", str(run / "test.annot.src"),
                 "--ref", str(run / "test.tgt"), "--out", str(hyp)]) == 0
    assert main(["evaluate", "--run-dir", str(run), "--hyp", str(hyp), "--json", str(tmp_path / f"{kind}.json")]) == 0
    return json.loads((tmp_path / f"{kind}.json").read_text())


@_criterion(6, "ReferenceLeak scores 100 everywhere; CopyAnnotation scores the predicted counts")
def test_metric_oracles(small_run, tmp_path):
    items = read_items(small_run / "eval_items.jsonl")
    assert items
    subsets = {"all": items,
               "one_shot": [i for i in items if i.shot_class.value == "OneShot"],
               "few_shot": [i for i in items if i.shot_class.value == "FewShot"]}
    assert subsets["one_shot"] and subsets["few_shot"]

    leak = _oracle_report(small_run, "refleak", tmp_path)
    for metric in ("exact", "lemma", "morph_adj"):
        for s in subsets:
            score = leak[metric][s]
            assert score["hits"] == score["total"] > 0, (metric, s)
    assert f"{leak['bleu']:.2f}" == "100.00"

    copy = _oracle_report(small_run, "copy", tmp_path)
    for s, its in subsets.items():
        non_morph = sum(not in_morph_subset(i) for i in its)
        assert copy["exact"][s] == {"hits": non_morph, "total": len(its), "accuracy": 100.0 * non_morph / len(its)}
        assert copy["lemma"][s]["hits"] == copy["lemma"][s]["total"] == len(its)
        assert copy["morph_adj"][s]["hits"] == 0
        assert copy["morph_adj"][s]["total"] == len(its) - non_morph > 0
    print(f"items={len(items)} copy exact={copy['exact']['all']['accuracy']:.2f}")


# -- 7 ------------------------------------------------------------------------

BLEU_PAIRS = [
    ("the cat sat on the mat", "the cat sat on the mat"),
    ("the cat sat on a mat", "the cat sat on the mat"),
    ("a cat is on the mat today", "the cat sat on the mat"),
    ("there is a cat", "there is a cat on the mat"),
    ("Giraffen sind groß und freundlich", "Giraffen sind sehr groß"),
    ("was haben Sie gegen Giraffen ?", "was haben Sie gegen Giraffen ?"),
    ("was haben Sie gegen Giraffe ?", "was haben Sie gegen Giraffen ?"),
    ("sagen Sie uns , was", "sagen Sie uns , was haben Sie gegen Giraffen ?"),
    ("the the the the the", "the cat is here"),
    ("one two three four five six", "one two three four five six seven"),
    ("x y z", "x y z"),
    ("dies ist ein Test", "das ist ein Test"),
    ("Der Hund bellt laut", "der Hund bellt laut"),
    ("ein konzentrischer Kreis", "ein konzentrischer Kreis ist rund"),
    ("wir sehen uns morgen wieder", "wir sehen uns morgen"),
    ("a b c d e f g h", "a b c d x f g h"),
    ("alpha beta gamma delta", "alpha beta gamma delta epsilon"),
    ("rot grün blau", "blau grün rot"),
    ("the parliament adopted the resolution", "parliament has adopted the resolution"),
    ("I like green tea very much", "I very much like green tea"),
]


@_criterion(7, "corpus BLEU matches a direct formula evaluation within 0.01 on 20 pairs")
def test_bleu_parity():
    from dictmt.evaluator import bleu

    hyps = [h.split() for h, _ in BLEU_PAIRS]
    refs = [r.split() for _, r in BLEU_PAIRS]
    assert len(hyps) == 20
    ours, theirs = bleu(hyps, refs), brute.bleu(hyps, refs)
    print(f"bleu={ours:.4f} reference={theirs:.4f}")
    assert theirs > 0
    assert abs(ours - theirs) < 0.01
    # also on a few subsets, including ones where the brevity penalty bites
    for lo in range(0, 20, 4):
        a, b = bleu(hyps[lo:lo + 4], refs[lo:lo + 4]), brute.bleu(hyps[lo:lo + 4], refs[lo:lo + 4])
        assert abs(a - b) < 0.01


# -- 8 ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def ted_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("ted")
    syn = generate_corpus(n_sentences=TED_SENTENCES, seed=1)
    paths = syn.write(base / "data")
    runs, times = [], []
    for i, hashseed in enumerate(("0", "12345")):
        out = base / f"run{i}"
        cmd = [sys.executable, "-m", "dictmt", "pipeline", "--src", str(paths["src"]), "--tgt", str(paths["tgt"]),
               "--src-lemmas", str(paths["src_lemmas"]), "--tgt-lemmas", str(paths["tgt_lemmas"]),
               "--dictionary", str(paths["dictionary"]), "--out-dir", str(out), "--seed", "1"]
        env = dict(os.environ, PYTHONHASHSEED=hashseed)
        start = time.perf_counter()
        proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
        times.append(time.perf_counter() - start)
        assert proc.returncode == 0, proc.stderr
        runs.append(out)
    return runs, times


@_criterion(8, "198K-pair pipeline runs in < 10 min and is byte-identical across runs")
def test_scale_and_determinism(ted_runs):
    (a, b), times = ted_runs
    print(f"run times: {times[0]:.1f}s {times[1]:.1f}s")
    assert max(times) < 600
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b
    differing = [str(f) for f in files_a if f.name != "run.json" and (a / f).read_bytes() != (b / f).read_bytes()]
    assert not differing
    info_a, info_b = (json.loads((d / "run.json").read_text()) for d in (a, b))
    assert info_a["digests"] == info_b["digests"]
    assert info_a["status"] == "complete"
    counts = info_a["counts"]["split"]
    assert sum(counts.values()) == TED_SENTENCES


@_criterion(3, "per-entry MixSet counts follow the ceil rule; set sizes differ by <= 1")
def test_reference_sizes_on_ted_scale(ted_runs):
    (a, _), _ = ted_runs
    info = json.loads((a / "run.json").read_text())
    split, annot = info["counts"]["split"], info["counts"]["annotated_sentences"]
    got = {"test": split["Test"], "valid": split["Valid"], "train_annot": annot["train"]}
    print("ted-scale sizes", got, "targets", TED_TARGETS)
    for key, target in TED_TARGETS.items():
        assert abs(got[key] - target) <= 0.2 * target, key
    sizes = info["counts"]["partition"].values()
    assert max(sizes) - min(sizes) <= 1
